#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sphereflow/checkpoint.hpp"
#include "sphereflow/config.hpp"
#include "sphereflow/datasets.hpp"

namespace sphereflow {

// Random streams derived from data_seed (shared by every run of a config)
// and from seed (per run). See stream_rng.
enum DataStream : std::uint64_t { kMixtureStream = 0, kReferenceStream = 1, kHeldOutStream = 2,
                                  kBaselineStream = 3 };
enum RunStream : std::uint64_t { kInitStream = 0, kSourceStream = 1, kTargetStream = 2,
                                 kPairStream = 3, kNoiseStream = 10, kSpeedStream = 20 };

/// The target mixture of a config; directions only, unit radius.
VmfMixtureSpec target_mixture(const ExperimentConfig& config);

/// Raw (unprojected) target data with the configured norm spread.
Batch draw_target(const ExperimentConfig& config, const VmfMixtureSpec& mixture, std::size_t n,
                  Rng& rng);

/// Target data the config holds out for evaluation.
Batch held_out_target(const ExperimentConfig& config, std::size_t n);

/// Mean norm of the raw target, estimated on a fixed reference sample.
double target_mean_norm(const ExperimentConfig& config);

struct TrainLogRow {
  int iter = 0;
  double loss = 0.0;
  double loss_smoothed = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
};

/// Full training run; a pure function of the config.
TrainResult train_model(const ExperimentConfig& config,
                        const std::function<void(const TrainLogRow&)>& on_log = {});

struct SampleOptions {
  std::size_t n = 1000;
  int nfe = 100;
  bool rescale = true;
  bool use_ema = true;
  std::uint64_t seed = 0;
};

struct SampleOutput {
  Batch raw;       // integrator output
  Batch samples;   // after the final rescale, when it applies
  bool rescaled = false;
};

/// Integrates n noise draws through the checkpoint's field with the
/// variant-appropriate integrator.
SampleOutput generate_samples(const Checkpoint& checkpoint, const SampleOptions& options);

struct EvalReport {
  bool sphere_space = false;  // comparison made on the radius-r sphere
  double energy_distance = 0.0;
  double baseline_energy_distance = 0.0;  // source vs target in the same space
  // Spherical variants: max relative deviation of sample norms from their mean.
  std::optional<double> norm_residual;
  NormStats sample_stats;
  NormStats target_stats;
};

/// Compares samples with held-out target data. Projected-target variants
/// are compared on the sphere, the rest in the raw space.
EvalReport evaluate_samples(const ExperimentConfig& config, const Batch& samples,
                            std::size_t reference_n);

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);
void write_eval_report(std::ostream& out, const EvalReport& report);

// Subcommand drivers. CSV goes to `out` when no output directory is given.

struct TrainCommand {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};
void cmd_train(const TrainCommand& cmd, std::ostream& out);

struct SampleCommand {
  std::string checkpoint_path;
  long long n = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int nfe = 100;
  bool no_rescale = false;
};
void cmd_sample(const SampleCommand& cmd, std::ostream& out);

struct EvalCommand {
  std::string config_path;
  std::string samples_path;
  long long reference_n = 2000;
  std::optional<std::string> out_dir;
};
void cmd_eval(const EvalCommand& cmd, std::ostream& out);

struct AnalyzeCommand {
  std::string vectors_path;
  std::vector<double> radii;  // empty: 50-point grid spanning the norms
  std::optional<std::string> out_dir;
};
void cmd_analyze(const AnalyzeCommand& cmd, std::ostream& out);

struct AblateCommand {
  std::string config_path;
  std::vector<double> radii;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  long long eval_n = 1000;
};

struct AblateRow {
  double radius = 0.0;
  double energy_distance = 0.0;
  double mean_target_speed = 0.0;
};

/// Mean |u_t| over one fixed SFM training batch at the given radius.
double mean_target_speed(const ExperimentConfig& config, double radius);

std::vector<AblateRow> ablate_radius(const ExperimentConfig& config, const std::vector<double>& radii,
                                     std::size_t eval_n);
void cmd_ablate_radius(const AblateCommand& cmd, std::ostream& out);

}  // namespace sphereflow
