#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "sphereflow/coupling.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/model.hpp"

namespace sphereflow {

/// One experiment. Parsed from flat `key = value` text with '#' comments.
struct ExperimentConfig {
  FlowMethod method = FlowMethod::SFM;
  bool source_projection = true;
  bool target_projection = true;
  int dim = 16;
  std::optional<double> radius;  // empty: expected_gaussian_norm(dim)

  // Target data: vMF mixture directions with a spread of norms.
  int mixture_components = 4;
  double kappa = 30.0;
  double target_norm_mean = 6.0;
  double target_norm_std = 0.5;

  int batch_size = 256;
  int ot_batch_size = 256;
  double sinkhorn_eps = 0.1;
  int sinkhorn_iters = 1000;
  double sinkhorn_tol = 1e-6;
  PairingMode pairing = PairingMode::SamplePlan;

  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.0;
  double ema_decay = 0.995;
  int hidden_width = 256;
  int hidden_layers = 3;
  int time_embed_dim = 64;

  int train_iters = 2000;
  int log_every = 10;
  int nfe = 100;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 1234;
  std::string output_dir = "out";
  // Final rescale norm for projected targets; empty means the target mean norm.
  std::optional<double> final_norm;
  bool rescale = true;

  double resolved_radius() const;
  FlowVariant variant() const;
  CouplerConfig coupler() const;
  AdamConfig adam() const;
  MlpShape shape() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace sphereflow
