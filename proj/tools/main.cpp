#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphereflow/error.hpp"
#include "sphereflow/experiment.hpp"

namespace {

// CLI11 cannot bind std::optional directly for all types; collect then copy.
template <typename T>
std::optional<T> optional_of(const CLI::Option* opt, const T& value) {
  return opt->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sphereflow;
  CLI::App app{"Spherical flow matching at desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;

  TrainCommand train;
  auto* train_cmd = app.add_subcommand("train", "Train a velocity field and write a checkpoint");
  train_cmd->add_option("--config", config_path, "Config file")->required();
  auto* train_seed = train_cmd->add_option("--seed", seed, "Override the config seed");
  auto* train_out = train_cmd->add_option("--out", out_dir, "Output directory");

  SampleCommand sample;
  std::string checkpoint_path;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a checkpoint");
  sample_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required();
  sample_cmd->add_option("-n,--n", sample.n, "Number of samples")->capture_default_str();
  sample_cmd->add_option("--nfe", sample.nfe, "Euler steps")->capture_default_str();
  auto* sample_seed = sample_cmd->add_option("--seed", seed, "Noise seed");
  auto* sample_out = sample_cmd->add_option("--out", out_dir, "Output directory");
  sample_cmd->add_flag("--no-rescale", sample.no_rescale, "Skip the final norm rescale");

  EvalCommand eval;
  auto* eval_cmd = app.add_subcommand("eval", "Energy distance of samples to held-out target data");
  eval_cmd->add_option("--config", config_path, "Config file")->required();
  eval_cmd->add_option("samples", eval.samples_path, "SFV1 sample file")->required();
  eval_cmd->add_option("--reference-n", eval.reference_n, "Held-out target size")
      ->capture_default_str();
  auto* eval_out = eval_cmd->add_option("--out", out_dir, "Output directory");

  AnalyzeCommand analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Norm statistics and projection sweep");
  analyze_cmd->add_option("vectors", analyze.vectors_path, "SFV1 vector file")->required();
  analyze_cmd->add_option("--radii", analyze.radii, "Sweep radii")->delimiter(',');
  auto* analyze_out = analyze_cmd->add_option("--out", out_dir, "Output directory");

  AblateCommand ablate;
  auto* ablate_cmd = app.add_subcommand("ablate-radius", "Train one model per projection radius");
  ablate_cmd->add_option("--config", config_path, "Config file")->required();
  ablate_cmd->add_option("--radii", ablate.radii, "Radii")->delimiter(',')->required();
  ablate_cmd->add_option("--eval-n", ablate.eval_n, "Samples per evaluation")->capture_default_str();
  auto* ablate_seed = ablate_cmd->add_option("--seed", seed, "Override the config seed");
  auto* ablate_out = ablate_cmd->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      train.config_path = config_path;
      train.seed = optional_of(train_seed, seed);
      train.out_dir = optional_of(train_out, out_dir);
      cmd_train(train, std::cout);
    } else if (*sample_cmd) {
      sample.checkpoint_path = checkpoint_path;
      sample.seed = optional_of(sample_seed, seed);
      sample.out_dir = optional_of(sample_out, out_dir);
      cmd_sample(sample, std::cout);
    } else if (*eval_cmd) {
      eval.config_path = config_path;
      eval.out_dir = optional_of(eval_out, out_dir);
      cmd_eval(eval, std::cout);
    } else if (*analyze_cmd) {
      analyze.out_dir = optional_of(analyze_out, out_dir);
      cmd_analyze(analyze, std::cout);
    } else if (*ablate_cmd) {
      ablate.config_path = config_path;
      ablate.seed = optional_of(ablate_seed, seed);
      ablate.out_dir = optional_of(ablate_out, out_dir);
      cmd_ablate_radius(ablate, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
