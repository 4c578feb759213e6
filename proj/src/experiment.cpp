#include "sphereflow/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "sphereflow/error.hpp"
#include "sphereflow/eval.hpp"
#include "sphereflow/sampler.hpp"

namespace sphereflow {

namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd to_matrix(const Batch& batch) {
  Eigen::MatrixXd m(batch.front().size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = batch[j];
  return m;
}

Batch to_batch(const Eigen::MatrixXd& m) {
  Batch out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
  return out;
}

Batch projected(const Batch& batch, double radius) {
  return sphereflow::to_batch(project_to_sphere(batch, radius));
}

std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create directory '" + dir + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  return f;
}

// Writes CSV to DIR/name when a directory is given, else to `out`.
template <typename Fn>
void emit_csv(const std::optional<std::string>& dir, const std::string& name, std::ostream& out,
              Fn&& write) {
  if (!dir) {
    write(out);
    return;
  }
  auto f = open_out(fs::path(prepare_dir(*dir)) / name);
  write(f);
  if (!f) throw Error(ErrorKind::IoError, "write failed for '" + name + "'");
}

constexpr double kLossSmoothing = 0.95;

}  // namespace

VmfMixtureSpec target_mixture(const ExperimentConfig& config) {
  Rng rng = stream_rng(config.data_seed, kMixtureStream);
  return random_vmf_mixture(config.dim, static_cast<std::size_t>(config.mixture_components),
                            config.kappa, 1.0, rng);
}

Batch draw_target(const ExperimentConfig& config, const VmfMixtureSpec& mixture, std::size_t n,
                  Rng& rng) {
  return sample_vmf_dataset(mixture, n, config.target_norm_mean, config.target_norm_std, rng);
}

Batch held_out_target(const ExperimentConfig& config, std::size_t n) {
  Rng rng = stream_rng(config.data_seed, kHeldOutStream);
  return draw_target(config, target_mixture(config), n, rng);
}

double target_mean_norm(const ExperimentConfig& config) {
  Rng rng = stream_rng(config.data_seed, kReferenceStream);
  return norm_stats(draw_target(config, target_mixture(config), 10000, rng)).mean;
}

TrainResult train_model(const ExperimentConfig& config,
                        const std::function<void(const TrainLogRow&)>& on_log) {
  config.validate();
  const FlowVariant variant = config.variant();
  const CouplerConfig coupler = config.coupler();
  const VmfMixtureSpec mixture = target_mixture(config);
  const auto n = static_cast<std::size_t>(config.batch_size);
  const double r = variant.radius();

  Rng init_rng = stream_rng(config.seed, kInitStream);
  Rng src_rng = stream_rng(config.seed, kSourceStream);
  Rng tgt_rng = stream_rng(config.seed, kTargetStream);
  Rng pair_rng = stream_rng(config.seed, kPairStream);

  MlpParams params = init_mlp(config.shape(), init_rng);
  OptState state = init_opt_state(params, config.adam(), config.ema_decay);

  TrainResult result;
  double smoothed = 0.0;
  for (int it = 1; it <= config.train_iters; ++it) {
    Batch src = sample_gaussian(n, config.dim, src_rng);
    Batch tgt = draw_target(config, mixture, n, tgt_rng);
    // The spherical variant projects inside make_training_batch.
    if (!variant.spherical()) {
      if (variant.source_projection()) src = projected(src, r);
      if (variant.target_projection()) tgt = projected(tgt, r);
    }
    const auto batch = make_training_batch(variant, src, tgt, coupler, pair_rng);
    const LossAndGrad lg = loss_and_grad(params, batch);
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorKind::NonFiniteState, "training loss became non-finite at iteration " +
                                                 std::to_string(it));
    }
    adam_step(state, params, lg.grads);
    ema_update(state, params);

    smoothed = it == 1 ? lg.loss : kLossSmoothing * smoothed + (1.0 - kLossSmoothing) * lg.loss;
    if (it == 1 || it % config.log_every == 0 || it == config.train_iters) {
      const TrainLogRow row{it, lg.loss, smoothed};
      result.log.push_back(row);
      if (on_log) on_log(row);
    }
  }

  Checkpoint& ck = result.checkpoint;
  ck.variant = variant;
  ck.seed = config.seed;
  if (variant.target_projection() && config.rescale) {
    ck.final_norm = config.final_norm ? *config.final_norm : target_mean_norm(config);
  }
  ck.params = std::move(params);
  ck.ema = std::move(state.ema);
  return result;
}

SampleOutput generate_samples(const Checkpoint& checkpoint, const SampleOptions& options) {
  if (options.n == 0) throw Error(ErrorKind::ConfigError, "n: must be positive");
  if (options.nfe < 1) throw Error(ErrorKind::ConfigError, "nfe: must be positive");
  const FlowVariant& variant = checkpoint.variant;
  const MlpParams& params = options.use_ema && checkpoint.ema ? *checkpoint.ema : checkpoint.params;

  Rng rng = stream_rng(options.seed, kNoiseStream);
  Batch x0 = sample_gaussian(options.n, params.data_dim(), rng);
  if (variant.source_projection()) x0 = projected(x0, variant.radius());

  SampleRunConfig cfg;
  cfg.steps = options.nfe;
  cfg.variant = variant;
  cfg.final_norm = checkpoint.final_norm;
  cfg.use_ema = options.use_ema;

  const auto field = mlp_field(params);
  const Eigen::MatrixXd out = variant.spherical() ? integrate_spherical(field, to_matrix(x0), cfg)
                                                  : integrate_euclidean(field, to_matrix(x0), cfg);
  SampleOutput result;
  result.raw = to_batch(out);
  if (options.rescale && checkpoint.final_norm) {
    result.samples = finalize_samples(result.raw, *checkpoint.final_norm);
    result.rescaled = true;
  } else {
    result.samples = result.raw;
  }
  return result;
}

EvalReport evaluate_samples(const ExperimentConfig& config, const Batch& samples,
                            std::size_t reference_n) {
  if (samples.empty()) throw Error(ErrorKind::EmptyBatch, "no samples to evaluate");
  if (samples.front().size() != config.dim) {
    throw Error(ErrorKind::DimensionMismatch, "samples have dimension " +
                                                  std::to_string(samples.front().size()) +
                                                  ", config has " + std::to_string(config.dim));
  }
  const FlowVariant variant = config.variant();
  const double r = variant.radius();
  const Batch target = held_out_target(config, reference_n);
  Rng rng = stream_rng(config.data_seed, kBaselineStream);
  Batch source = sample_gaussian(reference_n, config.dim, rng);

  EvalReport report;
  report.sample_stats = norm_stats(samples);
  report.target_stats = norm_stats(target);
  report.sphere_space = variant.target_projection();
  if (report.sphere_space) {
    const Batch tgt_s = projected(target, r);
    report.energy_distance = energy_distance(projected(samples, r), tgt_s);
    report.baseline_energy_distance = energy_distance(projected(source, r), tgt_s);
  } else {
    if (variant.source_projection()) source = projected(source, r);
    report.energy_distance = energy_distance(samples, target);
    report.baseline_energy_distance = energy_distance(source, target);
  }
  // Rescaled files sit on a sphere of the final norm rather than r.
  if (variant.spherical()) report.norm_residual = on_sphere_residual(samples, report.sample_stats.mean);
  return report;
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
  CsvWriter csv(out, {"iter", "loss", "loss_smoothed"});
  for (const auto& row : log) {
    csv.cell(static_cast<long long>(row.iter)).cell(row.loss).cell(row.loss_smoothed);
    csv.end_row();
  }
}

void write_eval_report(std::ostream& out, const EvalReport& report) {
  CsvWriter csv(out, {"metric", "value"});
  const auto row = [&](const char* name, double v) {
    csv.cell(name).cell(v);
    csv.end_row();
  };
  csv.cell("space").cell(report.sphere_space ? "sphere" : "raw");
  csv.end_row();
  row("energy_distance", report.energy_distance);
  row("baseline_energy_distance", report.baseline_energy_distance);
  row("relative_energy_distance", report.energy_distance / report.baseline_energy_distance);
  if (report.norm_residual) row("norm_residual", *report.norm_residual);
  row("sample_norm_mean", report.sample_stats.mean);
  row("sample_norm_std", report.sample_stats.std);
  row("target_norm_mean", report.target_stats.mean);
  row("target_norm_std", report.target_stats.std);
}

void cmd_train(const TrainCommand& cmd, std::ostream& out) {
  ExperimentConfig config = load_config(cmd.config_path);
  if (cmd.seed) config.seed = *cmd.seed;
  if (cmd.out_dir) config.output_dir = *cmd.out_dir;
  const fs::path dir = prepare_dir(config.output_dir);

  auto log = open_out(dir / "train_log.csv");
  CsvWriter csv(log, {"iter", "loss", "loss_smoothed"});
  const TrainResult result = train_model(config, [&](const TrainLogRow& row) {
    csv.cell(static_cast<long long>(row.iter)).cell(row.loss).cell(row.loss_smoothed);
    csv.end_row();
  });
  if (!log.flush()) throw Error(ErrorKind::IoError, "write failed for train_log.csv");
  save_checkpoint((dir / "model.sfck").string(), result.checkpoint);
  auto echo = open_out(dir / "config.txt");
  write_config(echo, config);
  const auto& last = result.log.back();
  out << "trained " << to_string(config.method) << " for " << last.iter
      << " iterations, smoothed loss " << last.loss_smoothed << ", checkpoint "
      << (dir / "model.sfck").string() << '\n';
}

void cmd_sample(const SampleCommand& cmd, std::ostream& out) {
  if (cmd.n <= 0) throw Error(ErrorKind::ConfigError, "n: must be positive");
  if (cmd.nfe < 1) throw Error(ErrorKind::ConfigError, "nfe: must be positive");
  const Checkpoint ck = load_checkpoint(cmd.checkpoint_path);
  SampleOptions opts;
  opts.n = static_cast<std::size_t>(cmd.n);
  opts.nfe = cmd.nfe;
  opts.rescale = !cmd.no_rescale;
  opts.seed = cmd.seed ? *cmd.seed : ck.seed;
  const SampleOutput result = generate_samples(ck, opts);

  const std::string dir =
      cmd.out_dir ? *cmd.out_dir : fs::path(cmd.checkpoint_path).parent_path().string();
  const fs::path path = fs::path(prepare_dir(dir.empty() ? "." : dir)) / "samples.sfv";
  save_vectors(path.string(), result.samples);
  out << "wrote " << result.samples.size() << " samples to " << path.string()
      << (result.rescaled ? " (rescaled)" : "") << '\n';
}

void cmd_eval(const EvalCommand& cmd, std::ostream& out) {
  if (cmd.reference_n <= 0) throw Error(ErrorKind::ConfigError, "reference-n: must be positive");
  const ExperimentConfig config = load_config(cmd.config_path);
  const Batch samples = load_vectors(cmd.samples_path);
  const EvalReport report =
      evaluate_samples(config, samples, static_cast<std::size_t>(cmd.reference_n));
  emit_csv(cmd.out_dir, "eval.csv", out, [&](std::ostream& s) { write_eval_report(s, report); });
}

void cmd_analyze(const AnalyzeCommand& cmd, std::ostream& out) {
  const Batch batch = load_vectors(cmd.vectors_path);
  const NormStats stats = norm_stats(batch);
  std::vector<double> radii = cmd.radii;
  if (radii.empty()) {
    const double lo = stats.min > 0.0 ? stats.min : stats.mean;
    radii = radius_grid(lo, stats.max, 50);
  }
  const auto sweep = projection_sweep(batch, radii);
  emit_csv(cmd.out_dir, "analysis.csv", out,
           [&](std::ostream& s) { write_norm_stats_csv(s, stats, sweep); });
}

double mean_target_speed(const ExperimentConfig& config, double radius) {
  ExperimentConfig c = config;
  c.method = FlowMethod::SFM;
  c.source_projection = c.target_projection = true;
  c.radius = radius;
  const FlowVariant variant = c.variant();
  const auto n = static_cast<std::size_t>(c.batch_size);
  Rng rng = stream_rng(c.seed, kSpeedStream);
  const Batch src = sample_gaussian(n, c.dim, rng);
  const Batch tgt = draw_target(c, target_mixture(c), n, rng);
  const auto batch = make_training_batch(variant, src, tgt, c.coupler(), rng);
  double sum = 0.0;
  for (const auto& s : batch) sum += s.u_t.norm();
  return sum / static_cast<double>(batch.size());
}

std::vector<AblateRow> ablate_radius(const ExperimentConfig& config, const std::vector<double>& radii,
                                     std::size_t eval_n) {
  if (radii.empty()) throw Error(ErrorKind::ConfigError, "radii: at least one radius is required");
  for (double r : radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::ConfigError, "radii: must be positive");
  }
  if (eval_n == 0) throw Error(ErrorKind::ConfigError, "eval-n: must be positive");
  // Compare every run on the unit sphere so radii do not change the metric scale.
  const Batch target_unit = projected(held_out_target(config, eval_n), 1.0);
  std::vector<AblateRow> rows;
  for (double r : radii) {
    ExperimentConfig c = config;
    c.method = FlowMethod::SFM;
    c.source_projection = c.target_projection = true;
    c.radius = r;
    const TrainResult trained = train_model(c);
    SampleOptions opts;
    opts.n = eval_n;
    opts.nfe = c.nfe;
    opts.rescale = false;
    opts.seed = c.seed;
    const SampleOutput s = generate_samples(trained.checkpoint, opts);
    rows.push_back({r, energy_distance(projected(s.raw, 1.0), target_unit), mean_target_speed(c, r)});
  }
  return rows;
}

void cmd_ablate_radius(const AblateCommand& cmd, std::ostream& out) {
  if (cmd.eval_n <= 0) throw Error(ErrorKind::ConfigError, "eval-n: must be positive");
  ExperimentConfig config = load_config(cmd.config_path);
  if (cmd.seed) config.seed = *cmd.seed;
  const auto rows = ablate_radius(config, cmd.radii, static_cast<std::size_t>(cmd.eval_n));
  emit_csv(cmd.out_dir, "ablate_radius.csv", out, [&](std::ostream& s) {
    CsvWriter csv(s, {"radius", "energy_distance", "mean_target_speed"});
    for (const auto& row : rows) {
      csv.cell(row.radius).cell(row.energy_distance).cell(row.mean_target_speed);
      csv.end_row();
    }
  });
}

}  // namespace sphereflow
