#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/random.hpp"

namespace sphereflow {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Vec bias;                // out
};

/// Velocity field network: [x ; time_embedding(t)] -> SiLU hidden layers -> R^d.
struct MlpParams {
  std::vector<DenseLayer> layers;
  int time_embed_dim = 64;

  Eigen::Index data_dim() const { return layers.back().weight.rows(); }
  Eigen::Index input_dim() const { return layers.front().weight.cols(); }
  /// Layer widths from input to output.
  std::vector<Eigen::Index> widths() const;
  std::size_t parameter_count() const;
};

struct MlpShape {
  Eigen::Index data_dim = 16;
  std::vector<Eigen::Index> hidden{256, 256, 256};
  int time_embed_dim = 64;
};

/// Fan-in scaled uniform init; the output layer starts at zero unless
/// zero_output is false.
MlpParams init_mlp(const MlpShape& shape, Rng& rng, bool zero_output = true);

/// Same shapes as `like`, all zeros.
MlpParams zeros_like(const MlpParams& like);

/// All parameters in declared order: per layer, weight row-major then bias.
Vec flatten(const MlpParams& params);
void unflatten(const Vec& flat, MlpParams& params);

/// [sin(w_k t) | cos(w_k t)], w_k = 2 pi * 10^(-4 k / (dim/2 - 1)).
Vec time_embedding(double t, int dim);

Vec forward(const MlpParams& params, const Vec& x, double t);

/// Column-per-sample evaluation; t has one entry per column.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                              std::span<const double> t);

/// Same t for every column, as used by the ODE samplers.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x, double t);

struct LossAndGrad {
  double loss = 0.0;
  MlpParams grads;
};

/// Mean squared error against u_t with exact reverse-mode gradients.
LossAndGrad loss_and_grad(const MlpParams& params, const std::vector<PathSample>& batch);
double batch_loss(const MlpParams& params, const std::vector<PathSample>& batch);

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct OptState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;
  AdamConfig adam;
  MlpParams ema;
  double ema_decay = 0.9999;
};

OptState init_opt_state(const MlpParams& params, const AdamConfig& adam, double ema_decay);

/// Bias-corrected Adam update of params in place; increments state.step.
void adam_step(OptState& state, MlpParams& params, const MlpParams& grads);

/// ema <- decay * ema + (1 - decay) * params.
void ema_update(OptState& state, const MlpParams& params);

}  // namespace sphereflow
