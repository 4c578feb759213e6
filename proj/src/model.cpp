#include "sphereflow/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

void require_same_shapes(const MlpParams& a, const MlpParams& b, const char* what) {
  bool ok = a.layers.size() == b.layers.size();
  for (std::size_t l = 0; ok && l < a.layers.size(); ++l) {
    ok = a.layers[l].weight.rows() == b.layers[l].weight.rows() &&
         a.layers[l].weight.cols() == b.layers[l].weight.cols() &&
         a.layers[l].bias.size() == b.layers[l].bias.size();
  }
  if (!ok) throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": parameter shapes differ");
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

// Network input: data rows on top, time-embedding rows below.
Eigen::MatrixXd assemble_input(const MlpParams& params, const Eigen::MatrixXd& x,
                               std::span<const double> t) {
  const Eigen::Index d = params.data_dim();
  if (params.layers.empty() || x.rows() != d ||
      params.input_dim() != d + params.time_embed_dim) {
    throw Error(ErrorKind::ShapeMismatch, "input has " + std::to_string(x.rows()) +
                                              " rows, network expects " + std::to_string(d));
  }
  if (static_cast<Eigen::Index>(t.size()) != x.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "one time value per column required");
  }
  Eigen::MatrixXd in(params.input_dim(), x.cols());
  in.topRows(d) = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    in.col(c).tail(params.time_embed_dim) = time_embedding(t[static_cast<std::size_t>(c)], params.time_embed_dim);
  }
  return in;
}

struct Activations {
  std::vector<Eigen::MatrixXd> pre;   // z_l for every layer
  std::vector<Eigen::MatrixXd> post;  // a_0 = input, a_l = silu(z_l) for hidden layers
};

Activations run_forward(const MlpParams& params, Eigen::MatrixXd input) {
  Activations act;
  const std::size_t n_layers = params.layers.size();
  act.pre.reserve(n_layers);
  act.post.reserve(n_layers);
  act.post.push_back(std::move(input));
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * act.post.back();
    z.colwise() += layer.bias;
    if (l + 1 < n_layers) {
      act.post.push_back((z.array() * sigmoid(z.array())).matrix());
    }
    act.pre.push_back(std::move(z));
  }
  if (!act.pre.back().allFinite()) {
    throw Error(ErrorKind::NonFiniteActivation, "network output is not finite");
  }
  return act;
}

void split_batch(const std::vector<PathSample>& batch, Eigen::Index d, Eigen::MatrixXd& x,
                 Eigen::MatrixXd& u, std::vector<double>& t) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  x.resize(d, n);
  u.resize(d, n);
  t.resize(batch.size());
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& s = batch[static_cast<std::size_t>(c)];
    if (s.x_t.size() != d || s.u_t.size() != d) {
      throw Error(ErrorKind::ShapeMismatch, "path sample dimension differs from network");
    }
    x.col(c) = s.x_t;
    u.col(c) = s.u_t;
    t[static_cast<std::size_t>(c)] = s.t;
  }
}

template <class Fn>
void for_each_tensor(MlpParams& a, const MlpParams& b, Fn&& fn) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    fn(a.layers[l].weight.array(), b.layers[l].weight.array());
    fn(a.layers[l].bias.array(), b.layers[l].bias.array());
  }
}

}  // namespace

std::vector<Eigen::Index> MlpParams::widths() const {
  std::vector<Eigen::Index> w;
  if (layers.empty()) return w;
  w.push_back(layers.front().weight.cols());
  for (const auto& l : layers) w.push_back(l.weight.rows());
  return w;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

MlpParams init_mlp(const MlpShape& shape, Rng& rng, bool zero_output) {
  if (shape.time_embed_dim < 2 || shape.time_embed_dim % 2 != 0) {
    throw Error(ErrorKind::OddDim, "time_embed_dim must be even and >= 2");
  }
  if (shape.data_dim < 1) throw Error(ErrorKind::ShapeMismatch, "data dimension must be >= 1");
  MlpParams p;
  p.time_embed_dim = shape.time_embed_dim;
  std::vector<Eigen::Index> widths{shape.data_dim + shape.time_embed_dim};
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.data_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index in = widths[l];
    const Eigen::Index out = widths[l + 1];
    DenseLayer layer{Eigen::MatrixXd::Zero(out, in), Vec::Zero(out)};
    const bool is_output = l + 2 == widths.size();
    if (!is_output || !zero_output) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < out; ++i)
        for (Eigen::Index j = 0; j < in; ++j) layer.weight(i, j) = dist(rng);
      for (Eigen::Index i = 0; i < out; ++i) layer.bias[i] = dist(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& like) {
  MlpParams z;
  z.time_embed_dim = like.time_embed_dim;
  for (const auto& l : like.layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  }
  return z;
}

Vec flatten(const MlpParams& params) {
  Vec flat(static_cast<Eigen::Index>(params.parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) flat[k++] = l.weight(i, j);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat[k++] = l.bias[i];
  }
  return flat;
}

void unflatten(const Vec& flat, MlpParams& params) {
  if (flat.size() != static_cast<Eigen::Index>(params.parameter_count())) {
    throw Error(ErrorKind::ShapeMismatch, "flat parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = flat[k++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[k++];
  }
}

Vec time_embedding(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw Error(ErrorKind::OddDim, "time embedding dimension must be even and >= 2, got " +
                                       std::to_string(dim));
  }
  const int half = dim / 2;
  const double log_span = std::log(1e4);
  Vec out(dim);
  for (int k = 0; k < half; ++k) {
    const double exponent = half > 1 ? -static_cast<double>(k) * log_span / (half - 1) : 0.0;
    const double omega = 2.0 * std::numbers::pi * std::exp(exponent);
    out[k] = std::sin(omega * t);
    out[half + k] = std::cos(omega * t);
  }
  return out;
}

Vec forward(const MlpParams& params, const Vec& x, double t) {
  const double ts[1] = {t};
  return forward_batch(params, Eigen::MatrixXd(x), std::span<const double>(ts)).col(0);
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                              std::span<const double> t) {
  return run_forward(params, assemble_input(params, x, t)).pre.back();
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x, double t) {
  const std::vector<double> ts(static_cast<std::size_t>(x.cols()), t);
  return forward_batch(params, x, std::span<const double>(ts));
}

LossAndGrad loss_and_grad(const MlpParams& params, const std::vector<PathSample>& batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "loss_and_grad of an empty batch");
  Eigen::MatrixXd x, u;
  std::vector<double> t;
  split_batch(batch, params.data_dim(), x, u, t);
  const Activations act = run_forward(params, assemble_input(params, x, t));

  const auto n = static_cast<double>(batch.size());
  const Eigen::MatrixXd residual = act.pre.back() - u;
  LossAndGrad out{residual.squaredNorm() / n, zeros_like(params)};

  // Reverse sweep; delta holds dLoss/dz_l.
  Eigen::MatrixXd delta = (2.0 / n) * residual;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    out.grads.layers[l].weight.noalias() = delta * act.post[l].transpose();
    out.grads.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    const Eigen::ArrayXXd z = act.pre[l - 1].array();
    const Eigen::ArrayXXd s = sigmoid(z);
    Eigen::MatrixXd back = params.layers[l].weight.transpose() * delta;
    delta = (back.array() * (s * (1.0 + z * (1.0 - s)))).matrix();
  }
  return out;
}

double batch_loss(const MlpParams& params, const std::vector<PathSample>& batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "loss of an empty batch");
  Eigen::MatrixXd x, u;
  std::vector<double> t;
  split_batch(batch, params.data_dim(), x, u, t);
  return (forward_batch(params, x, t) - u).squaredNorm() / static_cast<double>(batch.size());
}

OptState init_opt_state(const MlpParams& params, const AdamConfig& adam, double ema_decay) {
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "ema decay must lie in [0, 1]");
  }
  return OptState{zeros_like(params), zeros_like(params), 0, adam, params, ema_decay};
}

void adam_step(OptState& state, MlpParams& params, const MlpParams& grads) {
  require_same_shapes(params, grads, "adam_step");
  require_same_shapes(params, state.first_moment, "adam_step");
  const AdamConfig& c = state.adam;
  ++state.step;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto update = [&](auto p, auto g, auto m, auto v) {
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v = c.beta2 * v + (1.0 - c.beta2) * g.square();
      if (c.weight_decay != 0.0) p -= c.learning_rate * c.weight_decay * p;
      p -= c.learning_rate * (m / bias1) / ((v / bias2).sqrt() + c.epsilon);
    };
    update(params.layers[l].weight.array(), grads.layers[l].weight.array(),
           state.first_moment.layers[l].weight.array(), state.second_moment.layers[l].weight.array());
    update(params.layers[l].bias.array(), grads.layers[l].bias.array(),
           state.first_moment.layers[l].bias.array(), state.second_moment.layers[l].bias.array());
  }
}

void ema_update(OptState& state, const MlpParams& params) {
  require_same_shapes(state.ema, params, "ema_update");
  const double decay = state.ema_decay;
  for_each_tensor(state.ema, params, [decay](auto ema, const auto& p) {
    ema = decay * ema + (1.0 - decay) * p;
  });
}

}  // namespace sphereflow
