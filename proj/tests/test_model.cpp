#include <cmath>

#include "doctest.h"
#include "model_oracles.hpp"
#include "sphereflow/model.hpp"
#include "support.hpp"

using namespace sphereflow;
using test::vec;

namespace {

MlpParams small_net(Rng& rng, Eigen::Index d = 3, std::vector<Eigen::Index> hidden = {8, 8}, int temb = 4) {
  MlpShape s;
  s.data_dim = d;
  s.hidden = std::move(hidden);
  s.time_embed_dim = temb;
  return init_mlp(s, rng, false);
}

std::vector<PathSample> random_batch(int n, Eigen::Index d, Rng& rng) {
  std::vector<PathSample> b;
  for (int i = 0; i < n; ++i) b.push_back({test::gaussian(d, rng), test::gaussian(d, rng), uniform01(rng)});
  return b;
}

}  // namespace

TEST_CASE("time_embedding") {
  CHECK(time_embedding(0.0, 4) == vec({0, 0, 1, 1}));
  CHECK_THROWS_KIND(time_embedding(0.5, 5), OddDim);
  CHECK_THROWS_KIND(time_embedding(0.5, 0), OddDim);
  for (double t : {0.0, 0.1, 0.37, 0.99, 1.0}) {
    const Vec e = time_embedding(t, 64);
    CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
  }
  const Vec e = time_embedding(0.37, 8);
  for (int k = 0; k < 4; ++k) {
    const double w = 2.0 * std::numbers::pi * std::pow(10000.0, -k / 3.0);
    CHECK(e[k] == doctest::Approx(std::sin(w * 0.37)).epsilon(1e-13));
    CHECK(e[4 + k] == doctest::Approx(std::cos(w * 0.37)).epsilon(1e-13));
  }
  // A single frequency pair uses omega = 2 pi.
  const Vec two = time_embedding(0.25, 2);
  CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward") {
  Rng rng(1);
  MlpShape shape;
  shape.data_dim = 5;
  shape.hidden = {32, 32};
  shape.time_embed_dim = 8;
  const MlpParams zero_out = init_mlp(shape, rng);
  CHECK(forward(zero_out, test::gaussian(5, rng), 0.3) == Vec::Zero(5));
  CHECK(zero_out.widths() == std::vector<Eigen::Index>{13, 32, 32, 5});

  const MlpParams p = small_net(rng, 5, {16, 12}, 6);
  const Vec x = test::gaussian(5, rng);
  CHECK(forward(p, x, 0.4) == forward(p, x, 0.4));
  for (int k = 0; k < 20; ++k) {
    const Vec xi = test::gaussian(5, rng);
    const double t = uniform01(rng);
    CHECK(test::rel_err(forward(p, xi, t), test::naive_forward(p, xi, t)) <= 1e-12);
  }
  CHECK_THROWS_KIND(forward(p, test::gaussian(4, rng), 0.1), ShapeMismatch);

  MlpParams bad = p;
  bad.layers.back().bias[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_KIND(forward(bad, x, 0.1), NonFiniteActivation);
}

TEST_CASE("forward_batch agrees with single evaluations") {
  Rng rng(2);
  const MlpParams p = small_net(rng);
  Eigen::MatrixXd X(3, 7);
  std::vector<double> ts;
  for (int c = 0; c < 7; ++c) {
    X.col(c) = test::gaussian(3, rng);
    ts.push_back(uniform01(rng));
  }
  const Eigen::MatrixXd Y = forward_batch(p, X, ts);
  for (int c = 0; c < 7; ++c) CHECK(test::rel_err(Y.col(c), forward(p, X.col(c), ts[c])) <= 1e-14);
}

TEST_CASE("flatten round-trip") {
  Rng rng(3);
  const MlpParams p = small_net(rng);
  const Vec flat = flatten(p);
  CHECK(static_cast<std::size_t>(flat.size()) == p.parameter_count());
  MlpParams q = zeros_like(p);
  unflatten(flat, q);
  CHECK(flatten(q) == flat);
  CHECK_THROWS_KIND(unflatten(Vec::Zero(3), q), ShapeMismatch);
}

TEST_CASE("loss_and_grad matches finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpParams p = small_net(rng, 2 + trial, {6 + trial, 5}, 4);
    const auto batch = random_batch(5, 2 + trial, rng);
    CHECK(test::gradient_check(p, batch) < 1e-4);
    CHECK(loss_and_grad(p, batch).loss == doctest::Approx(batch_loss(p, batch)).epsilon(1e-14));
  }
  CHECK_THROWS_KIND(loss_and_grad(small_net(rng), {}), EmptyBatch);
}

TEST_CASE("loss_and_grad at a zero residual") {
  Rng rng(5);
  MlpShape shape;
  shape.data_dim = 3;
  shape.hidden = {4};
  shape.time_embed_dim = 2;
  const MlpParams p = init_mlp(shape, rng);  // zero output layer: predicts 0
  std::vector<PathSample> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({test::gaussian(3, rng), Vec::Zero(3), uniform01(rng)});
  const auto lg = loss_and_grad(p, batch);
  CHECK(lg.loss == 0.0);
  CHECK(flatten(lg.grads).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicating the batch leaves loss and gradients unchanged") {
  Rng rng(6);
  const MlpParams p = small_net(rng);
  const auto batch = random_batch(6, 3, rng);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  const auto a = loss_and_grad(p, batch);
  const auto b = loss_and_grad(p, twice);
  CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-14));
  CHECK(test::rel_err(flatten(b.grads), flatten(a.grads)) <= 1e-13);
}

namespace {

MlpParams scalar_param(double w) {
  MlpParams p;
  p.time_embed_dim = 0;
  p.layers.push_back({Eigen::MatrixXd::Constant(1, 1, w), Vec::Zero(1)});
  return p;
}

}  // namespace

TEST_CASE("adam_step") {
  Rng rng(7);
  MlpParams p = small_net(rng);
  OptState s = init_opt_state(p, {}, 0.9);
  const Vec before = flatten(p);
  adam_step(s, p, zeros_like(p));
  CHECK(flatten(p) == before);
  CHECK(s.step == 1);
  CHECK_THROWS_KIND(adam_step(s, p, small_net(rng, 4)), ShapeMismatch);

  // f(w) = w^2 from w = 1.
  MlpParams w = scalar_param(1.0);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  OptState ws = init_opt_state(w, cfg, 0.0);
  for (int k = 0; k < 200; ++k) {
    MlpParams g = scalar_param(2.0 * w.layers[0].weight(0, 0));
    adam_step(ws, w, g);
  }
  CHECK(std::abs(w.layers[0].weight(0, 0)) < 1e-3);

  MlpParams a = small_net(rng), b = a;
  OptState sa = init_opt_state(a, {}, 0.9), sb = sa;
  const MlpParams g = small_net(rng);
  adam_step(sa, a, g);
  adam_step(sb, b, g);
  CHECK(flatten(a) == flatten(b));
}

TEST_CASE("ema_update") {
  Rng rng(8);
  MlpParams p = small_net(rng);
  const MlpParams q = small_net(rng);
  OptState s = init_opt_state(p, {}, 0.0);
  ema_update(s, q);
  CHECK(flatten(s.ema) == flatten(q));

  s = init_opt_state(p, {}, 1.0);
  ema_update(s, q);
  CHECK(flatten(s.ema) == flatten(p));

  s = init_opt_state(p, {}, 0.9);
  for (int k = 0; k < 150; ++k) ema_update(s, q);
  CHECK((flatten(s.ema) - flatten(q)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_KIND(ema_update(s, small_net(rng, 4)), ShapeMismatch);
}

TEST_CASE("full-batch Adam halves the loss on a fixed tiny batch") {
  Rng rng(9);
  MlpShape shape;
  shape.data_dim = 4;
  shape.hidden = {32, 32};
  shape.time_embed_dim = 8;
  MlpParams p = init_mlp(shape, rng);
  const auto batch = random_batch(16, 4, rng);
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  OptState s = init_opt_state(p, cfg, 0.99);
  const double initial = batch_loss(p, batch);
  for (int k = 0; k < 100; ++k) adam_step(s, p, loss_and_grad(p, batch).grads);
  CHECK(batch_loss(p, batch) <= 0.5 * initial);
}

TEST_CASE("a training step is a pure function of its inputs") {
  Rng rng(10);
  const MlpParams p0 = small_net(rng);
  const auto batch = random_batch(8, 3, rng);
  auto step = [&] {
    MlpParams p = p0;
    OptState s = init_opt_state(p, {}, 0.9);
    for (int k = 0; k < 3; ++k) {
      adam_step(s, p, loss_and_grad(p, batch).grads);
      ema_update(s, p);
    }
    return std::pair{flatten(p), flatten(s.ema)};
  };
  CHECK(step() == step());
}
