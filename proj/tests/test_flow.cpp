#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sphereflow/flow.hpp"
#include "support.hpp"

using namespace sphereflow;
using test::vec;
using std::numbers::pi;

namespace {

Batch gaussian_batch(int n, int d, Rng& rng) {
  Batch b;
  for (int i = 0; i < n; ++i) b.push_back(test::gaussian(d, rng));
  return b;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (auto m : {FlowMethod::ICFM, FlowMethod::OTCFM, FlowMethod::SOTCFM, FlowMethod::SFM}) {
    CHECK(parse_flow_method(to_string(m)) == m);
  }
  CHECK(parse_flow_method("SOT-CFM") == FlowMethod::SOTCFM);
  CHECK(parse_flow_method("I-CFM") == FlowMethod::ICFM);
  CHECK_THROWS_KIND(parse_flow_method("ddpm"), ConfigError);
}

TEST_CASE("spherical variant requires both projections") {
  CHECK_THROWS_KIND(FlowVariant(FlowMethod::SFM, false, true, 1.0), ConfigError);
  CHECK_THROWS_KIND(FlowVariant(FlowMethod::SFM, true, false, 1.0), ConfigError);
  CHECK_THROWS_KIND(FlowVariant(FlowMethod::ICFM, false, false, 0.0), ConfigError);
  CHECK_NOTHROW(FlowVariant(FlowMethod::SFM, true, true, 2.0));
  CHECK_NOTHROW(FlowVariant(FlowMethod::SOTCFM, false, false, 2.0));
}

TEST_CASE("linear path") {
  const auto s = sample_path_linear(vec({0, 0}), vec({2, 2}), 0.5);
  CHECK(s.x_t == vec({1, 1}));
  CHECK(s.u_t == vec({2, 2}));
  CHECK(sample_path_linear(vec({3, -1}), vec({2, 2}), 0.0).x_t == vec({3, -1}));
  CHECK_THROWS_KIND(sample_path_linear(vec({0, 0}), vec({1, 1, 1}), 0.5), DimensionMismatch);

  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vec x0 = test::gaussian(9, rng), x1 = test::gaussian(9, rng);
    const double t = uniform01(rng);
    const auto p = sample_path_linear(x0, x1, t);
    CHECK((p.x_t + (1 - t) * p.u_t - x1).norm() <= 1e-12 * std::max(1.0, x1.norm()));
    // Integrating the constant velocity over unit time from x0 reaches x1.
    CHECK((x0 + p.u_t - x1).norm() <= 1e-12 * std::max(1.0, x1.norm()));
  }
}

TEST_CASE("spherical path") {
  const auto a = test::on_sphere(vec({1, 0}), 1.0);
  const auto b = test::on_sphere(vec({0, 1}), 1.0);
  const auto s = sample_path_spherical(a, b, 0.0);
  CHECK(s.x_t == a.vector());
  CHECK(std::abs(s.u_t[0]) <= 1e-15);
  CHECK(s.u_t[1] == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK_THROWS_KIND(sample_path_spherical(a, test::on_sphere(vec({-1, 0}), 1.0), 0.3), AntipodalPoints);

  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const double r = 0.5 + 20 * uniform01(rng);
    const auto x0 = test::on_sphere(test::gaussian(6, rng), r);
    const auto x1 = test::on_sphere(test::gaussian(6, rng), r);
    const double theta = angle_between(x0, x1).radians();
    const auto p = sample_path_spherical(x0, x1, uniform01(rng));
    CHECK(std::abs(p.u_t.norm() - r * theta) <= 1e-8 * r * theta);
  }

  const Vec e0 = vec({1, 0, 0}), e1 = vec({0, 1, 0});
  const double theta = 1e-6;
  const auto x0 = test::on_sphere(e0, 2.0);
  const auto x1 = test::on_sphere(std::cos(theta) * e0 + std::sin(theta) * e1, 2.0);
  const auto p = sample_path_spherical(x0, x1, 0.4);
  CHECK((p.u_t - (x1.vector() - x0.vector())).norm() <= 1e-8);
}

TEST_CASE("target speed scales linearly with the radius") {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const Vec u0 = test::gaussian(5, rng), u1 = test::gaussian(5, rng);
    const double t = uniform01(rng);
    const double s1 = sample_path_spherical(test::on_sphere(u0, 1.5), test::on_sphere(u1, 1.5), t).u_t.norm();
    const double s2 = sample_path_spherical(test::on_sphere(u0, 6.0), test::on_sphere(u1, 6.0), t).u_t.norm();
    CHECK(s2 == doctest::Approx(4.0 * s1).epsilon(1e-12));
  }
}

TEST_CASE("independent pairing is the seeded shuffle") {
  Rng data(5);
  const Batch src = gaussian_batch(4, 3, data), tgt = gaussian_batch(4, 3, data);
  const FlowVariant v(FlowMethod::ICFM, false, false, 1.0);
  Rng a(9), b(9);
  const auto ba = make_training_batch(v, src, tgt, {}, a);
  const auto bb = make_training_batch(v, src, tgt, {}, b);
  REQUIRE(ba.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ba[i].x_t == bb[i].x_t);
    CHECK(ba[i].t == bb[i].t);
    // u = x1 - x0 with x0 = src[i] and x1 some target.
    const Vec x1 = src[i] + ba[i].u_t;
    bool found = false;
    for (const auto& y : tgt) found = found || (x1 - y).norm() <= 1e-12;
    CHECK(found);
  }
  CHECK_THROWS_KIND(make_training_batch(v, src, Batch(tgt.begin(), tgt.begin() + 3), {}, a), LengthMismatch);
  CHECK_THROWS_KIND(make_training_batch(v, Batch{}, Batch{}, {}, a), EmptyBatch);
}

TEST_CASE("angular pairing ignores per-point rescaling of the source") {
  Rng data(6);
  const Batch src = gaussian_batch(8, 4, data), tgt = gaussian_batch(8, 4, data);
  Batch scaled;
  for (const auto& s : src) scaled.push_back((0.2 + 5 * uniform01(data)) * s);
  const FlowVariant v(FlowMethod::SOTCFM, false, false, 1.0);
  CouplerConfig cfg;
  cfg.mode = PairingMode::ExactAssignment;
  Rng a(3), b(3);
  const auto ba = make_training_batch(v, src, tgt, cfg, a);
  const auto bb = make_training_batch(v, scaled, tgt, cfg, b);
  for (std::size_t i = 0; i < ba.size(); ++i) {
    // Recover the target index from x1 = x0 + u.
    const Vec ya = src[i] + ba[i].u_t, yb = scaled[i] + bb[i].u_t;
    CHECK((ya - yb).norm() <= 1e-10 * std::max(1.0, ya.norm()));
  }
}

TEST_CASE("spherical training batch satisfies the path invariants") {
  Rng data(7);
  const Batch src = gaussian_batch(64, 8, data), tgt = gaussian_batch(64, 8, data);
  const double r = 3.5;
  const FlowVariant v(FlowMethod::SFM, true, true, r);
  for (auto mode : {PairingMode::SamplePlan, PairingMode::ExactAssignment}) {
    CouplerConfig cfg;
    cfg.mode = mode;
    cfg.ot_batch_size = 16;
    Rng rng(1);
    const auto batch = make_training_batch(v, src, tgt, cfg, rng);
    CHECK(batch.size() == 64);
    for (const auto& s : batch) {
      CHECK(std::abs(s.x_t.norm() - r) <= 1e-9 * r);
      CHECK(std::abs(s.u_t.dot(s.x_t)) <= 1e-6 * r * std::max(s.u_t.norm(), 1e-300));
      CHECK(s.t >= 0.0);
      CHECK(s.t <= 1.0);
    }
  }
}

TEST_CASE("regression_loss") {
  std::vector<PathSample> batch = {{vec({0, 0}), vec({1, 2}), 0.1}, {vec({1, 1}), vec({-1, 0}), 0.7}};
  CHECK(regression_loss(batch, {vec({1, 2}), vec({-1, 0})}) == 0.0);
  CHECK(regression_loss({batch[0]}, {vec({2, 2})}) == 1.0);
  CHECK_THROWS_KIND(regression_loss(batch, {vec({1, 2})}), LengthMismatch);

  Rng rng(8);
  std::vector<PathSample> rb;
  Batch preds;
  double expected = 0.0;
  for (int i = 0; i < 30; ++i) {
    rb.push_back({test::gaussian(5, rng), test::gaussian(5, rng), uniform01(rng)});
    preds.push_back(test::gaussian(5, rng));
    double sq = 0.0;
    for (int k = 0; k < 5; ++k) sq += (preds.back()[k] - rb.back().u_t[k]) * (preds.back()[k] - rb.back().u_t[k]);
    expected += sq;
  }
  CHECK(regression_loss(rb, preds) == doctest::Approx(expected / 30).epsilon(1e-13));
}
