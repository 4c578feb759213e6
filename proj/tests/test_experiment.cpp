#include <sstream>

#include "doctest.h"
#include "sphereflow/eval.hpp"
#include "sphereflow/experiment.hpp"
#include "support.hpp"

using namespace sphereflow;

namespace {

ExperimentConfig tiny(FlowMethod method, bool projected) {
  ExperimentConfig c;
  c.method = method;
  c.source_projection = c.target_projection = projected;
  c.dim = 4;
  c.batch_size = 32;
  c.ot_batch_size = 16;
  c.hidden_width = 16;
  c.hidden_layers = 2;
  c.time_embed_dim = 4;
  c.train_iters = 30;
  c.log_every = 10;
  c.nfe = 10;
  return c;
}

}  // namespace

TEST_CASE("training is reproducible") {
  const auto c = tiny(FlowMethod::SFM, true);
  const auto a = train_model(c);
  const auto b = train_model(c);
  std::ostringstream la, lb;
  write_train_log(la, a.log);
  write_train_log(lb, b.log);
  CHECK(la.str() == lb.str());
  CHECK(flatten(a.checkpoint.params) == flatten(b.checkpoint.params));
  REQUIRE(a.log.size() == 4);
  CHECK(a.log.front().iter == 1);
  CHECK(a.log.back().iter == 30);
  CHECK(a.checkpoint.final_norm.has_value());
  CHECK(*a.checkpoint.final_norm == doctest::Approx(c.target_norm_mean).epsilon(0.02));

  auto other = c;
  other.seed = 5;
  CHECK(flatten(train_model(other).checkpoint.params) != flatten(a.checkpoint.params));
}

TEST_CASE("every variant trains and samples") {
  for (auto m : {FlowMethod::ICFM, FlowMethod::OTCFM, FlowMethod::SOTCFM, FlowMethod::SFM}) {
    for (bool projected : {false, true}) {
      if (m == FlowMethod::SFM && !projected) continue;
      const auto c = tiny(m, projected);
      const auto t = train_model(c);
      SampleOptions opts;
      opts.n = 50;
      opts.nfe = 5;
      const auto s = generate_samples(t.checkpoint, opts);
      CHECK(s.samples.size() == 50);
      CHECK(s.rescaled == projected);
      const auto report = evaluate_samples(c, s.samples, 100);
      CHECK(report.energy_distance >= 0.0);
      CHECK(report.sphere_space == projected);
    }
  }
}

TEST_CASE("spherical samples stay on the sphere until rescaled") {
  auto c = tiny(FlowMethod::SFM, true);
  const auto t = train_model(c);
  SampleOptions opts;
  opts.n = 200;
  opts.nfe = 20;
  const auto s = generate_samples(t.checkpoint, opts);
  CHECK(on_sphere_residual(s.raw, c.resolved_radius()) <= 1e-9);
  CHECK(on_sphere_residual(s.samples, *t.checkpoint.final_norm) <= 1e-12);
  opts.rescale = false;
  const auto raw = generate_samples(t.checkpoint, opts);
  CHECK_FALSE(raw.rescaled);
  CHECK(raw.samples == s.raw);
  opts.n = 0;
  CHECK_THROWS_KIND(generate_samples(t.checkpoint, opts), ConfigError);
}

TEST_CASE("target speed is linear in the radius") {
  const auto c = tiny(FlowMethod::SFM, true);
  const double r = 1.7;
  CHECK(mean_target_speed(c, 2 * r) == 2 * mean_target_speed(c, r));
  CHECK(mean_target_speed(c, 120.0) ==
        doctest::Approx(120.0 / 45.25 * mean_target_speed(c, 45.25)).epsilon(1e-12));
}

TEST_CASE("radius ablation") {
  auto c = tiny(FlowMethod::SFM, true);
  c.train_iters = 10;
  const auto rows = ablate_radius(c, {1.0, 2.0, 4.0}, 64);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].mean_target_speed == 2 * rows[0].mean_target_speed);
  for (const auto& row : rows) CHECK(row.energy_distance >= 0.0);
  CHECK_THROWS_KIND(ablate_radius(c, {1.0, -1.0}, 64), ConfigError);
  CHECK_THROWS_KIND(ablate_radius(c, {}, 64), ConfigError);
}

TEST_CASE("evaluation rejects mismatched samples") {
  const auto c = tiny(FlowMethod::ICFM, false);
  CHECK_THROWS_KIND(evaluate_samples(c, {}, 10), EmptyBatch);
  CHECK_THROWS_KIND(evaluate_samples(c, {test::vec({1, 2})}, 10), DimensionMismatch);
}
