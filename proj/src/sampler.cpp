#include "sphereflow/sampler.hpp"

#include <cmath>
#include <string>

#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

void require_steps(const SampleRunConfig& cfg) {
  if (cfg.steps < 1) throw Error(ErrorKind::ConfigError, "sampling needs steps >= 1");
}

void require_finite(const Eigen::MatrixXd& x, int step) {
  if (!x.allFinite()) {
    throw Error(ErrorKind::NonFiniteState, "non-finite state after step " + std::to_string(step));
  }
}

void check_field_shape(const Eigen::MatrixXd& v, const Eigen::MatrixXd& x) {
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "velocity field returned the wrong shape");
  }
}

BatchVelocityField lift(const VelocityField& field) {
  return [&field](const Eigen::MatrixXd& x, double t) {
    Eigen::MatrixXd v(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) v.col(c) = field(x.col(c), t);
    return v;
  };
}

}  // namespace

BatchVelocityField mlp_field(const MlpParams& params) {
  return [&params](const Eigen::MatrixXd& x, double t) { return forward_batch(params, x, t); };
}

Vec integrate_euclidean(const VelocityField& field, const Vec& x0, const SampleRunConfig& cfg) {
  return integrate_euclidean(lift(field), Eigen::MatrixXd(x0), cfg).col(0);
}

Eigen::MatrixXd integrate_euclidean(const BatchVelocityField& field, Eigen::MatrixXd x,
                                    const SampleRunConfig& cfg) {
  require_steps(cfg);
  const double h = 1.0 / cfg.steps;
  for (int k = 0; k < cfg.steps; ++k) {
    const Eigen::MatrixXd v = field(x, k * h);
    check_field_shape(v, x);
    x += h * v;
    require_finite(x, k);
  }
  return x;
}

SpherePoint integrate_spherical(const VelocityField& field, const SpherePoint& x0,
                                const SampleRunConfig& cfg,
                                const std::function<void(const SpherePoint&)>& on_step) {
  if (std::abs(x0.radius() - cfg.variant.radius()) > 1e-12 * cfg.variant.radius()) {
    throw Error(ErrorKind::RadiusMismatch, "start point radius differs from the sampling radius");
  }
  std::function<void(const Eigen::MatrixXd&)> hook;
  if (on_step) {
    hook = [&](const Eigen::MatrixXd& x) { on_step(SpherePoint(x.col(0), cfg.variant.radius())); };
  }
  const Eigen::MatrixXd out = integrate_spherical(lift(field), Eigen::MatrixXd(x0.vector()), cfg, hook);
  return SpherePoint(out.col(0), cfg.variant.radius());
}

Eigen::MatrixXd integrate_spherical(const BatchVelocityField& field, Eigen::MatrixXd x,
                                    const SampleRunConfig& cfg,
                                    const std::function<void(const Eigen::MatrixXd&)>& on_step) {
  require_steps(cfg);
  const double r = cfg.variant.radius();
  const double h = 1.0 / cfg.steps;
  for (Eigen::Index c = 0; c < x.cols(); ++c) x.col(c) = project_to_sphere(x.col(c), r).vector();
  for (int k = 0; k < cfg.steps; ++k) {
    Eigen::MatrixXd v = field(x, k * h);
    check_field_shape(v, x);
    if (!v.allFinite()) {
      throw Error(ErrorKind::NonFiniteState, "non-finite velocity at step " + std::to_string(k));
    }
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const SpherePoint base(x.col(c), r);
      const Vec u = tangent_project(base, v.col(c)).direction;
      if (cfg.sphere_step == SphereStep::Exponential) {
        const double speed = u.norm();
        if (speed * h > 0.0) {
          const double angle = speed * h / r;
          x.col(c) = std::cos(angle) * base.vector() + (std::sin(angle) * r / speed) * u;
        }
      }
      else {
        x.col(c) = base.vector() + h * u;
      }
      x.col(c) = project_to_sphere(x.col(c), r).vector();
    }
    require_finite(x, k);
    if (on_step) on_step(x);
  }
  return x;
}

Batch finalize_samples(const Batch& samples, double final_norm) {
  Batch out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(rescale_to_norm(s, final_norm));
  return out;
}

}  // namespace sphereflow
