#pragma once

#include <functional>
#include <optional>

#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/model.hpp"

namespace sphereflow {

/// v(x, t) for a single state.
using VelocityField = std::function<Vec(const Vec& x, double t)>;
/// v(X, t) for a column-per-sample batch sharing t.
using BatchVelocityField = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, double t)>;

enum class SphereStep {
  Retract,      // Euler step in the ambient space, then radial projection
  Exponential,  // move along the great circle by |v| h
};

struct SampleRunConfig {
  int steps = 100;  // NFE
  FlowVariant variant{FlowMethod::ICFM, false, false, 1.0};
  std::optional<double> final_norm;
  bool use_ema = true;
  SphereStep sphere_step = SphereStep::Retract;
};

BatchVelocityField mlp_field(const MlpParams& params);

/// Euler: x_{k+1} = x_k + v(x_k, k/steps) / steps.
Vec integrate_euclidean(const VelocityField& field, const Vec& x0, const SampleRunConfig& cfg);
Eigen::MatrixXd integrate_euclidean(const BatchVelocityField& field, Eigen::MatrixXd x0,
                                    const SampleRunConfig& cfg);

/// Euler on the sphere of radius cfg.variant.radius(): the field is projected
/// onto the tangent space before each step and the iterate is mapped back to
/// the sphere after it. `on_step`, when set, sees every iterate.
SpherePoint integrate_spherical(const VelocityField& field, const SpherePoint& x0,
                                const SampleRunConfig& cfg,
                                const std::function<void(const SpherePoint&)>& on_step = {});
Eigen::MatrixXd integrate_spherical(const BatchVelocityField& field, Eigen::MatrixXd x0,
                                    const SampleRunConfig& cfg,
                                    const std::function<void(const Eigen::MatrixXd&)>& on_step = {});

/// Rescales every sample to final_norm, keeping its direction.
Batch finalize_samples(const Batch& samples, double final_norm);

}  // namespace sphereflow
