#pragma once

#include <string_view>
#include <vector>

#include "sphereflow/coupling.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/random.hpp"

namespace sphereflow {

/// A point on a conditional path and the velocity the model regresses onto.
struct PathSample {
  Vec x_t;
  Vec u_t;
  double t = 0.0;
};

enum class FlowMethod { ICFM, OTCFM, SOTCFM, SFM };

std::string_view to_string(FlowMethod method);
FlowMethod parse_flow_method(std::string_view name);

/// Pairing strategy, which sides live on the sphere, and the sphere radius.
class FlowVariant {
 public:
  /// Throws ConfigError for SFM without both projections or radius <= 0.
  FlowVariant(FlowMethod method, bool source_projection, bool target_projection, double radius);

  FlowMethod method() const noexcept { return method_; }
  bool source_projection() const noexcept { return source_projection_; }
  bool target_projection() const noexcept { return target_projection_; }
  double radius() const noexcept { return radius_; }
  bool spherical() const noexcept { return method_ == FlowMethod::SFM; }

  /// Stochastic bridge width for linear paths; zero gives the deterministic path.
  double sigma = 0.0;

 private:
  FlowMethod method_;
  bool source_projection_;
  bool target_projection_;
  double radius_;
};

/// x_t = (1 - t) x0 + t x1, u_t = x1 - x0.
PathSample sample_path_linear(const Vec& x0, const Vec& x1, double t);

/// x_t = slerp(x0, x1, t), u_t its geodesic velocity.
PathSample sample_path_spherical(const SpherePoint& x0, const SpherePoint& x1, double t);

/// Pairs the batches according to the variant and draws one t ~ U[0, 1]
/// per pair. Source/target projection for the Euclidean variants is applied
/// by the caller; SFM projects both sides to the variant radius here.
std::vector<PathSample> make_training_batch(const FlowVariant& variant, const Batch& src,
                                            const Batch& tgt, const CouplerConfig& coupler,
                                            Rng& rng);

/// Mean squared Euclidean distance between predictions and u_t.
double regression_loss(const std::vector<PathSample>& batch, const Batch& predictions);

}  // namespace sphereflow
