#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <vector>

namespace sphereflow {

using Vec = Eigen::VectorXd;
using Batch = std::vector<Vec>;

/// Below this angle slerp and its velocity switch to the first-order
/// (linear) forms; sin(theta) division is ill-conditioned there.
inline constexpr double kSmallAngle = 1e-4;
/// Pairs closer than this to antipodal have no unique geodesic.
inline constexpr double kAntipodalGuard = 1e-6;
/// Relative on-sphere residual accepted by SpherePoint.
inline constexpr double kSphereTolerance = 1e-9;
/// Norms below this are treated as the zero vector.
inline constexpr double kZeroNorm = 1e-30;

/// A point on the radius-r hypersphere centered at the origin.
class SpherePoint {
 public:
  /// Throws OffSphere when | ||vector|| - radius | > 1e-9 * radius.
  SpherePoint(Vec vector, double radius);

  const Vec& vector() const noexcept { return vector_; }
  double radius() const noexcept { return radius_; }
  Eigen::Index dim() const noexcept { return vector_.size(); }

 private:
  Vec vector_;
  double radius_;
};

/// A vector in the tangent space at `base`.
struct TangentVector {
  SpherePoint base;
  Vec direction;
};

/// Angle in [0, pi].
class Angle {
 public:
  explicit Angle(double radians);
  double radians() const noexcept { return theta_; }

 private:
  double theta_;
};

SpherePoint project_to_sphere(const Vec& v, double radius);
std::vector<SpherePoint> project_to_sphere(const Batch& batch, double radius);

/// Angle between two nonzero vectors, independent of their magnitudes.
/// Evaluated as 2*atan2(|a^ - b^|, |a^ + b^|), which equals the clamped
/// arccos of the cosine but keeps full relative accuracy near 0 and pi.
double direction_angle(const Vec& a, const Vec& b);

Angle angle_between(const SpherePoint& a, const SpherePoint& b);

/// Great-circle interpolation from x0 (t = 0) to x1 (t = 1).
SpherePoint slerp(const SpherePoint& x0, const SpherePoint& x1, double t);

/// d/dt slerp(x0, x1, t); its norm is r * theta for every t.
TangentVector geodesic_velocity(const SpherePoint& x0, const SpherePoint& x1, double t);

/// Removes the radial component of v at base.
TangentVector tangent_project(const SpherePoint& base, const Vec& v);

/// Returns s * v / ||v||.
Vec rescale_to_norm(const Vec& v, double s);

}  // namespace sphereflow
