#include "sphereflow/geometry.hpp"

#include <cmath>
#include <string>

#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

void require_positive_radius(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::NonPositiveRadius, "radius must be positive and finite, got " +
                                                  std::to_string(radius));
  }
}

double checked_norm(const Vec& v) {
  const double n = v.norm();
  if (!(n >= kZeroNorm)) {
    throw Error(ErrorKind::ZeroVector, "vector norm below " + std::to_string(kZeroNorm));
  }
  return n;
}

void require_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "t must lie in [0, 1], got " + std::to_string(t));
  }
}

// Shared radius/dimension validation for the geodesic operations. Returns theta.
double checked_pair_angle(const SpherePoint& x0, const SpherePoint& x1) {
  if (x0.dim() != x1.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "points have dimensions " +
                                                  std::to_string(x0.dim()) + " and " +
                                                  std::to_string(x1.dim()));
  }
  const double r0 = x0.radius();
  const double r1 = x1.radius();
  if (std::abs(r0 - r1) > 1e-12 * std::max(r0, r1)) {
    throw Error(ErrorKind::RadiusMismatch,
                "radii " + std::to_string(r0) + " and " + std::to_string(r1) + " differ");
  }
  return direction_angle(x0.vector(), x1.vector());
}

double checked_geodesic_angle(const SpherePoint& x0, const SpherePoint& x1) {
  const double theta = checked_pair_angle(x0, x1);
  if (theta >= std::numbers::pi - kAntipodalGuard) {
    throw Error(ErrorKind::AntipodalPoints,
                "geodesic undefined for theta = " + std::to_string(theta));
  }
  return theta;
}

Vec linear_fallback(const SpherePoint& x0, const SpherePoint& x1, double t) {
  if (t == 0.0) return x0.vector();
  if (t == 1.0) return x1.vector();
  Vec v = (1.0 - t) * x0.vector() + t * x1.vector();
  // Chord midpoint has norm r*cos(theta/2) > 0 for theta < kSmallAngle.
  return (x0.radius() / v.norm()) * v;
}

Vec slerp_at(const SpherePoint& x0, const SpherePoint& x1, double t, double theta) {
  if (theta < kSmallAngle) return linear_fallback(x0, x1, t);
  const double s = std::sin(theta);
  return (std::sin((1.0 - t) * theta) / s) * x0.vector() +
         (std::sin(t * theta) / s) * x1.vector();
}

}  // namespace

SpherePoint::SpherePoint(Vec vector, double radius) : vector_(std::move(vector)), radius_(radius) {
  require_positive_radius(radius_);
  if (!vector_.allFinite()) {
    throw Error(ErrorKind::OffSphere, "non-finite component");
  }
  const double residual = std::abs(vector_.norm() - radius_);
  if (residual > kSphereTolerance * radius_) {
    throw Error(ErrorKind::OffSphere, "norm residual " + std::to_string(residual) +
                                          " exceeds tolerance at radius " +
                                          std::to_string(radius_));
  }
}

Angle::Angle(double radians) : theta_(radians) {
  if (!(radians >= 0.0 && radians <= std::numbers::pi)) {
    throw Error(ErrorKind::InvalidArgument, "angle outside [0, pi]: " + std::to_string(radians));
  }
}

SpherePoint project_to_sphere(const Vec& v, double radius) {
  require_positive_radius(radius);
  const double n = checked_norm(v);
  return SpherePoint((radius / n) * v, radius);
}

std::vector<SpherePoint> project_to_sphere(const Batch& batch, double radius) {
  std::vector<SpherePoint> out;
  out.reserve(batch.size());
  for (const auto& v : batch) out.push_back(project_to_sphere(v, radius));
  return out;
}

double direction_angle(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "vectors have dimensions " +
                                                  std::to_string(a.size()) + " and " +
                                                  std::to_string(b.size()));
  }
  const Vec ua = a / checked_norm(a);
  const Vec ub = b / checked_norm(b);
  const double theta = 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
  return std::min(theta, std::numbers::pi);
}

Angle angle_between(const SpherePoint& a, const SpherePoint& b) {
  return Angle(checked_pair_angle(a, b));
}

SpherePoint slerp(const SpherePoint& x0, const SpherePoint& x1, double t) {
  require_t(t);
  const double theta = checked_geodesic_angle(x0, x1);
  return SpherePoint(slerp_at(x0, x1, t, theta), x0.radius());
}

TangentVector geodesic_velocity(const SpherePoint& x0, const SpherePoint& x1, double t) {
  require_t(t);
  const double theta = checked_geodesic_angle(x0, x1);
  SpherePoint base(slerp_at(x0, x1, t, theta), x0.radius());
  if (theta < kSmallAngle) {
    // First-order limit x1 - x0, with its O(r*theta^2) radial part removed so the
    // result stays in the tangent space of the renormalized base point.
    return tangent_project(base, x1.vector() - x0.vector());
  }
  const double scale = theta / std::sin(theta);
  Vec dir = scale * (-std::cos((1.0 - t) * theta) * x0.vector() +
                     std::cos(t * theta) * x1.vector());
  return TangentVector{std::move(base), std::move(dir)};
}

TangentVector tangent_project(const SpherePoint& base, const Vec& v) {
  if (v.size() != base.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "vector dimension " + std::to_string(v.size()) +
                                                  " vs base dimension " +
                                                  std::to_string(base.dim()));
  }
  const double r2 = base.radius() * base.radius();
  Vec dir = v - (v.dot(base.vector()) / r2) * base.vector();
  return TangentVector{base, std::move(dir)};
}

Vec rescale_to_norm(const Vec& v, double s) {
  require_positive_radius(s);
  return (s / checked_norm(v)) * v;
}

}  // namespace sphereflow
