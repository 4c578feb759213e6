#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/random.hpp"

namespace sphereflow {

struct VmfComponent {
  Vec mean_direction;  // unit norm
  double kappa = 0.0;  // concentration, >= 0
  double weight = 1.0;
};

/// Mixture of von Mises-Fisher directions placed on the radius-r sphere.
class VmfMixtureSpec {
 public:
  /// Validates unit means (1e-9), kappa >= 0, positive weights, shared
  /// dimension >= 2; weights are normalized to sum to one.
  VmfMixtureSpec(std::vector<VmfComponent> components, double radius);

  const std::vector<VmfComponent>& components() const noexcept { return components_; }
  Eigen::Index dim() const noexcept { return components_.front().mean_direction.size(); }
  double radius() const noexcept { return radius_; }

 private:
  std::vector<VmfComponent> components_;
  double radius_;
};

/// `count` components with Gaussian-random unit means, shared kappa, equal weights.
VmfMixtureSpec random_vmf_mixture(Eigen::Index dim, std::size_t count, double kappa,
                                  double radius, Rng& rng);

struct NormStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// n i.i.d. N(0, I_d) vectors.
Batch sample_gaussian(std::size_t n, Eigen::Index d, Rng& rng);

/// Large-d mean of the chi distribution with d degrees of freedom: sqrt(d - 1/2).
double expected_gaussian_norm(Eigen::Index d);

/// One unit vector from vMF(mu, kappa) via Wood's rejection sampler.
Vec sample_vmf(const Vec& mean_direction, double kappa, Rng& rng);

std::vector<SpherePoint> sample_vmf_mixture(const VmfMixtureSpec& spec, std::size_t n, Rng& rng);

/// Unprojected data: mixture directions with per-sample norms drawn from
/// N(norm_mean, norm_std^2), redrawn until positive. norm_std = 0 puts every
/// sample at norm_mean.
Batch sample_vmf_dataset(const VmfMixtureSpec& spec, std::size_t n, double norm_mean,
                         double norm_std, Rng& rng);

Batch to_batch(const std::vector<SpherePoint>& points);

NormStats norm_stats(const Batch& batch);

/// SFV1: "SFV1", u32 count, u32 dim, count*dim little-endian float32.
void save_vectors(const std::string& path, const Batch& batch);
Batch load_vectors(const std::string& path);

}  // namespace sphereflow
