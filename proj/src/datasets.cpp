#include "sphereflow/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

constexpr std::string_view kVectorMagic = "SFV1";

double beta_sample(double a, double b, Rng& rng) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

// Uniform unit vector orthogonal to the unit vector mu.
Vec orthogonal_direction(const Vec& mu, Rng& rng) {
  while (true) {
    Vec v(mu.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = standard_normal(rng);
    v -= v.dot(mu) * mu;
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

}  // namespace

VmfMixtureSpec::VmfMixtureSpec(std::vector<VmfComponent> components, double radius)
    : components_(std::move(components)), radius_(radius) {
  if (components_.empty()) throw Error(ErrorKind::InvalidArgument, "mixture has no components");
  if (!(radius_ > 0.0)) throw Error(ErrorKind::NonPositiveRadius, "mixture radius must be positive");
  const Eigen::Index d = components_.front().mean_direction.size();
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "vMF sampling needs dimension >= 2");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean_direction.size() != d) {
      throw Error(ErrorKind::DimensionMismatch, "mixture means have different dimensions");
    }
    if (std::abs(c.mean_direction.norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::InvalidArgument, "mixture mean direction is not unit norm");
    }
    if (!(c.kappa >= 0.0) || !std::isfinite(c.kappa)) {
      throw Error(ErrorKind::InvalidArgument, "kappa must be finite and >= 0");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw Error(ErrorKind::InvalidArgument, "mixture weights must be positive");
    }
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;
}

VmfMixtureSpec random_vmf_mixture(Eigen::Index dim, std::size_t count, double kappa,
                                  double radius, Rng& rng) {
  std::vector<VmfComponent> comps;
  for (std::size_t k = 0; k < count; ++k) {
    Vec mu(dim);
    do {
      for (Eigen::Index i = 0; i < dim; ++i) mu[i] = standard_normal(rng);
    } while (mu.norm() < 1e-12);
    mu.normalize();
    comps.push_back({std::move(mu), kappa, 1.0});
  }
  return VmfMixtureSpec(std::move(comps), radius);
}

Batch sample_gaussian(std::size_t n, Eigen::Index d, Rng& rng) {
  Batch out(n, Vec(d));
  for (auto& v : out)
    for (Eigen::Index k = 0; k < d; ++k) v[k] = standard_normal(rng);
  return out;
}

double expected_gaussian_norm(Eigen::Index d) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  return std::sqrt(static_cast<double>(d) - 0.5);
}

Vec sample_vmf(const Vec& mu, double kappa, Rng& rng) {
  const auto p = static_cast<double>(mu.size());
  const double m = p - 1.0;
  // Wood (1994): sample w = <x, mu> by rejection, then a uniform tangent direction.
  // b is written in the cancellation-free form of (-2k + sqrt(4k^2 + m^2)) / m.
  const double b = m / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);
  double w = 0.0;
  while (true) {
    const double z = beta_sample(m / 2.0, m / 2.0, rng);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform01(rng);
    if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  const Vec v = orthogonal_direction(mu, rng);
  Vec x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return x / x.norm();
}

std::vector<SpherePoint> sample_vmf_mixture(const VmfMixtureSpec& spec, std::size_t n, Rng& rng) {
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : spec.components()) cumulative.push_back(acc += c.weight);
  std::vector<SpherePoint> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = uniform01(rng) * acc;
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin()),
        cumulative.size() - 1);
    const auto& comp = spec.components()[k];
    out.push_back(project_to_sphere(sample_vmf(comp.mean_direction, comp.kappa, rng), spec.radius()));
  }
  return out;
}

Batch sample_vmf_dataset(const VmfMixtureSpec& spec, std::size_t n, double norm_mean,
                         double norm_std, Rng& rng) {
  if (!(norm_mean > 0.0) || !(norm_std >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "norm_mean must be positive and norm_std >= 0");
  }
  const auto points = sample_vmf_mixture(spec, n, rng);
  Batch out;
  out.reserve(n);
  for (const auto& p : points) {
    double s = norm_mean;
    if (norm_std > 0.0) {
      do {
        s = norm_mean + norm_std * standard_normal(rng);
      } while (s <= 0.0);
    }
    out.push_back((s / spec.radius()) * p.vector());
  }
  return out;
}

Batch to_batch(const std::vector<SpherePoint>& points) {
  Batch out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.vector());
  return out;
}

NormStats norm_stats(const Batch& batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "norm statistics of an empty batch");
  std::vector<double> norms;
  norms.reserve(batch.size());
  for (const auto& v : batch) norms.push_back(v.norm());
  NormStats s;
  s.count = norms.size();
  const double n = static_cast<double>(s.count);
  s.mean = std::accumulate(norms.begin(), norms.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : norms) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / n);
  const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
  s.min = *lo;
  s.max = *hi;
  // Rounding in the mean must not break min <= mean <= max.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

void save_vectors(const std::string& path, const Batch& batch) {
  const Eigen::Index d = batch.empty() ? 0 : batch.front().size();
  detail::ByteWriter w;
  w.magic(kVectorMagic);
  w.u32(static_cast<std::uint32_t>(batch.size()));
  w.u32(static_cast<std::uint32_t>(d));
  for (const auto& v : batch) {
    if (v.size() != d) throw Error(ErrorKind::DimensionMismatch, "batch has mixed dimensions");
    for (Eigen::Index k = 0; k < d; ++k) w.f32(static_cast<float>(v[k]));
  }
  detail::write_file(path, w.bytes());
}

Batch load_vectors(const std::string& path) {
  const std::vector<char> bytes = detail::read_file(path);
  detail::ByteReader r(bytes, ErrorKind::TruncatedFile);
  if (bytes.size() < kVectorMagic.size() || !r.magic(kVectorMagic)) {
    throw Error(ErrorKind::BadMagic, "'" + path + "' is not an SFV1 file");
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  const auto payload = static_cast<std::uint64_t>(count) * dim * 4;
  r.need(static_cast<std::size_t>(payload));
  Batch out(count, Vec(dim));
  for (auto& v : out)
    for (std::uint32_t k = 0; k < dim; ++k) v[k] = static_cast<double>(r.f32());
  return out;
}

}  // namespace sphereflow
