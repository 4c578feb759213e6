#include "sphereflow/flow.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "sphereflow/error.hpp"

namespace sphereflow {

std::string_view to_string(FlowMethod method) {
  switch (method) {
    case FlowMethod::ICFM: return "icfm";
    case FlowMethod::OTCFM: return "otcfm";
    case FlowMethod::SOTCFM: return "sotcfm";
    case FlowMethod::SFM: return "sfm";
  }
  return "unknown";
}

FlowMethod parse_flow_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::erase(lower, '-');
  if (lower == "icfm") return FlowMethod::ICFM;
  if (lower == "otcfm") return FlowMethod::OTCFM;
  if (lower == "sotcfm") return FlowMethod::SOTCFM;
  if (lower == "sfm") return FlowMethod::SFM;
  throw Error(ErrorKind::ConfigError, "unknown variant '" + std::string(name) +
                                          "' (expected icfm, otcfm, sotcfm or sfm)");
}

FlowVariant::FlowVariant(FlowMethod method, bool source_projection, bool target_projection,
                         double radius)
    : method_(method),
      source_projection_(source_projection),
      target_projection_(target_projection),
      radius_(radius) {
  if (!(radius > 0.0)) {
    throw Error(ErrorKind::ConfigError, "radius must be positive, got " + std::to_string(radius));
  }
  if (method == FlowMethod::SFM && !(source_projection && target_projection)) {
    throw Error(ErrorKind::ConfigError,
                "sfm requires source_projection and target_projection: geodesic paths are "
                "inapplicable to unprojected Gaussian source or data");
  }
}

PathSample sample_path_linear(const Vec& x0, const Vec& x1, double t) {
  if (x0.size() != x1.size()) {
    throw Error(ErrorKind::DimensionMismatch, "endpoints have dimensions " +
                                                  std::to_string(x0.size()) + " and " +
                                                  std::to_string(x1.size()));
  }
  return PathSample{(1.0 - t) * x0 + t * x1, x1 - x0, t};
}

PathSample sample_path_spherical(const SpherePoint& x0, const SpherePoint& x1, double t) {
  TangentVector v = geodesic_velocity(x0, x1, t);
  return PathSample{v.base.vector(), std::move(v.direction), t};
}

std::vector<PathSample> make_training_batch(const FlowVariant& variant, const Batch& src,
                                            const Batch& tgt, const CouplerConfig& coupler,
                                            Rng& rng) {
  if (src.empty()) throw Error(ErrorKind::EmptyBatch, "empty training batch");
  if (src.size() != tgt.size()) {
    throw Error(ErrorKind::LengthMismatch, "source and target batch sizes differ");
  }

  std::vector<IndexPair> pairs;
  switch (variant.method()) {
    case FlowMethod::ICFM: {
      std::vector<std::size_t> perm(tgt.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      pairs.reserve(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) pairs.emplace_back(i, perm[i]);
      break;
    }
    case FlowMethod::OTCFM:
      pairs = ot_pairs(src, tgt, CostMetric::EuclideanSq, coupler, rng);
      break;
    case FlowMethod::SOTCFM:
    case FlowMethod::SFM:
      pairs = ot_pairs(src, tgt, CostMetric::Angular, coupler, rng);
      break;
  }

  std::vector<PathSample> out;
  out.reserve(pairs.size());
  if (variant.spherical()) {
    const auto src_s = project_to_sphere(src, variant.radius());
    const auto tgt_s = project_to_sphere(tgt, variant.radius());
    for (const auto& [i, j] : pairs) {
      const double t = uniform01(rng);
      try {
        out.push_back(sample_path_spherical(src_s[i], tgt_s[j], t));
      } catch (const Error& e) {
        // Exactly antipodal pairs have no unique geodesic; drop them.
        if (e.kind() != ErrorKind::AntipodalPoints) throw;
      }
    }
    if (out.empty()) throw Error(ErrorKind::AntipodalPoints, "every pair in the batch is antipodal");
  } else {
    for (const auto& [i, j] : pairs) {
      const double t = uniform01(rng);
      PathSample s = sample_path_linear(src[i], tgt[j], t);
      if (variant.sigma > 0.0) {
        for (Eigen::Index k = 0; k < s.x_t.size(); ++k) s.x_t[k] += variant.sigma * standard_normal(rng);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

double regression_loss(const std::vector<PathSample>& batch, const Batch& predictions) {
  if (batch.size() != predictions.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(batch.size()) + " samples vs " +
                                               std::to_string(predictions.size()) +
                                               " predictions");
  }
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "regression loss of an empty batch");
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (predictions[k].size() != batch[k].u_t.size()) {
      throw Error(ErrorKind::DimensionMismatch, "prediction dimension differs from target");
    }
    total += (predictions[k] - batch[k].u_t).squaredNorm();
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace sphereflow
