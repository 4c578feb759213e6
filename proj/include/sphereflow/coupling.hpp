#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/random.hpp"

namespace sphereflow {

enum class CostMetric { EuclideanSq, Angular };

struct CostMatrix {
  Eigen::MatrixXd entries;  // entries(i, j) = c(src[i], tgt[j])
  CostMetric metric = CostMetric::EuclideanSq;

  Eigen::Index size() const noexcept { return entries.rows(); }
};

/// Squared Euclidean or angular cost between every source/target pair.
/// Angular entries are magnitude-invariant and lie in [0, pi].
CostMatrix cost_matrix(const Batch& src, const Batch& tgt, CostMetric metric);

struct CouplingPlan {
  Eigen::MatrixXd weights;
  Vec row_marginal;
  Vec col_marginal;

  double transport_cost(const CostMatrix& cost) const;
};

struct SinkhornOptions {
  double eps = 0.1;
  int max_iter = 1000;
  double tol = 1e-6;  // L1 marginal violation
};

struct SinkhornResult {
  CouplingPlan plan;
  bool converged = false;
  int iterations = 0;
  double marginal_violation = 0.0;
};

/// Entropic OT between uniform marginals, iterated on log-potentials.
/// Hitting max_iter is reported through `converged`, not thrown.
SinkhornResult sinkhorn(const CostMatrix& cost, const SinkhornOptions& options = {});

struct Assignment {
  std::vector<std::size_t> permutation;  // source i -> target permutation[i]
};

inline constexpr std::size_t kDefaultAssignmentCap = 256;

/// Minimum-cost perfect matching (Hungarian, O(n^3)). Among optimal
/// matchings the lexicographically smallest permutation is returned.
Assignment exact_assignment(const CostMatrix& cost, std::size_t cap = kDefaultAssignmentCap);

double assignment_cost(const CostMatrix& cost, const Assignment& assignment);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// k i.i.d. draws of (src, tgt) with probability proportional to the plan weights.
std::vector<IndexPair> sample_pairs(const CouplingPlan& plan, std::size_t k, Rng& rng);

enum class PairingMode { SamplePlan, ExactAssignment };

struct CouplerConfig {
  PairingMode mode = PairingMode::SamplePlan;
  SinkhornOptions sinkhorn{};
  std::size_t ot_batch_size = 256;  // 0 couples the whole batch at once
  std::size_t assignment_cap = kDefaultAssignmentCap;
};

/// Mini-batch OT pairing. The batch is split into consecutive chunks of
/// ot_batch_size; each chunk is coupled on its own and yields as many pairs
/// as it has sources. Returned indices refer to the full batches.
std::vector<IndexPair> ot_pairs(const Batch& src, const Batch& tgt, CostMetric metric,
                                const CouplerConfig& config, Rng& rng);

}  // namespace sphereflow
