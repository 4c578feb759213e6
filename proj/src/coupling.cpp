#include "sphereflow/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

void require_same_shape(const Batch& src, const Batch& tgt) {
  if (src.empty()) throw Error(ErrorKind::EmptyBatch, "cost matrix of an empty batch");
  if (src.size() != tgt.size()) {
    throw Error(ErrorKind::LengthMismatch, "batch sizes " + std::to_string(src.size()) + " and " +
                                               std::to_string(tgt.size()));
  }
  const auto d = src.front().size();
  for (const auto* batch : {&src, &tgt}) {
    for (const auto& v : *batch) {
      if (v.size() != d) {
        throw Error(ErrorKind::DimensionMismatch, "mixed vector dimensions in batch");
      }
    }
  }
}

// log(sum(exp(values))) over a contiguous range.
double log_sum_exp(const double* values, Eigen::Index n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) hi = std::max(hi, values[k]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) acc += std::exp(values[k] - hi);
  return hi + std::log(acc);
}

}  // namespace

CostMatrix cost_matrix(const Batch& src, const Batch& tgt, CostMetric metric) {
  require_same_shape(src, tgt);
  const auto n = static_cast<Eigen::Index>(src.size());
  CostMatrix out{Eigen::MatrixXd(n, n), metric};
  if (metric == CostMetric::EuclideanSq) {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) out.entries(i, j) = (src[i] - tgt[j]).squaredNorm();
  } else {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) out.entries(i, j) = direction_angle(src[i], tgt[j]);
  }
  return out;
}

double CouplingPlan::transport_cost(const CostMatrix& cost) const {
  if (cost.entries.rows() != weights.rows() || cost.entries.cols() != weights.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "plan and cost matrix shapes differ");
  }
  return weights.cwiseProduct(cost.entries).sum();
}

SinkhornResult sinkhorn(const CostMatrix& cost, const SinkhornOptions& options) {
  const Eigen::Index n = cost.size();
  if (n == 0 || cost.entries.cols() != n) {
    throw Error(ErrorKind::ShapeMismatch, "sinkhorn needs a nonempty square cost matrix");
  }
  if (!(options.eps > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sinkhorn eps must be positive");
  }
  if (!cost.entries.allFinite()) {
    throw Error(ErrorKind::NonFiniteCost, "cost matrix has non-finite entries");
  }

  const double log_marginal = -std::log(static_cast<double>(n));
  const double marginal = 1.0 / static_cast<double>(n);
  // Kernel in log space, kept in both orientations so every reduction is contiguous.
  const Eigen::MatrixXd log_kernel = -cost.entries / options.eps;
  const Eigen::MatrixXd log_kernel_t = log_kernel.transpose();

  // Scaled dual potentials f/eps (rows) and g/eps (columns).
  Vec f = Vec::Zero(n);
  Vec g = Vec::Zero(n);
  Vec scratch(n);
  Vec row_lse(n);

  auto update_rows_lse = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* row = log_kernel_t.col(i).data();
      for (Eigen::Index j = 0; j < n; ++j) scratch[j] = row[j] + g[j];
      row_lse[i] = log_sum_exp(scratch.data(), n);
    }
  };

  SinkhornResult result;
  int iter = 0;
  double violation = std::numeric_limits<double>::infinity();
  update_rows_lse();
  for (; iter < options.max_iter; ++iter) {
    // Row sums of the current plan are exp(f_i + lse_i).
    if (iter > 0) {
      violation = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) violation += std::abs(std::exp(f[i] + row_lse[i]) - marginal);
      if (violation <= options.tol) break;
    }
    for (Eigen::Index i = 0; i < n; ++i) f[i] = log_marginal - row_lse[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double* col = log_kernel.col(j).data();
      for (Eigen::Index i = 0; i < n; ++i) scratch[i] = col[i] + f[i];
      g[j] = log_marginal - log_sum_exp(scratch.data(), n);
    }
    update_rows_lse();
  }
  if (iter == options.max_iter) {
    violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) violation += std::abs(std::exp(f[i] + row_lse[i]) - marginal);
  }

  CouplingPlan plan;
  plan.weights.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) plan.weights(i, j) = std::exp(log_kernel(i, j) + f[i] + g[j]);
  plan.row_marginal = Vec::Constant(n, marginal);
  plan.col_marginal = Vec::Constant(n, marginal);

  const double col_violation = (plan.weights.colwise().sum().transpose() - plan.col_marginal).cwiseAbs().sum();
  result.plan = std::move(plan);
  result.iterations = iter;
  result.converged = violation <= options.tol;
  result.marginal_violation = std::max(violation, col_violation);
  return result;
}

Assignment exact_assignment(const CostMatrix& cost, std::size_t cap) {
  const auto n = static_cast<std::size_t>(cost.size());
  if (n == 0 || static_cast<std::size_t>(cost.entries.cols()) != n) {
    throw Error(ErrorKind::ShapeMismatch, "assignment needs a nonempty square cost matrix");
  }
  if (n > cap) {
    throw Error(ErrorKind::TooLarge, "assignment size " + std::to_string(n) + " exceeds cap " +
                                         std::to_string(cap));
  }
  if (!cost.entries.allFinite()) {
    throw Error(ErrorKind::NonFiniteCost, "cost matrix has non-finite entries");
  }
  const auto& c = cost.entries;
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  // Shortest augmenting path Hungarian with row/column potentials; slot n is
  // the virtual column that seeds each augmentation.
  std::vector<double> u(n, 0.0), v(n + 1, 0.0), min_to(n + 1);
  std::vector<std::size_t> row_of(n + 1, none), prev(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    row_of[n] = i;
    std::size_t j0 = n;
    std::fill(min_to.begin(), min_to.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of[j0];
      double delta = inf;
      std::size_t j1 = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double reduced = c(i0, j) - u[i0] - v[j];
        if (reduced < min_to[j]) {
          min_to[j] = reduced;
          prev[j] = j0;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != none);
    do {
      const std::size_t j1 = prev[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != n);
  }

  std::vector<std::size_t> col_of_row(n), row_of_col(n);
  for (std::size_t j = 0; j < n; ++j) {
    row_of_col[j] = row_of[j];
    col_of_row[row_of[j]] = j;
  }

  // Every optimal matching uses only edges with zero reduced cost under the
  // optimal potentials. Walk rows in order and move each to the smallest
  // tight column that still admits a perfect matching of the rest.
  const double tight_tol = 1e-11 * (1.0 + c.cwiseAbs().maxCoeff()) * static_cast<double>(n);
  auto tight = [&](std::size_t i, std::size_t j) { return c(i, j) - u[i] - v[j] <= tight_tol; };

  std::vector<char> fixed_col(n, 0);
  std::vector<std::size_t> parent_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < col_of_row[i]; ++j) {
      if (fixed_col[j] || !tight(i, j)) continue;
      // Give j to i; its owner k must reach i's old column through tight
      // alternating edges among unfixed rows.
      const std::size_t k = row_of_col[j];
      const std::size_t target = col_of_row[i];
      std::vector<char> seen(n, 0);
      seen[j] = 1;
      std::deque<std::size_t> frontier{k};
      std::vector<std::size_t> reach_col(n, none);  // row -> column that led to it
      std::size_t found = none;
      while (!frontier.empty() && found == none) {
        const std::size_t r = frontier.front();
        frontier.pop_front();
        for (std::size_t jj = 0; jj < n; ++jj) {
          if (seen[jj] || fixed_col[jj] || !tight(r, jj)) continue;
          seen[jj] = 1;
          parent_row[jj] = r;
          if (jj == target) {
            found = jj;
            break;
          }
          const std::size_t next = row_of_col[jj];
          reach_col[next] = jj;
          frontier.push_back(next);
        }
      }
      if (found == none) continue;
      // Flip the path: walk back from the freed column to row k.
      std::size_t col = found;
      while (true) {
        const std::size_t r = parent_row[col];
        const std::size_t next_col = reach_col[r];
        col_of_row[r] = col;
        row_of_col[col] = r;
        if (r == k) break;
        col = next_col;
      }
      col_of_row[i] = j;
      row_of_col[j] = i;
      break;
    }
    fixed_col[col_of_row[i]] = 1;
  }
  return Assignment{std::move(col_of_row)};
}

double assignment_cost(const CostMatrix& cost, const Assignment& assignment) {
  if (static_cast<Eigen::Index>(assignment.permutation.size()) != cost.size()) {
    throw Error(ErrorKind::LengthMismatch, "assignment and cost sizes differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.permutation.size(); ++i) {
    total += cost.entries(static_cast<Eigen::Index>(i),
                          static_cast<Eigen::Index>(assignment.permutation[i]));
  }
  return total;
}

std::vector<IndexPair> sample_pairs(const CouplingPlan& plan, std::size_t k, Rng& rng) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "sample_pairs needs k >= 1");
  const Eigen::Index rows = plan.weights.rows();
  const Eigen::Index cols = plan.weights.cols();
  std::vector<double> cumulative(static_cast<std::size_t>(rows * cols));
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double w = plan.weights(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorKind::DegeneratePlan, "plan has a negative or non-finite weight");
      }
      total += w;
      cumulative[static_cast<std::size_t>(i * cols + j)] = total;
    }
  }
  if (!(total > 0.0)) throw Error(ErrorKind::DegeneratePlan, "plan has no positive weight");

  std::vector<IndexPair> pairs;
  pairs.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto flat = static_cast<std::size_t>(it - cumulative.begin());
    if (it == cumulative.end()) {
      // u rounded up to total: take the last cell with positive weight.
      flat = cumulative.size() - 1;
      while (flat > 0 && cumulative[flat] == cumulative[flat - 1]) --flat;
    }
    pairs.emplace_back(flat / static_cast<std::size_t>(cols), flat % static_cast<std::size_t>(cols));
  }
  return pairs;
}

std::vector<IndexPair> ot_pairs(const Batch& src, const Batch& tgt, CostMetric metric,
                                const CouplerConfig& config, Rng& rng) {
  require_same_shape(src, tgt);
  const std::size_t n = src.size();
  const std::size_t chunk = config.ot_batch_size == 0 ? n : std::min(config.ot_batch_size, n);
  std::vector<IndexPair> pairs;
  pairs.reserve(n);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(start + chunk, n);
    const Batch sub_src(src.begin() + static_cast<std::ptrdiff_t>(start),
                        src.begin() + static_cast<std::ptrdiff_t>(stop));
    const Batch sub_tgt(tgt.begin() + static_cast<std::ptrdiff_t>(start),
                        tgt.begin() + static_cast<std::ptrdiff_t>(stop));
    const CostMatrix cost = cost_matrix(sub_src, sub_tgt, metric);
    if (config.mode == PairingMode::ExactAssignment) {
      const Assignment a = exact_assignment(cost, config.assignment_cap);
      for (std::size_t i = 0; i < a.permutation.size(); ++i) {
        pairs.emplace_back(start + i, start + a.permutation[i]);
      }
    } else {
      const SinkhornResult sr = sinkhorn(cost, config.sinkhorn);
      for (const auto& [i, j] : sample_pairs(sr.plan, stop - start, rng)) {
        pairs.emplace_back(start + i, start + j);
      }
    }
  }
  return pairs;
}

}  // namespace sphereflow
