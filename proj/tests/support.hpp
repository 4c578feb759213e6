#pragma once

#include <cmath>

#include "sphereflow/error.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/random.hpp"

namespace test {

using sphereflow::Rng;
using sphereflow::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

inline Vec gaussian(Eigen::Index d, Rng& rng) {
  Vec v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = sphereflow::standard_normal(rng);
  return v;
}

inline sphereflow::SpherePoint on_sphere(const Vec& v, double r) {
  return sphereflow::project_to_sphere(v, r);
}

inline double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace test

#define CHECK_THROWS_KIND(expr, k)                            \
  do {                                                        \
    bool caught_ = false;                                     \
    try {                                                     \
      (void)(expr);                                           \
    } catch (const sphereflow::Error& e_) {                   \
      caught_ = true;                                         \
      CHECK(e_.kind() == sphereflow::ErrorKind::k);           \
    }                                                         \
    CHECK_MESSAGE(caught_, "expected " #k " from " #expr);   \
  } while (false)

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace test {

// Exhaustive search over all n! permutations in lexicographic order; the
// first strict minimum is therefore the lexicographically smallest optimum.
inline std::vector<std::size_t> brute_force_assignment(const Eigen::MatrixXd& c) {
  const auto n = static_cast<std::size_t>(c.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double permutation_cost(const Eigen::MatrixXd& c, const std::vector<std::size_t>& perm) {
  double cost = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) cost += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
  return cost;
}

}  // namespace test
