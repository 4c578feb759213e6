#include "sphereflow/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Mean of |a_i - b_j| over all pairs, summed row by row then across rows.
double mean_pair_distance(const Batch& a, const Batch& b) {
  std::vector<double> row(b.size());
  std::vector<double> row_sums(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) row[j] = (a[i] - b[j]).norm();
    row_sums[i] = pairwise_sum(row);
  }
  return pairwise_sum(row_sums) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

bool batch_less(const Batch& a, const Batch& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index k = 0; k < a[i].size(); ++k) {
      if (a[i][k] != b[i][k]) return a[i][k] < b[i][k];
    }
  }
  return false;
}

void require_nonempty_same_dim(const Batch& a, const Batch& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyBatch, "energy distance of an empty batch");
  const auto d = a.front().size();
  for (const auto* batch : {&a, &b}) {
    for (const auto& v : *batch) {
      if (v.size() != d) throw Error(ErrorKind::DimensionMismatch, "batches differ in dimension");
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double energy_distance(const Batch& a, const Batch& b) {
  require_nonempty_same_dim(a, b);
  // Evaluate in a canonical orientation so the result is symmetric bit for bit.
  const bool swap = batch_less(b, a);
  const Batch& first = swap ? b : a;
  const Batch& second = swap ? a : b;
  const double cross = mean_pair_distance(first, second);
  const double within = mean_pair_distance(first, first) + mean_pair_distance(second, second);
  return std::max(0.0, 2.0 * cross - within);
}

std::vector<SweepRow> projection_sweep(const Batch& batch, std::span<const double> radii) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "projection sweep of an empty batch");
  std::vector<double> norms;
  norms.reserve(batch.size());
  for (const auto& v : batch) {
    const double n = v.norm();
    if (!(n >= kZeroNorm)) throw Error(ErrorKind::ZeroVector, "projection sweep of a zero vector");
    norms.push_back(n);
  }
  std::vector<SweepRow> rows;
  rows.reserve(radii.size());
  std::vector<double> err(norms.size());
  for (double r : radii) {
    if (!(r > 0.0)) throw Error(ErrorKind::NonPositiveRadius, "sweep radius must be positive");
    // x - r x/|x| is parallel to x with length |x| - r.
    for (std::size_t i = 0; i < norms.size(); ++i) err[i] = (norms[i] - r) * (norms[i] - r);
    rows.push_back({r, pairwise_sum(err) / static_cast<double>(norms.size())});
  }
  return rows;
}

std::vector<double> radius_grid(double lo, double hi, std::size_t count) {
  if (count == 0 || !(lo > 0.0) || !(hi >= lo)) {
    throw Error(ErrorKind::InvalidArgument, "radius grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return out;
}

double on_sphere_residual(const Batch& batch, double radius) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "residual of an empty batch");
  if (!(radius > 0.0)) throw Error(ErrorKind::NonPositiveRadius, "radius must be positive");
  double worst = 0.0;
  for (const auto& v : batch) worst = std::max(worst, std::abs(v.norm() - radius) / radius);
  return worst;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& value) {
  out_ << (filled_++ ? "," : "") << value;
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }

CsvWriter& CsvWriter::cell(long long value) { return cell(std::to_string(value)); }

void CsvWriter::end_row() {
  for (; filled_ < columns_; ++filled_) out_ << ',';
  out_ << '\n';
  filled_ = 0;
}

void write_norm_stats_csv(std::ostream& out, const NormStats& stats,
                          const std::vector<SweepRow>& sweep) {
  CsvWriter csv(out, {"kind", "radius", "value", "mean", "std", "min", "max", "count"});
  csv.cell("norm_stats").cell("").cell("").cell(stats.mean).cell(stats.std).cell(stats.min)
      .cell(stats.max).cell(static_cast<long long>(stats.count));
  csv.end_row();
  for (const auto& row : sweep) {
    csv.cell("sweep").cell(row.radius).cell(row.distortion);
    csv.end_row();
  }
}

}  // namespace sphereflow
