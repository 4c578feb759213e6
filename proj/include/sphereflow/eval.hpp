#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sphereflow/datasets.hpp"
#include "sphereflow/geometry.hpp"

namespace sphereflow {

/// V-statistic energy distance 2 E|a-b| - E|a-a'| - E|b-b'| over all pairs.
/// Nonnegative, and bit-identical under swapping A and B.
double energy_distance(const Batch& a, const Batch& b);

struct SweepRow {
  double radius = 0.0;
  double distortion = 0.0;  // mean |x - r x/|x||^2
};

std::vector<SweepRow> projection_sweep(const Batch& batch, std::span<const double> radii);

/// `count` evenly spaced radii from lo to hi inclusive.
std::vector<double> radius_grid(double lo, double hi, std::size_t count);

/// max_i | |x_i| - r | / r
double on_sphere_residual(const Batch& batch, double radius);

/// Minimal CSV emitter: header first, '.' decimal point, full double precision.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& value);
  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

void write_norm_stats_csv(std::ostream& out, const NormStats& stats,
                          const std::vector<SweepRow>& sweep);

}  // namespace sphereflow
