#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace robrl {

/// One trial's error values on a time grid.
struct TrialCurve {
  std::uint64_t trial = 0;
  std::vector<std::uint64_t> t;
  std::vector<double> value;
};

struct AggregatePoint {
  std::uint64_t t = 0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
};

struct AggregateCurve {
  std::string algorithm;
  std::uint64_t n_trials = 0;
  std::vector<AggregatePoint> points;
};

/// Nearest-rank quantile of sorted values: element ceil(q n) - 1 (clamped to the first).
double nearest_rank(std::span<const double> sorted, double q);

/// Middle element, or the average of the two middle elements for even counts.
double sorted_median(std::span<const double> sorted);

/// Pointwise mean, median and nearest-rank 10%/90% quantiles across trials.
///
/// The result depends only on the multiset of curves, not their order: values are
/// sorted before summing. NaN entries sort last and make the mean NaN.
/// Throws ConfigError on an empty set or curves on different grids.
AggregateCurve aggregate(std::span<const TrialCurve> curves, std::string algorithm);

}  // namespace robrl
