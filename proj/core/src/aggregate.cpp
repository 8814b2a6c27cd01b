#include "robrl/aggregate.hpp"

#include "robrl/types.hpp"

#include <algorithm>
#include <cmath>

namespace robrl {

double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("nearest_rank: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("nearest_rank: q must lie in [0, 1]");
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil(q * n));
  return sorted[rank == 0 ? 0 : rank - 1];
}

double sorted_median(std::span<const double> sorted) {
  if (sorted.empty()) throw ConfigError("sorted_median: empty sample");
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

AggregateCurve aggregate(std::span<const TrialCurve> curves, std::string algorithm) {
  if (curves.empty()) throw ConfigError("aggregate: no trial curves");
  const auto& grid = curves.front().t;
  for (const auto& c : curves) {
    if (c.value.size() != c.t.size()) {
      throw ConfigError("aggregate: trial " + std::to_string(c.trial) + " has ragged columns");
    }
    if (c.t != grid) {
      throw ConfigError("aggregate: trial " + std::to_string(c.trial) +
                        " is on a different time grid");
    }
  }

  AggregateCurve out;
  out.algorithm = std::move(algorithm);
  out.n_trials = curves.size();
  std::vector<double> column(curves.size());
  const auto nan_last = [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < curves.size(); ++k) column[k] = curves[k].value[i];
    std::sort(column.begin(), column.end(), nan_last);
    double sum = 0.0;
    for (double v : column) sum += v;
    AggregatePoint p;
    p.t = grid[i];
    p.mean = sum / static_cast<double>(column.size());
    p.median = sorted_median(column);
    p.q10 = nearest_rank(column, 0.1);
    p.q90 = nearest_rank(column, 0.9);
    out.points.push_back(p);
  }
  return out;
}

}  // namespace robrl
