#pragma once

#include "robrl/aggregate.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace robrl {

/// Everything needed to draw one algorithm: its trials and their aggregate.
struct PlotSeries {
  std::string algorithm;
  std::vector<TrialCurve> trials;
  AggregateCurve aggregate;
};

struct PlotLabels {
  std::string title;
  std::string x = "t";
  std::string y = "μ-MSE";
};

/// Faded green line per trial, with the mean (markers), median and 10-90% band on top.
std::string spaghetti_svg(const PlotSeries& series, const PlotLabels& labels);

/// Mean curves of several algorithms with their 10-90% bands.
std::string comparison_svg(std::span<const AggregateCurve> curves, const PlotLabels& labels);

/// Long-format data behind the plots: series,kind,trial,t,value.
std::string plot_data_csv(std::span<const PlotSeries> series);

/// Writes <stem>_<algorithm>.svg per series, <stem>_comparison.svg when there is more than
/// one series, and <stem>_data.csv. Throws ConfigError when there is nothing to draw.
std::vector<std::filesystem::path> emit_plots(std::span<const PlotSeries> series,
                                              const std::filesystem::path& dir,
                                              const std::string& stem, const PlotLabels& labels);

}  // namespace robrl
