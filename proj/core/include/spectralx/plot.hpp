#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spectralx/classifier.hpp"
#include "spectralx/explainers.hpp"

namespace spectralx {

// What the explanation plot shows: the sample, the sample with its top-1
// feature removed (TF: replaced by RBP, time: zeroed), and the sample ranges
// where the two differ by more than 5% of the sample's value range.
struct ExplanationPlot {
  std::vector<double> original;
  std::vector<double> masked;
  std::vector<std::pair<std::size_t, std::size_t>> shaded;  // half-open sample ranges
  std::size_t feature = 0;
  int target_class = 0;
  double probability_before = 0.0;
  double probability_after = 0.0;
};

ExplanationPlot explanation_plot_data(const TimeSeries& sample, const Explanation& expl, const Classifier& model,
                                      const DomainConfig& domain = {});
std::string explanation_plot_svg(const ExplanationPlot& plot);
void render_explanation_plot(const TimeSeries& sample, const Explanation& expl, const Classifier& model,
                             const std::filesystem::path& out, const DomainConfig& domain = {});

}  // namespace spectralx
