#include "spectralx/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spectralx/error.hpp"

namespace spectralx {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string polyline(const std::vector<double>& y, double lo, double hi, const char* colour) {
  const double span = hi > lo ? hi - lo : 1.0;
  const double dx = y.size() > 1 ? (kWidth - 2 * kMargin) / static_cast<double>(y.size() - 1) : 0.0;
  std::string points;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i) points += ' ';
    points += num(kMargin + dx * static_cast<double>(i)) + ',' +
              num(kHeight - kMargin - (y[i] - lo) / span * (kHeight - 2 * kMargin));
  }
  return std::string("  <polyline fill=\"none\" stroke=\"") + colour + "\" stroke-width=\"1.5\" points=\"" + points +
         "\"/>\n";
}

}  // namespace

ExplanationPlot explanation_plot_data(const TimeSeries& sample, const Explanation& expl, const Classifier& model,
                                      const DomainConfig& domain) {
  require(!expl.ranked.empty(), ErrorKind::kInvalidArgument, "cannot plot an empty explanation");
  const PerturbationRenderer renderer = make_renderer(sample, domain, DeletionFill::kRbp);
  require(renderer.space() == expl.space, ErrorKind::kGeometryMismatch,
          "explanation feature space does not match the sample's");

  ExplanationPlot plot;
  plot.feature = expl.ranked.front().feature;
  plot.target_class = expl.target_class;
  plot.original = sample.values;
  plot.masked.resize(renderer.length());
  renderer.render_replaced(std::span<const std::size_t>(&plot.feature, 1), plot.masked);

  Matrix batch(2, static_cast<Eigen::Index>(renderer.length()));
  std::copy(plot.original.begin(), plot.original.end(), batch.row(0).data());
  std::copy(plot.masked.begin(), plot.masked.end(), batch.row(1).data());
  const Matrix probs = model.predict_proba(batch);
  plot.probability_before = probs(0, expl.target_class);
  plot.probability_after = probs(1, expl.target_class);

  const auto [lo, hi] = std::minmax_element(plot.original.begin(), plot.original.end());
  const double threshold = 0.05 * (*hi - *lo);
  std::size_t i = 0;
  while (i < plot.original.size()) {
    if (std::abs(plot.original[i] - plot.masked[i]) > threshold) {
      const std::size_t begin = i;
      while (i < plot.original.size() && std::abs(plot.original[i] - plot.masked[i]) > threshold) ++i;
      plot.shaded.emplace_back(begin, i);
    } else {
      ++i;
    }
  }
  return plot;
}

std::string explanation_plot_svg(const ExplanationPlot& plot) {
  double lo = 0.0;
  double hi = 0.0;
  if (!plot.original.empty()) {
    lo = std::min(*std::min_element(plot.original.begin(), plot.original.end()),
                  *std::min_element(plot.masked.begin(), plot.masked.end()));
    hi = std::max(*std::max_element(plot.original.begin(), plot.original.end()),
                  *std::max_element(plot.masked.begin(), plot.masked.end()));
  }
  const double n = static_cast<double>(std::max<std::size_t>(plot.original.size(), 2) - 1);
  const double dx = (kWidth - 2 * kMargin) / n;

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + ' ' + num(kHeight) + "\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  svg += "  <g class=\"shaded\">\n";
  for (const auto& [begin, end] : plot.shaded) {
    const double x0 = kMargin + dx * (static_cast<double>(begin) - 0.5);
    const double x1 = kMargin + dx * (static_cast<double>(end) - 0.5);
    svg += "    <rect x=\"" + num(x0) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
           num(kHeight - 2 * kMargin) + "\" fill=\"#f4a261\" fill-opacity=\"0.3\"/>\n";
  }
  svg += "  </g>\n";
  svg += polyline(plot.original, lo, hi, "#1d3557");
  svg += polyline(plot.masked, lo, hi, "#e63946");
  svg += "  <text x=\"" + num(kMargin) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">class " +
         std::to_string(plot.target_class) + ": P(original) = " + num(plot.probability_before) +
         ", P(top-1 masked) = " + num(plot.probability_after) + "</text>\n";
  svg += "  <text x=\"" + num(kMargin) + "\" y=\"" + num(kHeight - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\">blue: original, red: masked feature " +
         std::to_string(plot.feature) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

void render_explanation_plot(const TimeSeries& sample, const Explanation& expl, const Classifier& model,
                             const std::filesystem::path& out, const DomainConfig& domain) {
  const std::string svg = explanation_plot_svg(explanation_plot_data(sample, expl, model, domain));
  std::ofstream file(out);
  require(static_cast<bool>(file), ErrorKind::kIo, "cannot write " + out.string());
  file << svg;
  require(static_cast<bool>(file), ErrorKind::kIo, "failed writing " + out.string());
}

}  // namespace spectralx
