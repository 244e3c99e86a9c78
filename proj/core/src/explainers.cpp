#include "spectralx/explainers.hpp"

#include <algorithm>
#include <cmath>

#include "batching.hpp"
#include "spectralx/error.hpp"

namespace spectralx {

namespace detail {

std::vector<double> target_probabilities(const Classifier& model, int target, std::size_t rows,
                                         std::size_t length, std::size_t chunk,
                                         const std::function<void(std::size_t, std::span<double>)>& fill) {
  require(target >= 0 && static_cast<std::size_t>(target) < model.class_count(), ErrorKind::kInvalidArgument,
          "target class " + std::to_string(target) + " out of range");
  chunk = std::max<std::size_t>(chunk, 1);
  std::vector<double> out(rows);
  Matrix batch;
  for (std::size_t begin = 0; begin < rows; begin += chunk) {
    const std::size_t n = std::min(chunk, rows - begin);
    batch.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(length));
    for (std::size_t r = 0; r < n; ++r) {
      fill(begin + r, std::span<double>(batch.row(static_cast<Eigen::Index>(r)).data(), length));
    }
    const Matrix probs = model.predict_proba(batch);
    for (std::size_t r = 0; r < n; ++r) out[begin + r] = probs(static_cast<Eigen::Index>(r), target);
  }
  return out;
}

}  // namespace detail

std::string_view method_name(ExplainerMethod method) {
  switch (method) {
    case ExplainerMethod::kInsertion:
      return "insertion";
    case ExplainerMethod::kDeletion:
      return "deletion";
    case ExplainerMethod::kCombined:
      return "combined";
    case ExplainerMethod::kRise:
      return "rise";
    case ExplainerMethod::kLime:
      return "lime";
    case ExplainerMethod::kKernelShap:
      return "kernelshap";
  }
  return "unknown";
}

ExplainerMethod parse_method(std::string_view name) {
  for (auto m : {ExplainerMethod::kInsertion, ExplainerMethod::kDeletion, ExplainerMethod::kCombined,
                 ExplainerMethod::kRise, ExplainerMethod::kLime, ExplainerMethod::kKernelShap}) {
    if (method_name(m) == name) return m;
  }
  fail(ErrorKind::kInvalidArgument, "unknown explainer method '" + std::string(name) + "'");
}

bool is_fia(ExplainerMethod method) {
  return method == ExplainerMethod::kInsertion || method == ExplainerMethod::kDeletion ||
         method == ExplainerMethod::kCombined;
}

std::vector<std::size_t> Explanation::top_features(std::size_t m) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(m, ranked.size()); ++i) out.push_back(ranked[i].feature);
  return out;
}

FeatureSpace feature_space_for(std::size_t signal_length, const DomainConfig& domain) {
  if (domain.domain == FeatureDomain::kTime) return FeatureSpace::time_segments(signal_length, domain.segment_length);
  const FrameLayout layout = make_frame_layout(signal_length, domain.window_size, domain.hop);
  return FeatureSpace::time_frequency(layout.frame_count, domain.window_size / 2 + 1);
}

PerturbationRenderer make_renderer(const TimeSeries& sample, const DomainConfig& domain) {
  return make_renderer(sample, domain, domain.fill);
}

PerturbationRenderer make_renderer(const TimeSeries& sample, const DomainConfig& domain, DeletionFill fill) {
  if (domain.domain == FeatureDomain::kTime) {
    return PerturbationRenderer::time_segments(sample.values, domain.segment_length);
  }
  return PerturbationRenderer::time_frequency(sample.values, make_window(WindowKind::kHann, domain.window_size),
                                              domain.hop, fill);
}

Explanation aggregate_class_explanation(std::span<const Explanation> per_sample) {
  require(!per_sample.empty(), ErrorKind::kInvalidArgument, "nothing to aggregate");
  const Explanation& first = per_sample.front();
  const std::size_t total = first.space.feature_count();
  std::vector<double> sum(total, 0.0);
  std::vector<std::size_t> count(total, 0);
  for (const Explanation& e : per_sample) {
    require(e.method == first.method && e.space == first.space && e.target_class == first.target_class,
            ErrorKind::kInvalidArgument, "cannot aggregate explanations of different methods, spaces or classes");
    for (const RankedFeature& r : e.ranked) {
      sum[r.feature] += r.score;
      ++count[r.feature];
    }
  }
  Explanation out;
  out.method = first.method;
  out.target_class = first.target_class;
  out.space = first.space;
  out.config = first.config;
  out.config["aggregated_samples"] = static_cast<double>(per_sample.size());
  out.seed = first.seed;
  for (std::size_t f = 0; f < total; ++f) {
    if (count[f] > 0) out.ranked.push_back({f, sum[f] / static_cast<double>(count[f])});
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
  return out;
}

}  // namespace spectralx
