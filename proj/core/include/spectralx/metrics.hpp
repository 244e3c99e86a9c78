#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectralx/classifier.hpp"
#include "spectralx/dataset.hpp"
#include "spectralx/explainers.hpp"

namespace spectralx {

enum class FaithfulnessMode { kCumulative, kSingle };

std::string_view faithfulness_mode_name(FaithfulnessMode mode);  // "cumulative" / "single"
FaithfulnessMode parse_faithfulness_mode(std::string_view name);

// Mean drop P_class(original) - P_class(perturbed) over samples after removing
// the top-k ranked features (TF: replaced with the domain's fill, time:
// zeroed). kCumulative removes all k at once; kSingle averages the k
// single-feature removals.
double faithfulness_at_k(const Classifier& model, std::span<const TimeSeries> samples, const Explanation& expl,
                         std::size_t k, const DomainConfig& domain,
                         FaithfulnessMode mode = FaithfulnessMode::kCumulative);

using ExplainerFn = std::function<Explanation(const Classifier&, std::span<const TimeSeries>)>;

struct RobustnessConfig {
  double sigma = 0.1;  // noise std relative to the perturbed quantity's std
  std::size_t top_m = 8;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
};

// Fraction of the top-m features that survive re-explaining noisy copies of
// the samples, averaged over trials. Noise goes on the raw values in the time
// domain and on STFT magnitudes (phase kept) in the TF domain.
double robustness(const ExplainerFn& explain, const Classifier& model, std::span<const TimeSeries> samples,
                  const DomainConfig& domain, const RobustnessConfig& cfg);

// Truncated rank-biased overlap: (1 - lambda) sum_{k=1..d} lambda^(k-1) |A_k ∩ B_k| / k.
double rbo(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t depth, double lambda = 0.9);

struct CurveAreas {
  double aup = 0.0;
  double aur = 0.0;
};

// Means of precision@d and recall@d for d = 1..depth.
CurveAreas area_under_curves(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                             std::size_t depth);
// Depth defaults to min(|truth|, 8).
CurveAreas area_under_curves(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

// Ground-truth cells as feature indices of `space` (which must be a TF space).
std::vector<std::size_t> ground_truth_features(const GroundTruthRanking& truth, const FeatureSpace& space);

struct MetricReport {
  std::string metric;
  std::vector<double> values;  // one entry per class or per classifier
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation of `values`
  std::map<std::string, std::string> config;
};

MetricReport summarize_metric(std::string metric, std::vector<double> values,
                              std::map<std::string, std::string> config = {});

inline constexpr std::size_t kMetricDepths[] = {1, 2, 4, 6, 8};

// One evaluated method x domain x classifier x dataset; unset fields print as NA.
struct MetricsRow {
  std::string dataset;
  std::string classifier;
  std::string method;
  std::string domain;
  std::array<std::optional<double>, 5> faithfulness;
  std::optional<double> robustness;
  std::array<std::optional<double>, 5> rbo;
  std::optional<double> aup;
  std::optional<double> aur;
};

std::string metrics_csv(std::span<const MetricsRow> rows);
std::string metrics_json(std::span<const MetricsRow> rows, std::span<const MetricReport> reports = {});

}  // namespace spectralx
