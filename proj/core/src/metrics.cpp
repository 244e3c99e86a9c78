#include "spectralx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "batching.hpp"
#include "spectralx/error.hpp"
#include "spectralx/random.hpp"

namespace spectralx {
namespace {

constexpr std::size_t kChunkRows = 4096;

double population_std(std::span<const double> values, double mean) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::size_t prefix_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t k) {
  const auto pa = a.first(std::min(k, a.size()));
  const auto pb = b.first(std::min(k, b.size()));
  std::unordered_set<std::size_t> seen(pa.begin(), pa.end());
  std::size_t shared = 0;
  for (std::size_t x : pb) shared += seen.erase(x);
  return shared;
}

TimeSeries add_time_noise(const TimeSeries& x, double sigma, std::mt19937_64& rng) {
  const double mean = std::accumulate(x.values.begin(), x.values.end(), 0.0) / static_cast<double>(x.length());
  const double scale = sigma * population_std(x.values, mean);
  TimeSeries out = x;
  if (scale <= 0.0) return out;
  std::normal_distribution<double> noise(0.0, scale);
  for (double& v : out.values) v += noise(rng);
  return out;
}

TimeSeries add_magnitude_noise(const TimeSeries& x, double sigma, const DomainConfig& domain, std::mt19937_64& rng) {
  Spectrogram s = stft(x.values, make_window(WindowKind::kHann, domain.window_size), domain.hop);
  std::vector<double> magnitude(s.cell_count());
  for (std::size_t i = 0; i < magnitude.size(); ++i) magnitude[i] = std::abs(s.cells()[i]);
  const double mean = std::accumulate(magnitude.begin(), magnitude.end(), 0.0) / static_cast<double>(magnitude.size());
  const double scale = sigma * population_std(magnitude, mean);
  TimeSeries out = x;
  if (scale <= 0.0) return out;
  std::normal_distribution<double> noise(0.0, scale);
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    const double phase = std::arg(s.cells()[i]);
    s.cells()[i] = std::polar(std::max(0.0, magnitude[i] + noise(rng)), phase);
  }
  out.values = istft(s);
  return out;
}

std::string format_value(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

nlohmann::json json_value(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

std::string_view faithfulness_mode_name(FaithfulnessMode mode) {
  return mode == FaithfulnessMode::kCumulative ? "cumulative" : "single";
}

FaithfulnessMode parse_faithfulness_mode(std::string_view name) {
  if (name == "cumulative") return FaithfulnessMode::kCumulative;
  if (name == "single") return FaithfulnessMode::kSingle;
  fail(ErrorKind::kInvalidArgument, "unknown faithfulness mode '" + std::string(name) + "'");
}

double faithfulness_at_k(const Classifier& model, std::span<const TimeSeries> samples, const Explanation& expl,
                         std::size_t k, const DomainConfig& domain, FaithfulnessMode mode) {
  require(k >= 1 && k <= expl.ranked.size(), ErrorKind::kInvalidArgument,
          "faithfulness k = " + std::to_string(k) + " outside [1, " + std::to_string(expl.ranked.size()) + "]");
  require(!samples.empty(), ErrorKind::kInvalidArgument, "faithfulness needs at least one sample");
  const std::vector<std::size_t> top = expl.top_features(k);

  std::vector<PerturbationRenderer> renderers;
  for (const TimeSeries& s : samples) {
    renderers.push_back(make_renderer(s, domain));
    require(renderers.back().space() == expl.space, ErrorKind::kGeometryMismatch,
            "explanation feature space does not match the sample's");
  }
  const std::size_t n = renderers.size();
  const std::size_t variants = mode == FaithfulnessMode::kCumulative ? 1 : k;
  // Row layout per sample: original, then the perturbed variants.
  const std::size_t per_sample = variants + 1;
  const std::vector<double> probs = detail::target_probabilities(
      model, expl.target_class, n * per_sample, renderers.front().length(), kChunkRows,
      [&](std::size_t row, std::span<double> out) {
        const PerturbationRenderer& r = renderers[row / per_sample];
        const std::size_t v = row % per_sample;
        if (v == 0) {
          std::copy(r.original().begin(), r.original().end(), out.begin());
        } else if (mode == FaithfulnessMode::kCumulative) {
          r.render_replaced(top, out);
        } else {
          r.render_replaced(std::span<const std::size_t>(&top[v - 1], 1), out);
        }
      });
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double before = probs[s * per_sample];
    double drop = 0.0;
    for (std::size_t v = 1; v < per_sample; ++v) drop += before - probs[s * per_sample + v];
    total += drop / static_cast<double>(variants);
  }
  return total / static_cast<double>(n);
}

double robustness(const ExplainerFn& explain, const Classifier& model, std::span<const TimeSeries> samples,
                  const DomainConfig& domain, const RobustnessConfig& cfg) {
  require(cfg.sigma >= 0.0 && std::isfinite(cfg.sigma), ErrorKind::kInvalidArgument, "sigma must be >= 0");
  require(cfg.top_m >= 1, ErrorKind::kInvalidArgument, "top_m must be >= 1");
  require(cfg.trials >= 1, ErrorKind::kInvalidArgument, "robustness needs at least one trial");
  const Explanation before = explain(model, samples);
  const std::vector<std::size_t> reference = before.top_features(cfg.top_m);
  require(!reference.empty(), ErrorKind::kInvalidArgument, "explanation ranks no features");

  double total = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    std::vector<TimeSeries> noisy(samples.begin(), samples.end());
    if (cfg.sigma > 0.0) {
      std::mt19937_64 rng(derive_seed(cfg.seed, t));
      for (TimeSeries& x : noisy) {
        x = domain.domain == FeatureDomain::kTime ? add_time_noise(x, cfg.sigma, rng)
                                                  : add_magnitude_noise(x, cfg.sigma, domain, rng);
      }
    }
    const std::vector<std::size_t> after = explain(model, noisy).top_features(cfg.top_m);
    std::unordered_set<std::size_t> kept(reference.begin(), reference.end());
    std::size_t shared = 0;
    for (std::size_t f : after) shared += kept.erase(f);
    total += static_cast<double>(shared) / static_cast<double>(reference.size());
  }
  return total / static_cast<double>(cfg.trials);
}

double rbo(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t depth, double lambda) {
  require(lambda > 0.0 && lambda < 1.0, ErrorKind::kInvalidArgument, "RBO lambda must lie in (0, 1)");
  require(depth >= 1, ErrorKind::kInvalidArgument, "RBO depth must be >= 1");
  double sum = 0.0;
  double weight = 1.0;
  for (std::size_t k = 1; k <= depth; ++k) {
    sum += weight * static_cast<double>(prefix_overlap(a, b, k)) / static_cast<double>(k);
    weight *= lambda;
  }
  return (1.0 - lambda) * sum;
}

CurveAreas area_under_curves(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                             std::size_t depth) {
  require(!truth.empty(), ErrorKind::kInvalidArgument, "ground truth is empty");
  require(depth >= 1, ErrorKind::kInvalidArgument, "curve depth must be >= 1");
  const std::unordered_set<std::size_t> truth_set(truth.begin(), truth.end());
  std::unordered_set<std::size_t> counted;
  std::size_t hits = 0;
  CurveAreas out;
  for (std::size_t d = 1; d <= depth; ++d) {
    if (d <= predicted.size()) {
      const std::size_t f = predicted[d - 1];
      if (truth_set.count(f) && counted.insert(f).second) ++hits;
    }
    out.aup += static_cast<double>(hits) / static_cast<double>(d);
    out.aur += static_cast<double>(hits) / static_cast<double>(truth_set.size());
  }
  out.aup /= static_cast<double>(depth);
  out.aur /= static_cast<double>(depth);
  return out;
}

CurveAreas area_under_curves(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  return area_under_curves(predicted, truth, std::min<std::size_t>(truth.size(), 8));
}

std::vector<std::size_t> ground_truth_features(const GroundTruthRanking& truth, const FeatureSpace& space) {
  require(space.domain() == FeatureDomain::kTimeFrequency, ErrorKind::kInvalidArgument,
          "ground truth is defined on time-frequency cells");
  std::vector<std::size_t> out;
  out.reserve(truth.ranked_cells.size());
  for (const TfCell& c : truth.ranked_cells) {
    require(c.frame < space.frames() && c.bin < space.bins(), ErrorKind::kGeometryMismatch,
            "ground-truth cell outside the feature space");
    out.push_back(space.feature(c));
  }
  return out;
}

MetricReport summarize_metric(std::string metric, std::vector<double> values, std::map<std::string, std::string> config) {
  MetricReport r;
  r.metric = std::move(metric);
  r.values = std::move(values);
  r.config = std::move(config);
  if (!r.values.empty()) {
    r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / static_cast<double>(r.values.size());
    r.stddev = population_std(r.values, r.mean);
  }
  return r;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "dataset,classifier,method,domain";
  for (std::size_t k : kMetricDepths) out += ",faithfulness@" + std::to_string(k);
  out += ",robustness";
  for (std::size_t k : kMetricDepths) out += ",rbo@" + std::to_string(k);
  out += ",aup,aur\n";
  for (const MetricsRow& r : rows) {
    out += r.dataset + ',' + r.classifier + ',' + r.method + ',' + r.domain;
    for (const auto& v : r.faithfulness) out += ',' + format_value(v);
    out += ',' + format_value(r.robustness);
    for (const auto& v : r.rbo) out += ',' + format_value(v);
    out += ',' + format_value(r.aup) + ',' + format_value(r.aur) + '\n';
  }
  return out;
}

std::string metrics_json(std::span<const MetricsRow> rows, std::span<const MetricReport> reports) {
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const MetricsRow& r : rows) {
    nlohmann::json item = {{"dataset", r.dataset}, {"classifier", r.classifier}, {"method", r.method},
                           {"domain", r.domain}};
    for (std::size_t i = 0; i < std::size(kMetricDepths); ++i) {
      item["faithfulness@" + std::to_string(kMetricDepths[i])] = json_value(r.faithfulness[i]);
      item["rbo@" + std::to_string(kMetricDepths[i])] = json_value(r.rbo[i]);
    }
    item["robustness"] = json_value(r.robustness);
    item["aup"] = json_value(r.aup);
    item["aur"] = json_value(r.aur);
    doc["rows"].push_back(item);
  }
  doc["reports"] = nlohmann::json::array();
  for (const MetricReport& r : reports) {
    doc["reports"].push_back(
        {{"metric", r.metric}, {"values", r.values}, {"mean", r.mean}, {"stddev", r.stddev}, {"config", r.config}});
  }
  return doc.dump(2);
}

}  // namespace spectralx
