#include <algorithm>
#include <cmath>
#include <limits>

#include "batching.hpp"
#include "spectralx/error.hpp"
#include "spectralx/explainers.hpp"
#include "spectralx/random.hpp"

namespace spectralx {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExplainerMethod method_of(FiaMode mode) {
  switch (mode) {
    case FiaMode::kInsertion:
      return ExplainerMethod::kInsertion;
    case FiaMode::kDeletion:
      return ExplainerMethod::kDeletion;
    case FiaMode::kCombined:
      return ExplainerMethod::kCombined;
  }
  return ExplainerMethod::kInsertion;
}

// Batch-mean target probability for each mask. Insertion keeps mask u fixed
// over the RBP baseline; deletion replaces mask u fixed in the original.
std::vector<double> stream_probabilities(const Classifier& model, int target,
                                         std::span<const PerturbationRenderer> renderers,
                                         std::span<const PerturbationMask> masks,
                                         std::span<const std::size_t> fixed, PerturbationMode mode,
                                         std::size_t batch_rows) {
  const std::size_t samples = renderers.size();
  const std::size_t length = renderers.front().length();
  std::vector<std::size_t> chosen;
  std::size_t cached_mask = masks.size();
  const std::vector<double> rows = detail::target_probabilities(
      model, target, masks.size() * samples, length, batch_rows, [&](std::size_t row, std::span<double> out) {
        const std::size_t p = row / samples;
        if (p != cached_mask) {
          chosen.assign(masks[p].selected.begin(), masks[p].selected.end());
          chosen.insert(chosen.end(), fixed.begin(), fixed.end());
          cached_mask = p;
        }
        const PerturbationRenderer& r = renderers[row % samples];
        if (mode == PerturbationMode::kInsertion) {
          r.render_kept(chosen, out);
        } else {
          r.render_replaced(chosen, out);
        }
      });
  std::vector<double> means(masks.size(), 0.0);
  for (std::size_t p = 0; p < masks.size(); ++p) {
    for (std::size_t s = 0; s < samples; ++s) means[p] += rows[p * samples + s];
    means[p] /= static_cast<double>(samples);
  }
  return means;
}

// Mean of (P_p - P_original) over the masks that contain each feature.
std::vector<double> feature_scores(std::span<const PerturbationMask> masks, std::span<const double> mask_probs,
                                   double original, std::span<const std::uint8_t> available, std::size_t iteration) {
  const std::size_t total = available.size();
  std::vector<double> sum(total, 0.0);
  std::vector<std::size_t> hits(total, 0);
  for (std::size_t p = 0; p < masks.size(); ++p) {
    const double delta = mask_probs[p] - original;
    for (std::size_t f : masks[p].selected) {
      sum[f] += delta;
      ++hits[f];
    }
  }
  std::vector<double> scores(total, kNaN);
  for (std::size_t f = 0; f < total; ++f) {
    if (!available[f]) continue;
    require(hits[f] > 0, ErrorKind::kCoverage,
            "feature " + std::to_string(f) + " was not covered by any of the " + std::to_string(masks.size()) +
                " masks in iteration " + std::to_string(iteration) + "; increase the number of perturbations");
    scores[f] = sum[f] / static_cast<double>(hits[f]);
  }
  return scores;
}

// Lowest-index arg-extremum over available features.
std::size_t pick(std::span<const double> scores, std::span<const std::uint8_t> available, bool maximize) {
  std::size_t best = scores.size();
  for (std::size_t f = 0; f < scores.size(); ++f) {
    if (!available[f]) continue;
    if (best == scores.size() || (maximize ? scores[f] > scores[best] : scores[f] < scores[best])) best = f;
  }
  return best;
}

}  // namespace

void FiaConfig::validate() const {
  require(perturbations > 0 && mask_size > 0 && top_k > 0 && batch_rows > 0, ErrorKind::kInvalidArgument,
          "FIA needs positive perturbations, mask size, top-k and batch size");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
}

FiaResult fia_run(const Classifier& model, std::span<const TimeSeries> class_samples, int target_class,
                  const DomainConfig& domain, FiaMode mode, const FiaConfig& cfg) {
  cfg.validate();
  require(!class_samples.empty(), ErrorKind::kInvalidArgument, "FIA needs at least one sample of the target class");
  const std::size_t length = class_samples.front().length();
  const FeatureSpace space = feature_space_for(length, domain);
  const std::size_t total = space.feature_count();

  const bool run_insertion = mode != FiaMode::kDeletion;
  const bool run_deletion = mode != FiaMode::kInsertion;
  std::vector<PerturbationRenderer> ins_renderers;
  std::vector<PerturbationRenderer> del_renderers;
  for (const TimeSeries& s : class_samples) {
    require(s.length() == length, ErrorKind::kInvalidArgument, "class samples have different lengths");
    if (run_insertion) ins_renderers.push_back(make_renderer(s, domain, DeletionFill::kRbp));
    if (run_deletion) del_renderers.push_back(make_renderer(s, domain));
  }

  const auto& reference = run_deletion ? del_renderers : ins_renderers;
  const std::vector<double> originals = detail::target_probabilities(
      model, target_class, reference.size(), length, cfg.batch_rows, [&](std::size_t row, std::span<double> out) {
        const auto src = reference[row].original();
        std::copy(src.begin(), src.end(), out.begin());
      });
  double original = 0.0;
  for (double p : originals) original += p;
  original /= static_cast<double>(originals.size());

  FiaResult result;
  result.original_probability = original;
  Explanation& e = result.explanation;
  e.method = method_of(mode);
  e.target_class = target_class;
  e.space = space;
  e.seed = cfg.seed;
  e.config = {{"perturbations", static_cast<double>(cfg.perturbations)},
              {"mask_size", static_cast<double>(cfg.mask_size)},
              {"top_k", static_cast<double>(cfg.top_k)},
              {"alpha", cfg.alpha},
              {"samples", static_cast<double>(class_samples.size())}};

  std::vector<std::uint8_t> available(total, 1);
  std::vector<std::size_t> selected;
  const std::size_t iterations = std::min(cfg.top_k, total);
  for (std::size_t i = 0; i < iterations; ++i) {
    const std::size_t remaining = total - selected.size();
    FiaIteration it;
    std::vector<PerturbationMask> masks;
    if (cfg.mask_source) {
      masks = cfg.mask_source(i, selected);
    } else {
      // Keep masks strictly smaller than the remaining pool so scores can differ.
      it.mask_size = std::min(cfg.mask_size, std::max<std::size_t>(1, remaining / 2));
      masks = sample_masks(space, it.mask_size, cfg.perturbations, derive_seed(cfg.seed, i), selected);
    }
    for (const auto& m : masks) {
      for (std::size_t f : m.selected) {
        require(f < total && available[f], ErrorKind::kInvalidArgument,
                "mask source returned an invalid or already selected feature");
      }
    }
    if (cfg.mask_source && !masks.empty()) it.mask_size = masks.front().selected.size();

    if (run_insertion) {
      const auto probs = stream_probabilities(model, target_class, ins_renderers, masks, selected,
                                              PerturbationMode::kInsertion, cfg.batch_rows);
      it.insertion = feature_scores(masks, probs, original, available, i);
    }
    if (run_deletion) {
      const auto probs = stream_probabilities(model, target_class, del_renderers, masks, selected,
                                              PerturbationMode::kDeletion, cfg.batch_rows);
      it.deletion = feature_scores(masks, probs, original, available, i);
    }

    double score = 0.0;
    switch (mode) {
      case FiaMode::kInsertion:
        it.selected = pick(it.insertion, available, true);
        score = it.insertion[it.selected];
        break;
      case FiaMode::kDeletion:
        it.selected = pick(it.deletion, available, false);
        score = it.deletion[it.selected];
        break;
      case FiaMode::kCombined: {
        std::vector<double> combined(total, kNaN);
        for (std::size_t f = 0; f < total; ++f) {
          if (!available[f]) continue;
          const double v = cfg.alpha * it.insertion[f] - (1.0 - cfg.alpha) * it.deletion[f];
          combined[f] = cfg.combined_scoring == CombinedScoring::kAbsolute ? std::abs(v) : v;
        }
        it.selected = pick(combined, available, true);
        score = combined[it.selected];
        break;
      }
    }
    available[it.selected] = 0;
    selected.push_back(it.selected);
    e.ranked.push_back({it.selected, score});
    result.iterations.push_back(std::move(it));
  }
  return result;
}

Explanation fia_explain(const Classifier& model, std::span<const TimeSeries> class_samples, int target_class,
                        const DomainConfig& domain, FiaMode mode, const FiaConfig& cfg) {
  return fia_run(model, class_samples, target_class, domain, mode, cfg).explanation;
}

}  // namespace spectralx
