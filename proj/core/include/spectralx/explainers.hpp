#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spectralx/classifier.hpp"
#include "spectralx/perturbation.hpp"

namespace spectralx {

enum class ExplainerMethod { kInsertion, kDeletion, kCombined, kRise, kLime, kKernelShap };

std::string_view method_name(ExplainerMethod method);  // "insertion", ..., "kernelshap"
ExplainerMethod parse_method(std::string_view name);    // kInvalidArgument on unknown names
bool is_fia(ExplainerMethod method);

struct RankedFeature {
  std::size_t feature = 0;
  double score = 0.0;
  bool operator==(const RankedFeature&) const = default;
};

// Ranked features for one target class. FIA rankings are in selection order;
// baseline rankings are sorted by descending score.
struct Explanation {
  ExplainerMethod method = ExplainerMethod::kInsertion;
  int target_class = 0;
  FeatureSpace space;
  std::vector<RankedFeature> ranked;
  std::map<std::string, double> config;
  std::uint64_t seed = 0;

  std::vector<std::size_t> top_features(std::size_t m) const;
};

std::string explanation_to_json(const Explanation& e);
Explanation explanation_from_json(const std::string& text);

// How samples are turned into features: STFT cells or 16-sample super-segments.
struct DomainConfig {
  FeatureDomain domain = FeatureDomain::kTimeFrequency;
  std::size_t window_size = 16;
  std::size_t hop = 8;
  std::size_t segment_length = 16;
  DeletionFill fill = DeletionFill::kRbp;
};

FeatureSpace feature_space_for(std::size_t signal_length, const DomainConfig& domain);

// Renderer for one sample. `fill` overrides the domain's deletion fill (the
// insertion baseline is always RBP).
PerturbationRenderer make_renderer(const TimeSeries& sample, const DomainConfig& domain);
PerturbationRenderer make_renderer(const TimeSeries& sample, const DomainConfig& domain, DeletionFill fill);

enum class FiaMode { kInsertion, kDeletion, kCombined };

// Combined selection score. kSigned ranks by alpha*ins - (1-alpha)*del;
// kAbsolute ranks by its absolute value.
enum class CombinedScoring { kSigned, kAbsolute };

// Masks for FIA iteration `iteration` given the already selected features.
using MaskSource =
    std::function<std::vector<PerturbationMask>(std::size_t iteration, std::span<const std::size_t> selected)>;

struct FiaConfig {
  std::size_t perturbations = 2000;  // P, per iteration
  std::size_t mask_size = 10;        // R
  std::size_t top_k = 8;             // k
  double alpha = 0.2;                // insertion weight for kCombined
  std::uint64_t seed = 0;
  CombinedScoring combined_scoring = CombinedScoring::kSigned;
  std::size_t batch_rows = 4096;  // rows per classifier call
  MaskSource mask_source;         // overrides random sampling when set

  void validate() const;
};

// Scores of one greedy iteration; NaN for already selected features.
struct FiaIteration {
  std::size_t mask_size = 0;
  std::vector<double> insertion;  // empty unless the insertion stream ran
  std::vector<double> deletion;   // empty unless the deletion stream ran
  std::size_t selected = 0;
};

struct FiaResult {
  Explanation explanation;
  std::vector<FiaIteration> iterations;
  double original_probability = 0.0;  // batch mean of P_class(original)
};

// Greedy insertion / deletion / combined search over the domain's feature
// space. All samples share each iteration's masks; class probabilities are
// averaged over the batch before scoring.
FiaResult fia_run(const Classifier& model, std::span<const TimeSeries> class_samples, int target_class,
                  const DomainConfig& domain, FiaMode mode, const FiaConfig& cfg);
Explanation fia_explain(const Classifier& model, std::span<const TimeSeries> class_samples, int target_class,
                        const DomainConfig& domain, FiaMode mode, const FiaConfig& cfg);

struct RiseConfig {
  std::size_t perturbations = 2000;
  std::size_t mask_size = 10;  // features removed per mask
  std::uint64_t seed = 0;
  std::vector<PerturbationMask> masks;  // explicit design; overrides sampling when non-empty
};

// importance_f = sum_p P_p [f kept in p] / sum_p [f kept in p], with P_p the
// batch-mean class probability after removing mask p.
Explanation rise_explain(const Classifier& model, std::span<const TimeSeries> samples, int target_class,
                         const DomainConfig& domain, const RiseConfig& cfg);

struct LimeConfig {
  std::size_t perturbations = 2000;
  double kernel_width = 0.25;
  double ridge = 1e-6;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint8_t>> design;  // explicit presence vectors; overrides sampling
};

// Weighted ridge regression of P_class on binary presence vectors (absent
// features replaced), weights exp(-(1 - |z|/F)^2 / width^2).
Explanation lime_explain(const Classifier& model, const TimeSeries& sample, int target_class,
                         const DomainConfig& domain, const LimeConfig& cfg);

struct KernelShapConfig {
  std::size_t perturbations = 2000;
  std::uint64_t seed = 0;
  bool exhaustive = false;  // enumerate all 2^F - 2 coalitions (small F only)
  std::vector<std::vector<std::uint8_t>> design;  // explicit coalitions; weighted by the Shapley kernel
};

// Shapley kernel regression with v(full) and v(empty) enforced exactly, so
// sum phi = P_class(x) - P_class(baseline).
Explanation kernelshap_explain(const Classifier& model, const TimeSeries& sample, int target_class,
                               const DomainConfig& domain, const KernelShapConfig& cfg);

// Mean score per feature over per-sample explanations (over those that rank
// it), sorted descending with ties by lower feature index.
Explanation aggregate_class_explanation(std::span<const Explanation> per_sample);

// Lower-level solvers shared with tests and benchmarks.

// Weighted ridge with an unpenalized intercept; returns [intercept, coef...].
// kInvalidArgument when [1 Z] is rank deficient.
Eigen::VectorXd weighted_ridge(const Matrix& design, const Eigen::VectorXd& target, const Eigen::VectorXd& weights,
                               double ridge);

// Shapley kernel weight (F-1) / (C(F,|z|) |z| (F-|z|)); 0 for empty/full coalitions.
double shapley_kernel_weight(std::size_t features, std::size_t coalition_size);

}  // namespace spectralx
