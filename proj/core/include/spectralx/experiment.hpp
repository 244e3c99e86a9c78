#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spectralx/classifier.hpp"
#include "spectralx/dataset.hpp"
#include "spectralx/explainers.hpp"
#include "spectralx/metrics.hpp"

namespace spectralx {

std::string_view library_version();

// Everything a pipeline run depends on. The run directory layout is fixed:
//   manifest.json, model.json, explanations/<class>_<method>[_time].json,
//   metrics.csv, metrics.json, plots/<class>_<method>[_time].svg
struct ExperimentConfig {
  std::string dataset = "synthetic";  // "synthetic" or a UCR-format file
  SynthConfig synth;                  // seed is overridden by `seed`
  std::string classifier = "mlp";     // softmax | mlp | band-rule | external:<cmd>
  std::size_t hidden_width = 128;
  std::size_t max_epochs = 200;
  std::vector<ExplainerMethod> methods = {ExplainerMethod::kCombined};
  std::string domain = "tf";  // tf | time | both
  std::size_t window_size = 16;
  std::size_t hop = 8;
  std::size_t segment_length = 16;
  std::size_t perturbations = 2000;
  std::size_t mask_size = 10;
  std::size_t top_k = 8;
  double alpha = 0.2;
  FaithfulnessMode faithfulness_mode = FaithfulnessMode::kCumulative;
  DeletionFill deletion_fill = DeletionFill::kRbp;
  std::vector<std::string> metrics = {"faithfulness", "robustness", "rbo", "aup"};
  double robustness_sigma = 0.1;
  std::size_t robustness_trials = 5;
  std::size_t samples_per_class = 16;  // test samples explained per class
  std::filesystem::path out = "run";
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<FeatureDomain> domains() const;
  DomainConfig domain_config(FeatureDomain d) const;
  bool wants(std::string_view metric) const;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
// Reads the "config" section of a run manifest.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

std::string_view deletion_fill_name(DeletionFill fill);
DeletionFill parse_deletion_fill(std::string_view name);

// Dataset named by the config, already split 80/10/10 with the run seed.
DatasetSplit experiment_split(const ExperimentConfig& cfg);

// Explanation file name stem for a class, method and domain.
std::string artifact_stem(int class_id, ExplainerMethod method, FeatureDomain domain);

// Pipeline stages; each reads what earlier stages left in cfg.out.
void stage_synth(const ExperimentConfig& cfg);                     // writes synthetic.tsv
ClassifierHandle stage_train(const ExperimentConfig& cfg);         // writes model.json
std::vector<Explanation> stage_explain(const ExperimentConfig& cfg);  // writes explanations/
std::vector<MetricsRow> stage_eval(const ExperimentConfig& cfg);    // writes metrics.csv / metrics.json
void stage_plot(const ExperimentConfig& cfg);                      // writes plots/
void write_manifest(const ExperimentConfig& cfg);

// Builds the explainer the config names for one class and domain.
ExplainerFn make_explainer(const ExperimentConfig& cfg, ExplainerMethod method, int target_class,
                           FeatureDomain domain);

struct RunSummary {
  std::filesystem::path out;
  std::size_t explanations = 0;
  std::vector<MetricsRow> rows;
};

// manifest, train, explain, eval, plot.
RunSummary run_experiment(const ExperimentConfig& cfg);

// {"error":{"kind":...,"message":...}}
std::string error_json(const std::exception& e);

}  // namespace spectralx
