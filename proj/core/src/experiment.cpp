#include "spectralx/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "spectralx/error.hpp"
#include "spectralx/plot.hpp"
#include "spectralx/random.hpp"

#ifndef SPECTRALX_VERSION
#define SPECTRALX_VERSION "0.0.0"
#endif

namespace spectralx {
namespace {

using json = nlohmann::json;

constexpr int kManifestFormatVersion = 1;
constexpr const char* kKnownMetrics[] = {"faithfulness", "robustness", "rbo", "aup"};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool is_synthetic(const ExperimentConfig& cfg) { return cfg.dataset == "synthetic"; }

SynthConfig synth_config(const ExperimentConfig& cfg) {
  SynthConfig s = cfg.synth;
  s.seed = cfg.seed;
  return s;
}

std::string dataset_label(const ExperimentConfig& cfg) {
  return is_synthetic(cfg) ? "synthetic" : std::filesystem::path(cfg.dataset).stem().string();
}

std::string classifier_label(const ExperimentConfig& cfg) {
  return cfg.classifier.rfind("external:", 0) == 0 ? "external" : cfg.classifier;
}

std::vector<TimeSeries> explained_samples(const DatasetSplit& split, int c, std::size_t limit) {
  std::vector<TimeSeries> samples = split.test.of_class(c);
  if (samples.size() > limit) samples.resize(limit);
  return samples;
}

ClassifierHandle load_or_train(const ExperimentConfig& cfg) {
  const auto path = cfg.out / "model.json";
  if (std::filesystem::exists(path)) return load_model(path);
  return stage_train(cfg);
}

}  // namespace

std::string_view library_version() { return SPECTRALX_VERSION; }

std::string_view deletion_fill_name(DeletionFill fill) { return fill == DeletionFill::kRbp ? "rbp" : "zero"; }

DeletionFill parse_deletion_fill(std::string_view name) {
  if (name == "rbp") return DeletionFill::kRbp;
  if (name == "zero") return DeletionFill::kZero;
  fail(ErrorKind::kInvalidArgument, "unknown deletion fill '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  require(!dataset.empty(), ErrorKind::kInvalidArgument, "dataset must be 'synthetic' or a file path");
  if (is_synthetic(*this)) synth.validate();
  require(classifier == "softmax" || classifier == "mlp" || classifier == "band-rule" ||
              (classifier.rfind("external:", 0) == 0 && classifier.size() > 9),
          ErrorKind::kInvalidArgument,
          "classifier must be softmax, mlp, band-rule or external:<cmd>, got '" + classifier + "'");
  require(!methods.empty(), ErrorKind::kInvalidArgument, "at least one explainer method is required");
  require(domain == "tf" || domain == "time" || domain == "both", ErrorKind::kInvalidArgument,
          "domain must be tf, time or both, got '" + domain + "'");
  require(window_size >= 2 && window_size % 2 == 0, ErrorKind::kInvalidArgument, "window must be even and >= 2");
  require(hop * 2 == window_size, ErrorKind::kUnsupportedConfiguration,
          "hop must equal window / 2 for perfect reconstruction");
  require(segment_length >= 1, ErrorKind::kInvalidArgument, "segment length must be positive");
  require(perturbations >= 1 && mask_size >= 1 && top_k >= 1, ErrorKind::kInvalidArgument,
          "perturbations, mask size and top-k must be positive");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  require(samples_per_class >= 1, ErrorKind::kInvalidArgument, "samples per class must be positive");
  require(robustness_sigma >= 0.0, ErrorKind::kInvalidArgument, "robustness sigma must be >= 0");
  require(robustness_trials >= 1, ErrorKind::kInvalidArgument, "robustness trials must be positive");
  for (const std::string& m : metrics) {
    require(std::find(std::begin(kKnownMetrics), std::end(kKnownMetrics), m) != std::end(kKnownMetrics),
            ErrorKind::kInvalidArgument, "unknown metric '" + m + "'");
  }
  require(!out.empty(), ErrorKind::kInvalidArgument, "output directory is required");
}

std::vector<FeatureDomain> ExperimentConfig::domains() const {
  if (domain == "time") return {FeatureDomain::kTime};
  if (domain == "both") return {FeatureDomain::kTimeFrequency, FeatureDomain::kTime};
  return {FeatureDomain::kTimeFrequency};
}

DomainConfig ExperimentConfig::domain_config(FeatureDomain d) const {
  DomainConfig dc;
  dc.domain = d;
  dc.window_size = window_size;
  dc.hop = hop;
  dc.segment_length = segment_length;
  dc.fill = deletion_fill;
  return dc;
}

bool ExperimentConfig::wants(std::string_view metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json methods = json::array();
  for (ExplainerMethod m : cfg.methods) methods.push_back(std::string(method_name(m)));
  json doc = {
      {"dataset", cfg.dataset},
      {"synthetic",
       {{"segment_length", cfg.synth.segment_length},
        {"segments", cfg.synth.segments},
        {"cycles_low", cfg.synth.cycles_low},
        {"cycles_mid", cfg.synth.cycles_mid},
        {"cycles_high", cfg.synth.cycles_high},
        {"noise_sigma", cfg.synth.noise_sigma},
        {"samples_per_class", cfg.synth.samples_per_class}}},
      {"classifier", cfg.classifier},
      {"hidden_width", cfg.hidden_width},
      {"max_epochs", cfg.max_epochs},
      {"methods", methods},
      {"domain", cfg.domain},
      {"window", cfg.window_size},
      {"hop", cfg.hop},
      {"segment_length", cfg.segment_length},
      {"perturbations", cfg.perturbations},
      {"mask_size", cfg.mask_size},
      {"topk", cfg.top_k},
      {"alpha", cfg.alpha},
      {"faithfulness_mode", std::string(faithfulness_mode_name(cfg.faithfulness_mode))},
      {"deletion_fill", std::string(deletion_fill_name(cfg.deletion_fill))},
      {"metrics", cfg.metrics},
      {"robustness_sigma", cfg.robustness_sigma},
      {"robustness_trials", cfg.robustness_trials},
      {"samples_per_class", cfg.samples_per_class},
      {"out", cfg.out.string()},
      {"seed", cfg.seed},
  };
  return doc.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    cfg.dataset = doc.at("dataset").get<std::string>();
    const json& s = doc.at("synthetic");
    cfg.synth.segment_length = s.at("segment_length").get<std::size_t>();
    cfg.synth.segments = s.at("segments").get<std::size_t>();
    cfg.synth.cycles_low = s.at("cycles_low").get<double>();
    cfg.synth.cycles_mid = s.at("cycles_mid").get<double>();
    cfg.synth.cycles_high = s.at("cycles_high").get<double>();
    cfg.synth.noise_sigma = s.at("noise_sigma").get<double>();
    cfg.synth.samples_per_class = s.at("samples_per_class").get<std::size_t>();
    cfg.classifier = doc.at("classifier").get<std::string>();
    cfg.hidden_width = doc.at("hidden_width").get<std::size_t>();
    cfg.max_epochs = doc.at("max_epochs").get<std::size_t>();
    cfg.methods.clear();
    for (const json& m : doc.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    cfg.domain = doc.at("domain").get<std::string>();
    cfg.window_size = doc.at("window").get<std::size_t>();
    cfg.hop = doc.at("hop").get<std::size_t>();
    cfg.segment_length = doc.at("segment_length").get<std::size_t>();
    cfg.perturbations = doc.at("perturbations").get<std::size_t>();
    cfg.mask_size = doc.at("mask_size").get<std::size_t>();
    cfg.top_k = doc.at("topk").get<std::size_t>();
    cfg.alpha = doc.at("alpha").get<double>();
    cfg.faithfulness_mode = parse_faithfulness_mode(doc.at("faithfulness_mode").get<std::string>());
    cfg.deletion_fill = parse_deletion_fill(doc.at("deletion_fill").get<std::string>());
    cfg.metrics = doc.at("metrics").get<std::vector<std::string>>();
    cfg.robustness_sigma = doc.at("robustness_sigma").get<double>();
    cfg.robustness_trials = doc.at("robustness_trials").get<std::size_t>();
    cfg.samples_per_class = doc.at("samples_per_class").get<std::size_t>();
    cfg.out = doc.at("out").get<std::string>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    return cfg;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig config_from_manifest(const std::filesystem::path& manifest) {
  require(std::filesystem::exists(manifest), ErrorKind::kIo, "manifest not found: " + manifest.string());
  json doc;
  try {
    doc = json::parse(read_text(manifest));
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("manifest is not valid JSON: ") + e.what());
  }
  require(doc.contains("config"), ErrorKind::kFormat, "manifest has no config section");
  return config_from_json(doc["config"].dump());
}

DatasetSplit experiment_split(const ExperimentConfig& cfg) {
  LabeledDataset data = is_synthetic(cfg) ? generate_synthetic(synth_config(cfg)) : load_ucr(cfg.dataset);
  return split_dataset(data, {}, cfg.seed);
}

std::string artifact_stem(int class_id, ExplainerMethod method, FeatureDomain domain) {
  std::string stem = std::to_string(class_id) + '_' + std::string(method_name(method));
  if (domain == FeatureDomain::kTime) stem += "_time";
  return stem;
}

void stage_synth(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);
  write_ucr(generate_synthetic(synth_config(cfg)), cfg.out / "synthetic.tsv");
}

ClassifierHandle stage_train(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);
  ClassifierHandle model;
  std::size_t classes = 0;
  std::size_t length = 0;
  if (cfg.classifier == "softmax" || cfg.classifier == "mlp") {
    const DatasetSplit split = experiment_split(cfg);
    TrainConfig tc;
    tc.kind = cfg.classifier == "mlp" ? ModelKind::kMlp : ModelKind::kSoftmax;
    tc.hidden_width = cfg.hidden_width;
    tc.max_epochs = cfg.max_epochs;
    tc.seed = cfg.seed;
    model = train_classifier(split.train, split.validation, tc).model;
    classes = split.train.class_count;
    length = split.train.series_length();
  } else if (cfg.classifier == "band-rule") {
    require(is_synthetic(cfg), ErrorKind::kUnsupportedConfiguration,
            "the band-rule classifier is only defined for the synthetic dataset");
    model = synthetic_band_classifier(synth_config(cfg), cfg.window_size, cfg.hop);
    classes = kSyntheticClassCount;
    length = cfg.synth.series_length();
  } else {
    model = external_classifier(cfg.classifier.substr(9));
    const DatasetSplit split = experiment_split(cfg);
    classes = split.train.class_count;
    length = split.train.series_length();
  }
  require(model->class_count() == classes && model->input_length() == length, ErrorKind::kInvalidArgument,
          "classifier expects " + std::to_string(model->class_count()) + " classes of length " +
              std::to_string(model->input_length()) + " but the dataset has " + std::to_string(classes) +
              " classes of length " + std::to_string(length));
  save_model(*model, cfg.out / "model.json");
  return model;
}

ExplainerFn make_explainer(const ExperimentConfig& cfg, ExplainerMethod method, int target_class,
                           FeatureDomain domain) {
  const DomainConfig dc = cfg.domain_config(domain);
  switch (method) {
    case ExplainerMethod::kInsertion:
    case ExplainerMethod::kDeletion:
    case ExplainerMethod::kCombined: {
      FiaConfig fc;
      fc.perturbations = cfg.perturbations;
      fc.mask_size = cfg.mask_size;
      fc.top_k = cfg.top_k;
      fc.alpha = cfg.alpha;
      fc.seed = cfg.seed;
      const FiaMode mode = method == ExplainerMethod::kInsertion  ? FiaMode::kInsertion
                           : method == ExplainerMethod::kDeletion ? FiaMode::kDeletion
                                                                  : FiaMode::kCombined;
      return [=](const Classifier& model, std::span<const TimeSeries> samples) {
        return fia_explain(model, samples, target_class, dc, mode, fc);
      };
    }
    case ExplainerMethod::kRise: {
      RiseConfig rc;
      rc.perturbations = cfg.perturbations;
      rc.mask_size = cfg.mask_size;
      rc.seed = cfg.seed;
      return [=](const Classifier& model, std::span<const TimeSeries> samples) {
        return rise_explain(model, samples, target_class, dc, rc);
      };
    }
    case ExplainerMethod::kLime:
    case ExplainerMethod::kKernelShap: {
      const std::size_t perturbations = cfg.perturbations;
      const std::uint64_t seed = cfg.seed;
      return [=](const Classifier& model, std::span<const TimeSeries> samples) {
        std::vector<Explanation> per_sample;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          if (method == ExplainerMethod::kLime) {
            LimeConfig lc;
            lc.perturbations = perturbations;
            lc.seed = derive_seed(seed, i);
            per_sample.push_back(lime_explain(model, samples[i], target_class, dc, lc));
          } else {
            KernelShapConfig kc;
            kc.perturbations = perturbations;
            kc.seed = derive_seed(seed, i);
            per_sample.push_back(kernelshap_explain(model, samples[i], target_class, dc, kc));
          }
        }
        Explanation e = aggregate_class_explanation(per_sample);
        e.seed = seed;
        e.config["perturbations"] = static_cast<double>(perturbations);
        return e;
      };
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown explainer method");
}

std::vector<Explanation> stage_explain(const ExperimentConfig& cfg) {
  cfg.validate();
  const ClassifierHandle model = load_or_train(cfg);
  const DatasetSplit split = experiment_split(cfg);
  std::filesystem::create_directories(cfg.out / "explanations");
  std::vector<Explanation> out;
  for (FeatureDomain domain : cfg.domains()) {
    for (ExplainerMethod method : cfg.methods) {
      for (std::size_t c = 0; c < split.test.class_count; ++c) {
        const int cls = static_cast<int>(c);
        const std::vector<TimeSeries> samples = explained_samples(split, cls, cfg.samples_per_class);
        if (samples.empty()) continue;  // class absent from the test split
        Explanation e = make_explainer(cfg, method, cls, domain)(*model, samples);
        write_text(cfg.out / "explanations" / (artifact_stem(cls, method, domain) + ".json"),
                   explanation_to_json(e) + '\n');
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::vector<MetricsRow> stage_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  const ClassifierHandle model = load_or_train(cfg);
  const DatasetSplit split = experiment_split(cfg);
  std::vector<MetricsRow> rows;
  std::vector<MetricReport> reports;

  for (FeatureDomain domain : cfg.domains()) {
    const DomainConfig dc = cfg.domain_config(domain);
    const bool has_truth = is_synthetic(cfg) && domain == FeatureDomain::kTimeFrequency;
    for (ExplainerMethod method : cfg.methods) {
      MetricsRow row;
      row.dataset = dataset_label(cfg);
      row.classifier = classifier_label(cfg);
      row.method = std::string(method_name(method));
      row.domain = std::string(domain_name(domain));

      std::array<std::vector<double>, 5> faith;
      std::array<std::vector<double>, 5> rbos;
      std::vector<double> robust;
      std::vector<double> aups;
      std::vector<double> aurs;
      for (std::size_t c = 0; c < split.test.class_count; ++c) {
        const int cls = static_cast<int>(c);
        const auto path = cfg.out / "explanations" / (artifact_stem(cls, method, domain) + ".json");
        if (!std::filesystem::exists(path)) continue;
        const Explanation e = explanation_from_json(read_text(path));
        const std::vector<TimeSeries> samples = explained_samples(split, cls, cfg.samples_per_class);
        if (samples.empty()) continue;
        if (cfg.wants("faithfulness")) {
          for (std::size_t i = 0; i < 5; ++i) {
            if (kMetricDepths[i] <= e.ranked.size()) {
              faith[i].push_back(
                  faithfulness_at_k(*model, samples, e, kMetricDepths[i], dc, cfg.faithfulness_mode));
            }
          }
        }
        if (cfg.wants("robustness")) {
          RobustnessConfig rc;
          rc.sigma = cfg.robustness_sigma;
          rc.trials = cfg.robustness_trials;
          rc.seed = cfg.seed;
          robust.push_back(robustness(make_explainer(cfg, method, cls, domain), *model, samples, dc, rc));
        }
        if (has_truth && (cfg.wants("rbo") || cfg.wants("aup"))) {
          const GroundTruthRanking gt =
              ground_truth_ranking(synthetic_template(synth_config(cfg), cls), cfg.window_size, cfg.hop,
                                   std::nullopt, cls);
          const std::vector<std::size_t> truth = ground_truth_features(gt, e.space);
          const std::vector<std::size_t> predicted = e.top_features(e.ranked.size());
          if (cfg.wants("rbo")) {
            for (std::size_t i = 0; i < 5; ++i) rbos[i].push_back(rbo(predicted, truth, kMetricDepths[i]));
          }
          if (cfg.wants("aup")) {
            const CurveAreas a = area_under_curves(predicted, truth);
            aups.push_back(a.aup);
            aurs.push_back(a.aur);
          }
        }
      }

      const std::map<std::string, std::string> echo = {
          {"dataset", row.dataset}, {"classifier", row.classifier}, {"method", row.method}, {"domain", row.domain}};
      auto summarize = [&](const std::string& name, std::vector<double> values) -> std::optional<double> {
        if (values.empty()) return std::nullopt;
        reports.push_back(summarize_metric(name, std::move(values), echo));
        return reports.back().mean;
      };
      for (std::size_t i = 0; i < 5; ++i) {
        const std::string k = std::to_string(kMetricDepths[i]);
        row.faithfulness[i] = summarize("faithfulness@" + k, faith[i]);
        row.rbo[i] = summarize("rbo@" + k, rbos[i]);
      }
      row.robustness = summarize("robustness", robust);
      row.aup = summarize("aup", aups);
      row.aur = summarize("aur", aurs);
      rows.push_back(std::move(row));
    }
  }
  std::filesystem::create_directories(cfg.out);
  write_text(cfg.out / "metrics.csv", metrics_csv(rows));
  write_text(cfg.out / "metrics.json", metrics_json(rows, reports) + '\n');
  return rows;
}

void stage_plot(const ExperimentConfig& cfg) {
  cfg.validate();
  const ClassifierHandle model = load_or_train(cfg);
  const DatasetSplit split = experiment_split(cfg);
  std::filesystem::create_directories(cfg.out / "plots");
  for (FeatureDomain domain : cfg.domains()) {
    for (ExplainerMethod method : cfg.methods) {
      for (std::size_t c = 0; c < split.test.class_count; ++c) {
        const int cls = static_cast<int>(c);
        const std::string stem = artifact_stem(cls, method, domain);
        const auto path = cfg.out / "explanations" / (stem + ".json");
        if (!std::filesystem::exists(path)) continue;
        const std::vector<TimeSeries> samples = explained_samples(split, cls, 1);
        if (samples.empty()) continue;
        render_explanation_plot(samples.front(), explanation_from_json(read_text(path)), *model,
                                cfg.out / "plots" / (stem + ".svg"), cfg.domain_config(domain));
      }
    }
  }
}

void write_manifest(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  json doc;
  doc["format_version"] = kManifestFormatVersion;
  doc["versions"] = {
      {"spectralx", std::string(library_version())},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + '.' + std::to_string(EIGEN_MAJOR_VERSION) + '.' +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + '.' +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + '.' +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
  };
  doc["seed"] = cfg.seed;
  doc["config"] = json::parse(config_to_json(cfg));
  write_text(cfg.out / "manifest.json", doc.dump(2) + '\n');
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!is_synthetic(cfg)) {
    require(std::filesystem::exists(cfg.dataset), ErrorKind::kDatasetNotFound, "dataset not found: " + cfg.dataset);
  }
  write_manifest(cfg);
  stage_train(cfg);
  RunSummary summary;
  summary.out = cfg.out;
  summary.explanations = stage_explain(cfg).size();
  summary.rows = stage_eval(cfg);
  stage_plot(cfg);
  return summary;
}

std::string error_json(const std::exception& e) {
  std::string kind = "internal";
  if (const auto* err = dynamic_cast<const Error*>(&e)) kind = std::string(kind_name(err->kind()));
  return json{{"error", {{"kind", kind}, {"message", e.what()}}}}.dump();
}

}  // namespace spectralx
