#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectralx/error.hpp"
#include "spectralx/experiment.hpp"

namespace {

using spectralx::ExperimentConfig;

// Raw flag values; folded into an ExperimentConfig after parsing so that the
// same option set serves every subcommand.
struct Flags {
  ExperimentConfig cfg;
  std::vector<std::string> methods = {"combined"};
  std::string faithfulness_mode = "cumulative";
  std::string deletion_fill = "rbp";
  std::string out = "run";
  std::string manifest;
  bool out_given = false;

  ExperimentConfig resolve() const {
    if (!manifest.empty()) {
      // A manifest fixes everything except, optionally, where to write.
      ExperimentConfig c = spectralx::config_from_manifest(manifest);
      if (out_given) c.out = out;
      return c;
    }
    ExperimentConfig c = cfg;
    c.methods.clear();
    for (const std::string& m : methods) c.methods.push_back(spectralx::parse_method(m));
    c.faithfulness_mode = spectralx::parse_faithfulness_mode(faithfulness_mode);
    c.deletion_fill = spectralx::parse_deletion_fill(deletion_fill);
    c.out = out;
    c.validate();
    return c;
  }
};

void add_options(CLI::App& sub, Flags& f) {
  ExperimentConfig& c = f.cfg;
  sub.add_option("--dataset", c.dataset, "'synthetic' or a UCR-format file")->capture_default_str();
  sub.add_option("--classifier", c.classifier, "softmax | mlp | band-rule | external:<cmd>")->capture_default_str();
  sub.add_option("--method", f.methods, "Explainer method(s), comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"insertion", "deletion", "combined", "rise", "lime", "kernelshap"}))
      ->capture_default_str();
  sub.add_option("--domain", c.domain, "Feature domain")
      ->check(CLI::IsMember({"time", "tf", "both"}))
      ->capture_default_str();
  sub.add_option("--window", c.window_size, "STFT window size N")->capture_default_str();
  sub.add_option("--hop", c.hop, "STFT hop (must be N/2)")->capture_default_str();
  sub.add_option("--perturbations", c.perturbations, "Perturbations P per iteration / explanation")
      ->capture_default_str();
  sub.add_option("--mask-size", c.mask_size, "Features per mask R")->capture_default_str();
  sub.add_option("--alpha", c.alpha, "Insertion weight of the combined method")->capture_default_str();
  sub.add_option("--topk", c.top_k, "Features selected by FIA")->capture_default_str();
  sub.add_option("--seed", c.seed, "Global seed")->capture_default_str();
  sub.add_option("--out", f.out, "Run directory")->capture_default_str();
  sub.add_option("--faithfulness-mode", f.faithfulness_mode, "Faithfulness@k removal")
      ->check(CLI::IsMember({"cumulative", "single"}))
      ->capture_default_str();
  sub.add_option("--deletion-fill", f.deletion_fill, "Replacement for removed TF cells")
      ->check(CLI::IsMember({"rbp", "zero"}))
      ->capture_default_str();
  sub.add_option("--samples-per-class", c.samples_per_class, "Test samples explained per class")
      ->capture_default_str();
  sub.add_option("--synthetic-samples", c.synth.samples_per_class, "Synthetic samples per class")
      ->capture_default_str();
  sub.add_option("--hidden-width", c.hidden_width, "MLP hidden width")->capture_default_str();
  sub.add_option("--epochs", c.max_epochs, "Maximum training epochs")->capture_default_str();
  sub.add_option("--metrics", c.metrics, "Metrics to compute, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"faithfulness", "robustness", "rbo", "aup"}))
      ->capture_default_str();
  sub.add_option("--robustness-sigma", c.robustness_sigma, "Relative noise level for robustness")
      ->capture_default_str();
  sub.add_option("--robustness-trials", c.robustness_trials, "Noise trials for robustness")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectralx: time-frequency explanations for time-series classifiers"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file; [<subcommand>] sections mirror the flags");

  Flags flags;
  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset to <out>/synthetic.tsv");
  auto* train = app.add_subcommand("train", "Train or build the classifier, writing <out>/model.json");
  auto* explain = app.add_subcommand("explain", "Explain every class, writing <out>/explanations/");
  auto* eval = app.add_subcommand("eval", "Score the explanations, writing <out>/metrics.csv and metrics.json");
  auto* plot = app.add_subcommand("plot", "Render <out>/plots/*.svg from the explanations");
  auto* run = app.add_subcommand("run", "Full pipeline: manifest, train, explain, eval, plot");
  for (CLI::App* sub : {synth, train, explain, eval, plot, run}) add_options(*sub, flags);
  run->add_option("--manifest", flags.manifest, "Reproduce the run recorded in a manifest.json")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  flags.out_given = run->get_option("--out")->count() > 0;

  try {
    const ExperimentConfig cfg = flags.resolve();
    if (*synth) {
      spectralx::stage_synth(cfg);
    } else if (*train) {
      spectralx::write_manifest(cfg);
      spectralx::stage_train(cfg);
    } else if (*explain) {
      spectralx::stage_explain(cfg);
    } else if (*eval) {
      std::cout << spectralx::metrics_csv(spectralx::stage_eval(cfg));
    } else if (*plot) {
      spectralx::stage_plot(cfg);
    } else {
      const spectralx::RunSummary summary = spectralx::run_experiment(cfg);
      std::cout << "wrote " << summary.explanations << " explanations to " << summary.out.string() << '\n'
                << spectralx::metrics_csv(summary.rows);
    }
  } catch (const std::exception& e) {
    std::cerr << spectralx::error_json(e) << '\n';
    return 1;
  }
  return 0;
}
