#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spectralx/dataset.hpp"
#include "spectralx/signal.hpp"

namespace spectralx {

// Row-major so each row is one signal / one probability vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ClassifierKind { kSoftmax, kMlp, kBandEnergyRule, kExternal, kFunction };

std::string_view classifier_kind_name(ClassifierKind kind);

// The black box: maps a batch of raw series to per-class probability rows.
// Implementations are immutable after construction; predict_proba is safe to
// call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ClassifierKind kind() const = 0;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t input_length() const = 0;

  // Validates the batch shape and the probability contract of the result.
  // An empty batch yields a 0 x class_count matrix.
  Matrix predict_proba(const Matrix& batch) const;
  Matrix predict_proba(std::span<const TimeSeries> batch) const;

 protected:
  virtual Matrix predict_rows(const Matrix& batch) const = 0;
  // Allowed deviation of a row sum from 1.
  virtual double row_sum_tolerance() const { return 1e-6; }
};

using ClassifierHandle = std::shared_ptr<const Classifier>;

// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

// Multinomial logistic regression on the raw samples.
class SoftmaxClassifier final : public Classifier {
 public:
  SoftmaxClassifier(Matrix weights, Eigen::VectorXd bias);

  ClassifierKind kind() const override { return ClassifierKind::kSoftmax; }
  std::size_t class_count() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t input_length() const override { return static_cast<std::size_t>(weights_.cols()); }
  const Matrix& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }

 protected:
  Matrix predict_rows(const Matrix& batch) const override;

 private:
  Matrix weights_;  // classes x input_length
  Eigen::VectorXd bias_;
};

// One ReLU hidden layer followed by softmax.
class MlpClassifier final : public Classifier {
 public:
  MlpClassifier(Matrix hidden_weights, Eigen::VectorXd hidden_bias, Matrix output_weights,
                Eigen::VectorXd output_bias);

  ClassifierKind kind() const override { return ClassifierKind::kMlp; }
  std::size_t class_count() const override { return static_cast<std::size_t>(output_weights_.rows()); }
  std::size_t input_length() const override { return static_cast<std::size_t>(hidden_weights_.cols()); }
  std::size_t hidden_width() const { return static_cast<std::size_t>(hidden_weights_.rows()); }
  const Matrix& hidden_weights() const { return hidden_weights_; }
  const Eigen::VectorXd& hidden_bias() const { return hidden_bias_; }
  const Matrix& output_weights() const { return output_weights_; }
  const Eigen::VectorXd& output_bias() const { return output_bias_; }

 protected:
  Matrix predict_rows(const Matrix& batch) const override;

 private:
  Matrix hidden_weights_;  // hidden x input_length
  Eigen::VectorXd hidden_bias_;
  Matrix output_weights_;  // classes x hidden
  Eigen::VectorXd output_bias_;
};

// Deterministic rule: class c's energy is the summed |S|^2 of the input's
// STFT inside c's regions; probabilities are softmax(sharpness * E / mean(E)).
class BandEnergyClassifier final : public Classifier {
 public:
  BandEnergyClassifier(std::vector<std::vector<BandRegion>> class_regions, std::size_t input_length,
                       std::size_t window_size, std::size_t hop, double sharpness = 10.0);

  ClassifierKind kind() const override { return ClassifierKind::kBandEnergyRule; }
  std::size_t class_count() const override { return regions_.size(); }
  std::size_t input_length() const override { return input_length_; }
  const std::vector<std::vector<BandRegion>>& regions() const { return regions_; }
  std::size_t window_size() const { return window_.size(); }
  std::size_t hop() const { return hop_; }
  double sharpness() const { return sharpness_; }

  // Per-class region energies of one signal.
  std::vector<double> energies(std::span<const double> signal) const;

 protected:
  Matrix predict_rows(const Matrix& batch) const override;

 private:
  std::vector<std::vector<BandRegion>> regions_;
  std::size_t input_length_;
  WindowSpec window_;
  std::size_t hop_;
  double sharpness_;
};

// Rule classifier over the canonical synthetic regions (frames fully inside
// each active segment).
ClassifierHandle band_energy_classifier(std::vector<std::vector<BandRegion>> class_regions,
                                        std::size_t input_length, std::size_t window_size, std::size_t hop);
ClassifierHandle synthetic_band_classifier(const SynthConfig& cfg, std::size_t window_size, std::size_t hop);

// Wraps an arbitrary batch function; used for analytic test models.
class FunctionClassifier final : public Classifier {
 public:
  using Fn = std::function<Matrix(const Matrix&)>;
  FunctionClassifier(std::size_t class_count, std::size_t input_length, Fn fn);

  ClassifierKind kind() const override { return ClassifierKind::kFunction; }
  std::size_t class_count() const override { return class_count_; }
  std::size_t input_length() const override { return input_length_; }

 protected:
  Matrix predict_rows(const Matrix& batch) const override { return fn_(batch); }

 private:
  std::size_t class_count_;
  std::size_t input_length_;
  Fn fn_;
};

// Child process speaking newline-delimited JSON on stdin/stdout:
//   -> {"type":"hello"}            <- {"type":"hello","class_count":C,"input_length":L}
//   -> {"type":"predict","id":N,"signals":[[...],...]}
//   <- {"type":"probs","id":N,"rows":[[...],...]}
// Requests are serialized; every failure raises kExternalClassifier with the
// child's captured stderr appended.
class ExternalClassifier final : public Classifier {
 public:
  explicit ExternalClassifier(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalClassifier() override;
  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  ClassifierKind kind() const override { return ClassifierKind::kExternal; }
  std::size_t class_count() const override { return class_count_; }
  std::size_t input_length() const override { return input_length_; }
  const std::string& command() const { return command_; }

 protected:
  Matrix predict_rows(const Matrix& batch) const override;
  double row_sum_tolerance() const override { return 1e-3; }

 private:
  class Process;

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Process> process_;
  std::size_t class_count_ = 0;
  std::size_t input_length_ = 0;
};

ClassifierHandle external_classifier(const std::string& command,
                                     std::chrono::milliseconds timeout = std::chrono::seconds(60));

enum class ModelKind { kSoftmax, kMlp };

struct TrainConfig {
  ModelKind kind = ModelKind::kMlp;
  std::size_t hidden_width = 128;
  double learning_rate = 2e-4;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClassificationReport {
  double accuracy = 0.0;
  // Macro averages over classes.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TrainResult {
  ClassifierHandle model;
  ClassificationReport train;
  ClassificationReport validation;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

// Mini-batch Adam (beta 0.9/0.999, eps 1e-8) on cross-entropy with early
// stopping on validation accuracy; returns the best-validation parameters.
TrainResult train_classifier(const LabeledDataset& train, const LabeledDataset& validation, const TrainConfig& cfg);

ClassificationReport evaluate_classifier(const Classifier& model, const LabeledDataset& data);

// Samples of a dataset as a batch matrix.
Matrix to_batch(std::span<const TimeSeries> samples);

// JSON model documents: {format_version, kind, class_count, input_length, parameters}.
std::string model_to_json(const Classifier& model);
ClassifierHandle model_from_json(const std::string& text);
void save_model(const Classifier& model, const std::filesystem::path& path);
ClassifierHandle load_model(const std::filesystem::path& path);

}  // namespace spectralx
