#include "spectralx/classifier.hpp"

#include <cmath>

#include "spectralx/error.hpp"

namespace spectralx {

std::string_view classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kSoftmax:
      return "softmax";
    case ClassifierKind::kMlp:
      return "mlp";
    case ClassifierKind::kBandEnergyRule:
      return "band-rule";
    case ClassifierKind::kExternal:
      return "external";
    case ClassifierKind::kFunction:
      return "function";
  }
  return "unknown";
}

Matrix Classifier::predict_proba(const Matrix& batch) const {
  if (batch.rows() == 0) return Matrix(0, static_cast<Eigen::Index>(class_count()));
  require(static_cast<std::size_t>(batch.cols()) == input_length(), ErrorKind::kInvalidArgument,
          "classifier expects series of length " + std::to_string(input_length()) + ", got " +
              std::to_string(batch.cols()));
  Matrix probs = predict_rows(batch);
  const ErrorKind contract =
      kind() == ClassifierKind::kExternal ? ErrorKind::kExternalClassifier : ErrorKind::kInvalidArgument;
  require(probs.rows() == batch.rows() && static_cast<std::size_t>(probs.cols()) == class_count(), contract,
          "classifier returned a probability matrix of the wrong shape");
  const double tol = row_sum_tolerance();
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(r, c);
      require(std::isfinite(p) && p >= 0.0, contract, "classifier returned a negative or non-finite probability");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= tol, contract,
            "probability row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
  return probs;
}

Matrix Classifier::predict_proba(std::span<const TimeSeries> batch) const { return predict_proba(to_batch(batch)); }

Matrix to_batch(std::span<const TimeSeries> samples) {
  if (samples.empty()) return Matrix(0, 0);
  const std::size_t len = samples.front().length();
  Matrix out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].length() == len, ErrorKind::kInvalidArgument, "batch series have different lengths");
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(samples[i].values.data(),
                                                                                 static_cast<Eigen::Index>(len));
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - peak);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  return out;
}

SoftmaxClassifier::SoftmaxClassifier(Matrix weights, Eigen::VectorXd bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  require(weights_.rows() >= 2 && weights_.cols() >= 1 && bias_.size() == weights_.rows(),
          ErrorKind::kInvalidArgument, "inconsistent softmax parameter shapes");
}

Matrix SoftmaxClassifier::predict_rows(const Matrix& batch) const {
  Matrix logits = batch * weights_.transpose();
  logits.rowwise() += bias_.transpose();
  return softmax_rows(logits);
}

MlpClassifier::MlpClassifier(Matrix hidden_weights, Eigen::VectorXd hidden_bias, Matrix output_weights,
                             Eigen::VectorXd output_bias)
    : hidden_weights_(std::move(hidden_weights)),
      hidden_bias_(std::move(hidden_bias)),
      output_weights_(std::move(output_weights)),
      output_bias_(std::move(output_bias)) {
  require(hidden_weights_.rows() >= 1 && hidden_bias_.size() == hidden_weights_.rows() &&
              output_weights_.cols() == hidden_weights_.rows() && output_weights_.rows() >= 2 &&
              output_bias_.size() == output_weights_.rows(),
          ErrorKind::kInvalidArgument, "inconsistent MLP parameter shapes");
}

Matrix MlpClassifier::predict_rows(const Matrix& batch) const {
  Matrix hidden = batch * hidden_weights_.transpose();
  hidden.rowwise() += hidden_bias_.transpose();
  hidden = hidden.cwiseMax(0.0);
  Matrix logits = hidden * output_weights_.transpose();
  logits.rowwise() += output_bias_.transpose();
  return softmax_rows(logits);
}

BandEnergyClassifier::BandEnergyClassifier(std::vector<std::vector<BandRegion>> class_regions,
                                           std::size_t input_length, std::size_t window_size, std::size_t hop,
                                           double sharpness)
    : regions_(std::move(class_regions)),
      input_length_(input_length),
      window_(make_window(WindowKind::kHann, window_size)),
      hop_(hop),
      sharpness_(sharpness) {
  require(regions_.size() >= 2, ErrorKind::kInvalidArgument, "band rule needs regions for at least two classes");
  require(sharpness_ > 0.0 && std::isfinite(sharpness_), ErrorKind::kInvalidArgument, "sharpness must be positive");
  const FrameLayout layout = make_frame_layout(input_length, window_size, hop);
  const std::size_t bins = window_size / 2 + 1;
  for (std::size_t c = 0; c < regions_.size(); ++c) {
    require(!regions_[c].empty(), ErrorKind::kInvalidArgument, "class " + std::to_string(c) + " has no band region");
    for (const BandRegion& r : regions_[c]) {
      require(r.frame_begin < r.frame_end && r.frame_end <= layout.frame_count && r.bin_begin < r.bin_end &&
                  r.bin_end <= bins,
              ErrorKind::kInvalidArgument,
              "band region for class " + std::to_string(c) + " is outside the " +
                  std::to_string(layout.frame_count) + "x" + std::to_string(bins) + " STFT grid");
    }
  }
}

std::vector<double> BandEnergyClassifier::energies(std::span<const double> signal) const {
  const Spectrogram s = stft(signal, window_, hop_);
  std::vector<double> e(regions_.size(), 0.0);
  for (std::size_t c = 0; c < regions_.size(); ++c) {
    for (const BandRegion& r : regions_[c]) {
      for (std::size_t m = r.frame_begin; m < r.frame_end; ++m) {
        for (std::size_t k = r.bin_begin; k < r.bin_end; ++k) e[c] += std::norm(s(m, k));
      }
    }
  }
  return e;
}

Matrix BandEnergyClassifier::predict_rows(const Matrix& batch) const {
  Matrix logits(batch.rows(), static_cast<Eigen::Index>(regions_.size()));
  std::vector<double> row(static_cast<std::size_t>(batch.cols()));
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (Eigen::Index i = 0; i < batch.cols(); ++i) row[static_cast<std::size_t>(i)] = batch(r, i);
    const std::vector<double> e = energies(row);
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= static_cast<double>(e.size());
    for (std::size_t c = 0; c < e.size(); ++c) {
      logits(r, static_cast<Eigen::Index>(c)) = mean > 0.0 ? sharpness_ * e[c] / mean : 0.0;
    }
  }
  return softmax_rows(logits);
}

ClassifierHandle band_energy_classifier(std::vector<std::vector<BandRegion>> class_regions,
                                        std::size_t input_length, std::size_t window_size, std::size_t hop) {
  return std::make_shared<BandEnergyClassifier>(std::move(class_regions), input_length, window_size, hop);
}

ClassifierHandle synthetic_band_classifier(const SynthConfig& cfg, std::size_t window_size, std::size_t hop) {
  return band_energy_classifier(synthetic_band_regions(cfg, window_size, hop, RegionExtent::kContained),
                                cfg.series_length(), window_size, hop);
}

FunctionClassifier::FunctionClassifier(std::size_t class_count, std::size_t input_length, Fn fn)
    : class_count_(class_count), input_length_(input_length), fn_(std::move(fn)) {
  require(class_count_ >= 1 && input_length_ >= 1 && static_cast<bool>(fn_), ErrorKind::kInvalidArgument,
          "function classifier needs a callable and positive shapes");
}

}  // namespace spectralx
