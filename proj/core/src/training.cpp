#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "spectralx/classifier.hpp"
#include "spectralx/error.hpp"
#include "spectralx/random.hpp"

namespace spectralx {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Adam state for one parameter block, stored as a flat array.
struct AdamSlot {
  Eigen::ArrayXd m;
  Eigen::ArrayXd v;

  explicit AdamSlot(Eigen::Index n) : m(Eigen::ArrayXd::Zero(n)), v(Eigen::ArrayXd::Zero(n)) {}

  template <typename Param, typename Grad>
  void step(Param& param, const Grad& grad, double lr, std::size_t t) {
    Eigen::Map<Eigen::ArrayXd> p(param.data(), param.size());
    const Eigen::Map<const Eigen::ArrayXd> g(grad.data(), grad.size());
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.square();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    p -= lr * (m / c1) / ((v / c2).sqrt() + kAdamEps);
  }
};

struct Params {
  // Softmax uses only out_w / out_b with hidden width 0.
  Matrix hid_w;
  Eigen::VectorXd hid_b;
  Matrix out_w;
  Eigen::VectorXd out_b;
};

struct Forward {
  Matrix hidden_pre;
  Matrix hidden;
  Matrix probs;
};

Forward forward(const Params& p, bool mlp, const Matrix& x) {
  Forward f;
  const Matrix* features = &x;
  if (mlp) {
    f.hidden_pre = x * p.hid_w.transpose();
    f.hidden_pre.rowwise() += p.hid_b.transpose();
    f.hidden = f.hidden_pre.cwiseMax(0.0);
    features = &f.hidden;
  }
  Matrix logits = *features * p.out_w.transpose();
  logits.rowwise() += p.out_b.transpose();
  f.probs = softmax_rows(logits);
  return f;
}

ClassifierHandle to_handle(const Params& p, bool mlp) {
  if (mlp) return std::make_shared<MlpClassifier>(p.hid_w, p.hid_b, p.out_w, p.out_b);
  return std::make_shared<SoftmaxClassifier>(p.out_w, p.out_b);
}

double accuracy_of(const Params& p, bool mlp, const Matrix& x, const std::vector<int>& labels) {
  const Matrix probs = forward(p, mlp, x).probs;
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg = 0;
    probs.row(r).maxCoeff(&arg);
    hits += arg == labels[static_cast<std::size_t>(r)];
  }
  return labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> labels_of(const LabeledDataset& d) {
  std::vector<int> out;
  out.reserve(d.size());
  for (const auto& s : d.samples) out.push_back(*s.label);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kInvalidArgument,
          "learning_rate must be positive");
  require(batch_size > 0 && max_epochs > 0 && patience > 0, ErrorKind::kInvalidArgument,
          "batch_size, max_epochs and patience must be positive");
  require(kind != ModelKind::kMlp || hidden_width > 0, ErrorKind::kInvalidArgument, "hidden_width must be positive");
}

TrainResult train_classifier(const LabeledDataset& train, const LabeledDataset& validation, const TrainConfig& cfg) {
  cfg.validate();
  train.validate();
  validation.validate();
  require(train.size() > 0 && validation.size() > 0, ErrorKind::kInvalidArgument,
          "training and validation sets must be non-empty");
  require(train.series_length() == validation.series_length() && train.class_count == validation.class_count,
          ErrorKind::kInvalidArgument, "training and validation sets disagree on length or class count");
  std::set<int> present;
  for (const auto& s : train.samples) present.insert(*s.label);
  require(train.class_count >= 2 && present.size() >= 2, ErrorKind::kInvalidArgument,
          "training needs at least two classes (class_count < 2)");

  const bool mlp = cfg.kind == ModelKind::kMlp;
  const auto classes = static_cast<Eigen::Index>(train.class_count);
  const auto length = static_cast<Eigen::Index>(train.series_length());
  const auto width = static_cast<Eigen::Index>(cfg.hidden_width);

  std::mt19937_64 rng(derive_seed(cfg.seed, 0x7a1d));
  Params p;
  if (mlp) {
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(length)));
    std::normal_distribution<double> glorot(0.0, std::sqrt(2.0 / static_cast<double>(width + classes)));
    p.hid_w = Matrix(width, length);
    for (Eigen::Index i = 0; i < p.hid_w.size(); ++i) p.hid_w.data()[i] = he(rng);
    p.hid_b = Eigen::VectorXd::Zero(width);
    p.out_w = Matrix(classes, width);
    for (Eigen::Index i = 0; i < p.out_w.size(); ++i) p.out_w.data()[i] = glorot(rng);
  } else {
    p.out_w = Matrix::Zero(classes, length);
  }
  p.out_b = Eigen::VectorXd::Zero(classes);

  AdamSlot s_hid_w(p.hid_w.size()), s_hid_b(p.hid_b.size()), s_out_w(p.out_w.size()), s_out_b(p.out_b.size());

  const Matrix x_train = to_batch(train.samples);
  const Matrix x_val = to_batch(validation.samples);
  const std::vector<int> y_train = labels_of(train);
  const std::vector<int> y_val = labels_of(validation);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  Params best = p;
  double best_val = -1.0;
  std::size_t best_epoch = 0;
  std::size_t step = 0;
  std::size_t epoch = 0;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - begin);
      Matrix xb(rows, length);
      Matrix target = Matrix::Zero(rows, classes);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t idx = order[begin + static_cast<std::size_t>(r)];
        xb.row(r) = x_train.row(static_cast<Eigen::Index>(idx));
        target(r, y_train[idx]) = 1.0;
      }
      const Forward f = forward(p, mlp, xb);
      for (Eigen::Index r = 0; r < rows; ++r) {
        loss_sum -= std::log(std::max(f.probs(r, y_train[order[begin + static_cast<std::size_t>(r)]]), 1e-300));
      }

      const Matrix g_logits = (f.probs - target) / static_cast<double>(rows);
      const Matrix& features = mlp ? f.hidden : xb;
      const Matrix g_out_w = g_logits.transpose() * features;
      const Eigen::VectorXd g_out_b = g_logits.colwise().sum().transpose();
      ++step;
      if (mlp) {
        Matrix g_hidden = g_logits * p.out_w;
        g_hidden = g_hidden.cwiseProduct((f.hidden_pre.array() > 0.0).cast<double>().matrix());
        const Matrix g_hid_w = g_hidden.transpose() * xb;
        const Eigen::VectorXd g_hid_b = g_hidden.colwise().sum().transpose();
        s_hid_w.step(p.hid_w, g_hid_w, cfg.learning_rate, step);
        s_hid_b.step(p.hid_b, g_hid_b, cfg.learning_rate, step);
      }
      s_out_w.step(p.out_w, g_out_w, cfg.learning_rate, step);
      s_out_b.step(p.out_b, g_out_b, cfg.learning_rate, step);
    }
    require(std::isfinite(loss_sum), ErrorKind::kTrainingDiverged,
            "training diverged: non-finite loss at epoch " + std::to_string(epoch));

    const double val_acc = accuracy_of(p, mlp, x_val, y_val);
    if (val_acc > best_val) {
      best_val = val_acc;
      best = p;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }

  TrainResult result;
  result.model = to_handle(best, mlp);
  result.train = evaluate_classifier(*result.model, train);
  result.validation = evaluate_classifier(*result.model, validation);
  result.epochs_run = std::min(epoch, cfg.max_epochs);
  result.best_epoch = best_epoch;
  return result;
}

ClassificationReport evaluate_classifier(const Classifier& model, const LabeledDataset& data) {
  ClassificationReport report;
  if (data.size() == 0) return report;
  const Matrix probs = model.predict_proba(data.samples);
  const std::size_t classes = model.class_count();
  std::vector<std::size_t> tp(classes, 0), predicted(classes, 0), actual(classes, 0);
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg = 0;
    probs.row(r).maxCoeff(&arg);
    const auto truth = static_cast<std::size_t>(*data.samples[static_cast<std::size_t>(r)].label);
    const auto pred = static_cast<std::size_t>(arg);
    ++predicted[pred];
    ++actual[truth];
    if (pred == truth) {
      ++tp[pred];
      ++hits;
    }
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (actual[c] == 0 && predicted[c] == 0) continue;
    const double precision = predicted[c] ? static_cast<double>(tp[c]) / static_cast<double>(predicted[c]) : 0.0;
    const double recall = actual[c] ? static_cast<double>(tp[c]) / static_cast<double>(actual[c]) : 0.0;
    report.precision += precision;
    report.recall += recall;
    report.f1 += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    ++counted;
  }
  if (counted > 0) {
    report.precision /= static_cast<double>(counted);
    report.recall /= static_cast<double>(counted);
    report.f1 /= static_cast<double>(counted);
  }
  return report;
}

}  // namespace spectralx
