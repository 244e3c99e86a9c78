#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "spectralx/classifier.hpp"
#include "spectralx/dataset.hpp"
#include "spectralx/error.hpp"

using namespace spectralx;

namespace {

std::string fake(const std::string& mode, int classes = 3, int length = 96) {
  return std::string(FAKE_CLASSIFIER_PATH) + ' ' + mode + ' ' + std::to_string(classes) + ' ' +
         std::to_string(length);
}

Matrix single(const std::vector<double>& x) {
  Matrix m(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), m.data());
  return m;
}

ErrorKind kind_of(const std::function<void()>& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no spectralx::Error thrown";
  return ErrorKind::kIo;
}

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.samples_per_class = 150;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST(Softmax, ZeroWeightsGiveUniformRows) {
  SoftmaxClassifier model(Matrix::Zero(4, 8), Eigen::VectorXd::Zero(4));
  const Matrix p = model.predict_proba(Matrix::Random(5, 8));
  for (Eigen::Index r = 0; r < 5; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(p(r, c), 0.25);
  }
}

TEST(Classifier, EmptyBatchAndLengthMismatch) {
  SoftmaxClassifier model(Matrix::Zero(3, 8), Eigen::VectorXd::Zero(3));
  const Matrix p = model.predict_proba(Matrix(0, 8));
  EXPECT_EQ(p.rows(), 0);
  EXPECT_EQ(p.cols(), 3);
  EXPECT_EQ(kind_of([&] { model.predict_proba(Matrix::Zero(2, 7)); }), ErrorKind::kInvalidArgument);
}

TEST(Classifier, FunctionClassifierContractChecked) {
  FunctionClassifier bad(2, 4, [](const Matrix& b) { return Matrix::Constant(b.rows(), 2, 0.4); });
  EXPECT_EQ(kind_of([&] { bad.predict_proba(Matrix::Zero(1, 4)); }), ErrorKind::kInvalidArgument);
  FunctionClassifier negative(2, 4, [](const Matrix& b) {
    Matrix m(b.rows(), 2);
    m.col(0).setConstant(-0.5);
    m.col(1).setConstant(1.5);
    return m;
  });
  EXPECT_THROW(negative.predict_proba(Matrix::Zero(1, 4)), Error);
}

TEST(SoftmaxRows, StableForLargeLogits) {
  Matrix logits(1, 3);
  logits << 1000.0, 1000.0, -1000.0;
  const Matrix p = softmax_rows(logits);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(p(0, 2), 0.0, 1e-12);
}

TEST(BandRule, TemplatesClassifiedWithCertainty) {
  const auto cfg = small_synth();
  const auto model = synthetic_band_classifier(cfg, 16, 8);
  for (int c = 0; c < 3; ++c) {
    const Matrix p = model->predict_proba(single(synthetic_template(cfg, c).values));
    EXPECT_GT(p(0, c), 1.0 - 1e-9) << "class " << c;
  }
}

TEST(BandRule, ZeroSignalIsUniform) {
  const auto model = synthetic_band_classifier(small_synth(), 16, 8);
  const Matrix p = model->predict_proba(Matrix::Zero(1, 96));
  for (Eigen::Index c = 0; c < 3; ++c) EXPECT_NEAR(p(0, c), 1.0 / 3.0, 1e-12);
}

TEST(BandRule, MaskingOwnRegionLowersProbability) {
  const auto cfg = small_synth();
  const auto model = synthetic_band_classifier(cfg, 16, 8);
  const auto sample = generate_synthetic(cfg).of_class(0).front();
  const auto* rule = dynamic_cast<const BandEnergyClassifier*>(model.get());
  ASSERT_NE(rule, nullptr);
  auto masked = sample.values;
  for (std::size_t i = 64; i < 96; ++i) masked[i] = 0.0;  // the high tone of class 0
  const double before = model->predict_proba(single(sample.values))(0, 0);
  const double after = model->predict_proba(single(masked))(0, 0);
  EXPECT_LT(after, before);
  EXPECT_LT(rule->energies(masked)[0], rule->energies(sample.values)[0]);
}

TEST(BandRule, RejectsOutOfRangeRegions) {
  std::vector<std::vector<BandRegion>> regions = {{{0, 2, 0, 2}}, {{0, 20, 0, 2}}};
  EXPECT_EQ(kind_of([&] { band_energy_classifier(regions, 96, 16, 8); }), ErrorKind::kInvalidArgument);
}

TEST(Training, SingleClassRejected) {
  auto d = generate_synthetic(small_synth());
  LabeledDataset one{"one", 3, d.of_class(0)};
  TrainConfig tc;
  tc.max_epochs = 2;
  EXPECT_EQ(kind_of([&] { train_classifier(one, one, tc); }), ErrorKind::kInvalidArgument);
}

TEST(Training, MlpLearnsSyntheticAndIsDeterministic) {
  const auto split = split_dataset(generate_synthetic(small_synth()), {}, 4);
  TrainConfig tc;
  tc.hidden_width = 32;
  tc.max_epochs = 60;
  tc.seed = 9;
  const auto a = train_classifier(split.train, split.validation, tc);
  const auto b = train_classifier(split.train, split.validation, tc);
  EXPECT_GE(evaluate_classifier(*a.model, split.test).accuracy, 0.95);
  EXPECT_EQ(model_to_json(*a.model), model_to_json(*b.model));
  EXPECT_LE(a.best_epoch, a.epochs_run);
  const Matrix x = to_batch(split.test.samples);
  EXPECT_EQ(a.model->predict_proba(x), a.model->predict_proba(x));
}

TEST(Training, SoftmaxLearnsSynthetic) {
  const auto split = split_dataset(generate_synthetic(small_synth()), {}, 4);
  TrainConfig tc;
  tc.kind = ModelKind::kSoftmax;
  tc.max_epochs = 60;
  const auto r = train_classifier(split.train, split.validation, tc);
  EXPECT_EQ(r.model->kind(), ClassifierKind::kSoftmax);
  EXPECT_GE(evaluate_classifier(*r.model, split.test).accuracy, 0.8);
}

TEST(Evaluation, MacroMetricsOfPerfectModel) {
  const auto cfg = small_synth();
  const auto d = generate_synthetic(cfg);
  const auto report = evaluate_classifier(*synthetic_band_classifier(cfg, 16, 8), d);
  EXPECT_GT(report.accuracy, 0.99);
  EXPECT_NEAR(report.f1, 2 * report.precision * report.recall / (report.precision + report.recall), 0.02);
}

TEST(ModelIo, RoundTripsEveryKind) {
  const auto split = split_dataset(generate_synthetic(small_synth()), {}, 4);
  TrainConfig tc;
  tc.hidden_width = 8;
  tc.max_epochs = 2;
  const auto mlp = train_classifier(split.train, split.validation, tc).model;
  tc.kind = ModelKind::kSoftmax;
  const auto soft = train_classifier(split.train, split.validation, tc).model;
  const auto rule = synthetic_band_classifier(small_synth(), 16, 8);
  const Matrix x = to_batch(split.test.samples);
  for (const auto& model : {mlp, soft, rule}) {
    const auto path = std::filesystem::temp_directory_path() / "spectralx_model.json";
    save_model(*model, path);
    const auto back = load_model(path);
    EXPECT_EQ(back->kind(), model->kind());
    EXPECT_EQ(back->predict_proba(x), model->predict_proba(x));
  }
  EXPECT_EQ(kind_of([] { model_from_json("{\"format_version\": 1}"); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { model_from_json("not json"); }), ErrorKind::kFormat);
}

TEST(External, UniformRowsRoundTrip) {
  const auto model = external_classifier(fake("uniform"));
  EXPECT_EQ(model->class_count(), 3u);
  EXPECT_EQ(model->input_length(), 96u);
  const Matrix p = model->predict_proba(Matrix::Random(4, 96));
  ASSERT_EQ(p.rows(), 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) EXPECT_NEAR(p(r, c), 1.0 / 3.0, 1e-12);
  }
  // A second batch reuses the same child.
  EXPECT_EQ(model->predict_proba(Matrix::Zero(2, 96)).rows(), 2);
}

TEST(External, ProtocolViolations) {
  std::string message;
  EXPECT_EQ(kind_of([&] { external_classifier(fake("wrong-id"))->predict_proba(Matrix::Zero(1, 96)); }, &message),
            ErrorKind::kExternalClassifier);
  EXPECT_NE(message.find("id"), std::string::npos) << message;
  EXPECT_EQ(kind_of([&] { external_classifier(fake("sum09"))->predict_proba(Matrix::Zero(1, 96)); }),
            ErrorKind::kExternalClassifier);
  EXPECT_EQ(kind_of([&] { external_classifier(fake("crash"))->predict_proba(Matrix::Zero(1, 96)); }, &message),
            ErrorKind::kExternalClassifier);
  EXPECT_NE(message.find("simulated crash"), std::string::npos) << message;
  EXPECT_EQ(kind_of([&] { external_classifier(fake("garbage")); }), ErrorKind::kExternalClassifier);
  EXPECT_EQ(kind_of([&] { external_classifier("exit 0"); }), ErrorKind::kExternalClassifier);
}

TEST(External, TimesOut) {
  EXPECT_EQ(kind_of([] { external_classifier("sleep 5", std::chrono::milliseconds(200)); }),
            ErrorKind::kExternalClassifier);
}
