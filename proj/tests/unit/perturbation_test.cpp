#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "spectralx/error.hpp"
#include "spectralx/perturbation.hpp"

using namespace spectralx;

namespace {

Spectrogram spectrogram_of(std::uint64_t seed, std::size_t length = 96) {
  return stft(oracle::random_signal(length, seed), make_window(WindowKind::kHann, 16), 8);
}

PerturbationMask mask_of(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return {v};
}

}  // namespace

TEST(FeatureSpace, Sizes) {
  const auto tf = FeatureSpace::time_frequency(13, 9);
  EXPECT_EQ(tf.feature_count(), 117u);
  EXPECT_EQ(tf.cell(tf.feature({4, 7})), (TfCell{4, 7}));
  const auto time = FeatureSpace::time_segments(100, 16);
  EXPECT_EQ(time.feature_count(), 7u);  // trailing partial segment counts
  EXPECT_EQ(time.segment_span(6), (std::pair<std::size_t, std::size_t>{96, 100}));
  EXPECT_THROW(time.segment_span(7), Error);
}

TEST(Rbp, PicksSteadiestStrongBin) {
  auto s = spectrogram_of(1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t m = 0; m < s.frames(); ++m) {
    for (std::size_t k = 0; k < s.bins(); ++k) s(m, k) = k == 3 ? std::complex<double>(0.0, 2.0) : u(rng);
  }
  const auto rbp = compute_rbp(s);
  EXPECT_EQ(rbp.chosen_bin, 3u);
  for (std::size_t m = 0; m < s.frames(); ++m) {
    for (std::size_t k = 0; k < s.bins(); ++k) {
      EXPECT_EQ(rbp.spectrogram(m, k), k == 3 ? s(m, k) : std::complex<double>{});
    }
  }
  EXPECT_EQ(compute_rbp(rbp.spectrogram).chosen_bin, 3u);
}

TEST(Rbp, ZeroSpectrogramTiesToBinZero) {
  const auto s = stft(std::vector<double>(96, 0.0), make_window(WindowKind::kHann, 16), 8);
  const auto rbp = compute_rbp(s);
  EXPECT_EQ(rbp.chosen_bin, 0u);
  for (auto c : rbp.spectrogram.cells()) EXPECT_EQ(c, std::complex<double>{});
}

TEST(Rbp, MatchesScoreFormula) {
  const auto s = spectrogram_of(8);
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < s.bins(); ++k) {
    double mean = 0.0, var = 0.0;
    for (std::size_t m = 0; m < s.frames(); ++m) mean += std::abs(s(m, k));
    mean /= double(s.frames());
    for (std::size_t m = 0; m < s.frames(); ++m) var += std::pow(std::abs(s(m, k)) - mean, 2);
    var /= double(s.frames());
    const double score = mean / (var + 1e-12);
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  EXPECT_EQ(compute_rbp(s).chosen_bin, best);
}

TEST(SampleMasks, ForcedSelections) {
  const auto space = FeatureSpace::time_frequency(2, 2);
  const auto all = sample_masks(space, 4, 1, 0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].selected, (std::vector<std::size_t>{0, 1, 2, 3}));

  const auto twenty = FeatureSpace::time_frequency(4, 5);
  std::vector<std::size_t> excluded(10);
  std::iota(excluded.begin(), excluded.end(), 0);
  for (const auto& m : sample_masks(twenty, 10, 50, 1, excluded)) {
    EXPECT_EQ(m.selected, (std::vector<std::size_t>{10, 11, 12, 13, 14, 15, 16, 17, 18, 19}));
  }
  EXPECT_THROW(sample_masks(twenty, 11, 1, 1, excluded), Error);
  EXPECT_THROW(sample_masks(twenty, 0, 1, 1), Error);
}

TEST(SampleMasks, CoverageReproducibilityAndShape) {
  const auto space = FeatureSpace::time_frequency(4, 5);
  const auto masks = sample_masks(space, 10, 2000, 42);
  std::vector<std::size_t> hits(20, 0);
  for (const auto& m : masks) {
    ASSERT_EQ(m.selected.size(), 10u);
    EXPECT_TRUE(std::is_sorted(m.selected.begin(), m.selected.end()));
    EXPECT_EQ(std::adjacent_find(m.selected.begin(), m.selected.end()), m.selected.end());
    for (auto f : m.selected) ++hits[f];
  }
  for (auto h : hits) {
    EXPECT_GT(h, 0u);
    EXPECT_NEAR(double(h) / 2000.0, 0.5, 0.05);  // uniform inclusion rate R/F
  }
  EXPECT_EQ(sample_masks(space, 10, 2000, 42), masks);
  EXPECT_NE(sample_masks(space, 10, 2000, 43), masks);
}

TEST(TfPerturbation, DegenerateCases) {
  const auto s = spectrogram_of(2);
  const auto rbp = compute_rbp(s);
  const auto space = FeatureSpace::of(s);
  std::vector<std::size_t> all(space.feature_count());
  std::iota(all.begin(), all.end(), 0);

  const auto full = apply_tf_perturbation(s, rbp, {all}, PerturbationMode::kInsertion);
  EXPECT_TRUE(std::equal(full.cells().begin(), full.cells().end(), s.cells().begin()));
  const auto none = apply_tf_perturbation(s, rbp, {}, PerturbationMode::kDeletion);
  EXPECT_TRUE(std::equal(none.cells().begin(), none.cells().end(), s.cells().begin()));
  const auto base = apply_tf_perturbation(s, rbp, {}, PerturbationMode::kInsertion);
  EXPECT_TRUE(std::equal(base.cells().begin(), base.cells().end(), rbp.spectrogram.cells().begin()));
}

TEST(TfPerturbation, InsertionAndDeletionAreComplementary) {
  const auto s = spectrogram_of(3);
  const auto rbp = compute_rbp(s);
  const auto space = FeatureSpace::of(s);
  const std::vector<std::size_t> deleted = {0, 5, 17, 40, 99, 116};
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < space.feature_count(); ++f) {
    if (std::find(deleted.begin(), deleted.end(), f) == deleted.end()) kept.push_back(f);
  }
  const auto ins = apply_tf_perturbation(s, rbp, {kept}, PerturbationMode::kInsertion);
  const auto del = apply_tf_perturbation(s, rbp, {deleted}, PerturbationMode::kDeletion);
  EXPECT_TRUE(std::equal(ins.cells().begin(), ins.cells().end(), del.cells().begin()));
}

TEST(TfPerturbation, FixedSetJoinsMask) {
  const auto s = spectrogram_of(4);
  const auto rbp = compute_rbp(s);
  const std::vector<std::size_t> fixed = {7, 30};
  const auto split = apply_tf_perturbation(s, rbp, mask_of({1, 2}), PerturbationMode::kDeletion, fixed);
  const auto joined = apply_tf_perturbation(s, rbp, mask_of({1, 2, 7, 30}), PerturbationMode::kDeletion);
  EXPECT_TRUE(std::equal(split.cells().begin(), split.cells().end(), joined.cells().begin()));
}

TEST(TfPerturbation, Errors) {
  const auto s = spectrogram_of(5);
  const auto other = compute_rbp(spectrogram_of(5, 128));
  EXPECT_THROW(apply_tf_perturbation(s, other, {}, PerturbationMode::kInsertion), Error);
  try {
    apply_tf_perturbation(s, other, {}, PerturbationMode::kInsertion);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGeometryMismatch);
  }
  const std::vector<std::size_t> fixed = {1};
  EXPECT_THROW(apply_tf_perturbation(s, compute_rbp(s), mask_of({1}), PerturbationMode::kDeletion, fixed), Error);
}

TEST(TimePerturbation, ZeroesSegments) {
  TimeSeries x{oracle::random_signal(48, 6), std::nullopt, std::nullopt};
  EXPECT_EQ(apply_time_perturbation(x, {}).values, x.values);
  const std::vector<std::size_t> one = {1};
  const auto y = apply_time_perturbation(x, one);
  for (std::size_t i = 0; i < 48; ++i) EXPECT_EQ(y.values[i], (i >= 16 && i < 32) ? 0.0 : x.values[i]);
  const std::vector<std::size_t> all = {0, 1, 2};
  for (double v : apply_time_perturbation(x, all).values) EXPECT_EQ(v, 0.0);
  const std::vector<std::size_t> bad = {3};
  EXPECT_THROW(apply_time_perturbation(x, bad), Error);
}

TEST(Renderer, MatchesLiteralInverseTransform) {
  const auto x = oracle::random_signal(96, 7);
  const auto window = make_window(WindowKind::kHann, 16);
  const auto s = stft(x, window, 8);
  const auto rbp = compute_rbp(s);
  for (DeletionFill fill : {DeletionFill::kRbp, DeletionFill::kZero}) {
    const auto renderer = PerturbationRenderer::time_frequency(x, window, 8, fill);
    RbpBaseline fill_base = rbp;
    if (fill == DeletionFill::kZero) {
      for (auto& c : fill_base.spectrogram.cells()) c = 0.0;
    }
    const auto masks = sample_masks(renderer.space(), 10, 50, 3);
    std::vector<double> out(96);
    for (const auto& m : masks) {
      renderer.render_replaced(m.selected, out);
      const auto del = istft(apply_tf_perturbation(s, fill_base, m, PerturbationMode::kDeletion));
      for (std::size_t i = 0; i < 96; ++i) ASSERT_NEAR(out[i], del[i], 1e-12);
      renderer.render_kept(m.selected, out);
      const auto ins = istft(apply_tf_perturbation(s, fill_base, m, PerturbationMode::kInsertion));
      for (std::size_t i = 0; i < 96; ++i) ASSERT_NEAR(out[i], ins[i], 1e-12);
    }
    const auto orig = istft(s);
    for (std::size_t i = 0; i < 96; ++i) EXPECT_NEAR(renderer.original()[i], orig[i], 1e-12);
  }
}

TEST(Renderer, FlagsAgreeWithLists) {
  const auto x = oracle::random_signal(96, 8);
  const auto renderer = PerturbationRenderer::time_frequency(x, make_window(WindowKind::kHann, 16), 8);
  std::vector<std::uint8_t> flags(renderer.space().feature_count(), 0);
  std::vector<std::size_t> listed;
  for (std::size_t f = 0; f < flags.size(); f += 3) {
    flags[f] = 1;
    listed.push_back(f);
  }
  std::vector<double> a(96), b(96);
  renderer.render_flags(flags, a);
  renderer.render_replaced(listed, b);
  for (std::size_t i = 0; i < 96; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Renderer, TimeSegmentsZeroOut) {
  TimeSeries x{oracle::random_signal(40, 9), std::nullopt, std::nullopt};
  const auto renderer = PerturbationRenderer::time_segments(x.values, 16);
  EXPECT_EQ(renderer.space().feature_count(), 3u);
  const std::vector<std::size_t> segs = {0, 2};
  std::vector<double> out(40);
  renderer.render_replaced(segs, out);
  EXPECT_EQ(out, apply_time_perturbation(x, segs).values);
  renderer.render_kept(segs, out);
  const std::vector<std::size_t> middle = {1};
  EXPECT_EQ(out, apply_time_perturbation(x, middle).values);
}
