#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "spectralx/error.hpp"
#include "spectralx/signal.hpp"

using namespace spectralx;

namespace {

WindowSpec hann16() { return make_window(WindowKind::kHann, 16); }

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no spectralx::Error thrown";
  return ErrorKind::kIo;
}

}  // namespace

TEST(Window, HannFourAndTwo) {
  const auto w4 = make_window(WindowKind::kHann, 4).coefficients;
  ASSERT_EQ(w4.size(), 4u);
  EXPECT_NEAR(w4[0], 0.0, 1e-15);
  EXPECT_NEAR(w4[1], 0.5, 1e-15);
  EXPECT_NEAR(w4[2], 1.0, 1e-15);
  EXPECT_NEAR(w4[3], 0.5, 1e-15);
  const auto w2 = make_window(WindowKind::kHann, 2).coefficients;
  EXPECT_NEAR(w2[0], 0.0, 1e-15);
  EXPECT_NEAR(w2[1], 1.0, 1e-15);
}

TEST(Window, RejectsOddOrTiny) {
  EXPECT_EQ(kind_of([] { make_window(WindowKind::kHann, 3); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { make_window(WindowKind::kHann, 1); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { make_window(WindowKind::kHann, 0); }), ErrorKind::kInvalidArgument);
}

TEST(Window, ColaAtHalfOverlap) {
  for (std::size_t n : {4u, 16u, 64u}) {
    const auto w = make_window(WindowKind::kHann, n).coefficients;
    for (std::size_t i = 0; i < n / 2; ++i) EXPECT_NEAR(w[i] + w[i + n / 2], 1.0, 1e-12);
  }
}

TEST(FrameLayout, FrameCounts) {
  EXPECT_EQ(make_frame_layout(96, 16, 8).frame_count, 13u);
  EXPECT_EQ(make_frame_layout(384, 16, 8).frame_count, 49u);
  const auto layout = make_frame_layout(100, 16, 8);
  EXPECT_EQ(layout.front_pad, 8u);
  EXPECT_EQ(layout.padded_length % 8, 0u);
  EXPECT_GE(layout.padded_length, 116u);
  EXPECT_EQ(layout.frame_count, (layout.padded_length - 16) / 8 + 1);
  EXPECT_EQ(layout.frame_start(0), -8);
}

TEST(Stft, MatchesDirectSummation) {
  const auto x = oracle::random_signal(96, 7);
  const Spectrogram s = stft(x, hann16(), 8);
  ASSERT_EQ(s.bins(), 9u);
  const auto ref = oracle::direct_stft(x, 16, 8, s.frames());
  for (std::size_t m = 0; m < s.frames(); ++m) {
    for (std::size_t k = 0; k < s.bins(); ++k) EXPECT_LT(std::abs(s(m, k) - ref[m][k]), 1e-11);
  }
}

TEST(Stft, ZeroSignalGivesZeroGrid) {
  const Spectrogram s = stft(std::vector<double>(64, 0.0), hann16(), 8);
  for (auto c : s.cells()) EXPECT_EQ(c, std::complex<double>(0.0, 0.0));
  for (double v : istft(s)) EXPECT_EQ(v, 0.0);
}

TEST(Stft, CosineAtBinTwoDominates) {
  std::vector<double> x(96);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::cos(2.0 * std::numbers::pi * 2.0 * double(n) / 16.0);
  const Spectrogram s = stft(x, hann16(), 8);
  const auto ref = oracle::direct_stft(x, 16, 8, s.frames());
  // Interior frames see a full window of the tone.
  for (std::size_t m = 1; m + 1 < s.frames(); ++m) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.bins(); ++k) {
      if (std::abs(s(m, k)) > std::abs(s(m, best))) best = k;
    }
    EXPECT_EQ(best, 2u) << "frame " << m;
    EXPECT_LT(std::abs(s(m, 2) - ref[m][2]), 1e-11);
  }
}

TEST(Stft, ImpulseCarriesWindowValue) {
  std::vector<double> x(64, 0.0);
  x[0] = 1.0;
  const Spectrogram s = stft(x, hann16(), 8);
  const auto w = oracle::hann(16);
  // Sample 0 sits at window offset 8 of frame 0 and offset 0 of frame 1.
  for (std::size_t k = 0; k < s.bins(); ++k) {
    EXPECT_NEAR(std::abs(s(0, k)), w[8], 1e-12);
    EXPECT_NEAR(std::abs(s(1, k)), w[0], 1e-12);
  }
  for (std::size_t m = 2; m < s.frames(); ++m) EXPECT_NEAR(std::abs(s(m, 0)), 0.0, 1e-15);
}

TEST(Stft, Linearity) {
  const auto x = oracle::random_signal(96, 1);
  const auto y = oracle::random_signal(96, 2);
  std::vector<double> z(96);
  for (std::size_t i = 0; i < 96; ++i) z[i] = 2.5 * x[i] - 0.75 * y[i];
  const auto sx = stft(x, hann16(), 8);
  const auto sy = stft(y, hann16(), 8);
  const auto sz = stft(z, hann16(), 8);
  for (std::size_t i = 0; i < sz.cell_count(); ++i) {
    EXPECT_LT(std::abs(sz.cells()[i] - (2.5 * sx.cells()[i] - 0.75 * sy.cells()[i])), 1e-9);
  }
}

TEST(Stft, EnergyMatchesEnvelopeWeightedSignalEnergy) {
  const auto x = oracle::random_signal(128, 3);
  const auto s = stft(x, hann16(), 8);
  double spectral = 0.0;
  for (std::size_t m = 0; m < s.frames(); ++m) {
    for (std::size_t k = 0; k < s.bins(); ++k) {
      const double fold = (k == 0 || k == 8) ? 1.0 : 2.0;
      spectral += fold * std::norm(s(m, k)) / 16.0;
    }
  }
  const auto env = synthesis_envelope(s.layout(), s.window());
  double temporal = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) temporal += x[i] * x[i] * env[i];
  EXPECT_NEAR(spectral / temporal, 1.0, 1e-9);
}

TEST(Stft, Errors) {
  const std::vector<double> x(96, 1.0);
  EXPECT_EQ(kind_of([&] { stft(x, hann16(), 4); }), ErrorKind::kUnsupportedConfiguration);
  EXPECT_EQ(kind_of([&] { stft(std::vector<double>(10, 1.0), hann16(), 8); }), ErrorKind::kInvalidArgument);
  auto bad = x;
  bad[5] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { stft(bad, hann16(), 8); }), ErrorKind::kInvalidArgument);
}

TEST(Istft, RoundTripIncludingEdges) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = oracle::random_signal(384, seed);
    const auto y = istft(stft(x, hann16(), 8));
    ASSERT_EQ(y.size(), x.size());
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - y[i]));
    EXPECT_LE(err, 1e-6 * oracle::max_abs(x));
  }
}

TEST(Istft, OddLengthRoundTrip) {
  const auto x = oracle::random_signal(101, 9);
  const auto y = istft(stft(x, hann16(), 8));
  ASSERT_EQ(y.size(), 101u);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
}

TEST(Istft, ZeroedCellOnlyChangesItsFrameSpan) {
  const auto x = oracle::random_signal(96, 4);
  auto s = stft(x, hann16(), 8);
  const std::size_t m = 5;
  s(m, 3) = 0.0;
  const auto y = istft(s);
  const std::ptrdiff_t begin = s.layout().frame_start(m);
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.size()); ++i) {
    if (i < begin || i >= begin + 16) EXPECT_NEAR(x[i], y[i], 1e-12) << i;
  }
  double changed = 0.0;
  for (std::ptrdiff_t i = begin; i < begin + 16; ++i) changed = std::max(changed, std::abs(x[i] - y[i]));
  EXPECT_GT(changed, 1e-6);
}

TEST(Istft, MetadataContract) {
  EXPECT_EQ(kind_of([] { istft(Spectrogram{}); }), ErrorKind::kReconstructionContract);
  const auto s = stft(oracle::random_signal(96, 5), hann16(), 8);
  EXPECT_EQ(kind_of([&] { istft(s, make_window(WindowKind::kHann, 32)); }), ErrorKind::kReconstructionContract);
  EXPECT_NO_THROW(istft(s, hann16()));
}

TEST(CellFootprints, SumToInverse) {
  const auto x = oracle::random_signal(96, 6);
  const auto s = stft(x, hann16(), 8);
  const auto prints = cell_footprints(s);
  ASSERT_EQ(prints.size(), s.cell_count());
  std::vector<double> sum(96, 0.0);
  for (const auto& p : prints) {
    for (std::size_t i = 0; i < p.values.size(); ++i) sum[p.offset + i] += p.values[i];
  }
  const auto y = istft(s);
  for (std::size_t i = 0; i < 96; ++i) EXPECT_NEAR(sum[i], y[i], 1e-12);

  const auto single = cell_footprint(s, 4, 2, s(4, 2));
  EXPECT_EQ(single.values, prints[4 * s.bins() + 2].values);
}
