#pragma once

// Independent reference computations used to check the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "spectralx/signal.hpp"

namespace oracle {

inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
  return w;
}

// S[m][k] = sum_n xpad[n + mH] w[n] exp(-j 2 pi k n / N) with N/2 leading
// zeros and enough trailing zeros for `frames` frames.
inline std::vector<std::vector<std::complex<double>>> direct_stft(const std::vector<double>& x, std::size_t n_win,
                                                                  std::size_t hop, std::size_t frames) {
  const auto w = hann(n_win);
  std::vector<double> pad(n_win / 2 + x.size() + n_win * 2, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) pad[n_win / 2 + i] = x[i];
  std::vector<std::vector<std::complex<double>>> s(frames, std::vector<std::complex<double>>(n_win / 2 + 1));
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k <= n_win / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t n = 0; n < n_win; ++n) {
        acc += pad[n + m * hop] * w[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / double(n_win));
      }
      s[m][k] = acc;
    }
  }
  return s;
}

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

inline double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t r) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (cur.size() == r) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace oracle
