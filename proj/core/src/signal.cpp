#include "spectralx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spectralx/error.hpp"

namespace spectralx {
namespace {

constexpr double kEnvelopeGuard = 1e-12;

// cos/sin of 2 pi j / N for j = 0..N-1; phase index (k * n) mod N.
struct Twiddles {
  std::vector<double> cos_table;
  std::vector<double> sin_table;

  explicit Twiddles(std::size_t n) : cos_table(n), sin_table(n) {
    for (std::size_t j = 0; j < n; ++j) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      cos_table[j] = std::cos(phase);
      sin_table[j] = std::sin(phase);
    }
  }
};

void check_window(const WindowSpec& window) {
  const std::size_t n = window.size();
  require(n >= 2 && n % 2 == 0, ErrorKind::kInvalidArgument,
          "window size must be even and at least 2, got " + std::to_string(n));
}

void check_reconstructible(const Spectrogram& s) {
  require(s.window_size() >= 2 && s.window().size() == s.window_size() && s.hop() * 2 == s.window_size() &&
              s.original_length() > 0,
          ErrorKind::kReconstructionContract, "spectrogram is missing window/hop/length metadata");
}

// Weight of bin k when folding the one-sided spectrum back to N bins.
double fold_weight(std::size_t k, std::size_t n) { return (k == 0 || 2 * k == n) ? 1.0 : 2.0; }

}  // namespace

WindowSpec make_window(WindowKind kind, std::size_t size) {
  require(size >= 2 && size % 2 == 0, ErrorKind::kInvalidArgument,
          "window size must be even and at least 2, got " + std::to_string(size));
  WindowSpec spec{kind, std::vector<double>(size)};
  switch (kind) {
    case WindowKind::kHann:
      for (std::size_t n = 0; n < size; ++n) {
        spec.coefficients[n] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(size)));
      }
      break;
  }
  return spec;
}

FrameLayout make_frame_layout(std::size_t length, std::size_t window_size, std::size_t hop) {
  require(window_size >= 2 && window_size % 2 == 0, ErrorKind::kInvalidArgument,
          "window size must be even and at least 2");
  require(hop * 2 == window_size, ErrorKind::kUnsupportedConfiguration,
          "hop must be half the window size (50% overlap), got hop " + std::to_string(hop) + " for window " +
              std::to_string(window_size));
  require(length >= window_size, ErrorKind::kInvalidArgument,
          "signal length " + std::to_string(length) + " is shorter than the window " + std::to_string(window_size));
  FrameLayout layout;
  layout.window_size = window_size;
  layout.hop = hop;
  layout.original_length = length;
  layout.front_pad = window_size / 2;
  // Padded length is the smallest multiple of hop covering length + N/2 on both sides.
  const std::size_t needed = length + window_size;
  layout.padded_length = ((needed + hop - 1) / hop) * hop;
  layout.frame_count = (layout.padded_length - window_size) / hop + 1;
  return layout;
}

Spectrogram::Spectrogram(FrameLayout layout, WindowSpec window)
    : layout_(layout),
      window_(std::move(window)),
      bins_(layout.window_size / 2 + 1),
      cells_(layout.frame_count * bins_) {}

Spectrogram stft(std::span<const double> x, const WindowSpec& window, std::size_t hop) {
  check_window(window);
  const std::size_t n = window.size();
  const FrameLayout layout = make_frame_layout(x.size(), n, hop);
  for (double v : x) {
    require(std::isfinite(v), ErrorKind::kInvalidArgument, "signal contains non-finite samples");
  }

  Spectrogram s(layout, window);
  const Twiddles tw(n);
  std::vector<double> frame(n);
  for (std::size_t m = 0; m < layout.frame_count; ++m) {
    const std::ptrdiff_t start = layout.frame_start(m);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      const double sample = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) ? x[idx] : 0.0;
      frame[i] = sample * window.coefficients[i];
    }
    for (std::size_t k = 0; k < s.bins(); ++k) {
      double re = 0.0;
      double im = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (k * i) % n;
        re += frame[i] * tw.cos_table[j];
        im -= frame[i] * tw.sin_table[j];
      }
      s(m, k) = {re, im};
    }
  }
  return s;
}

std::vector<double> synthesis_envelope(const FrameLayout& layout, const WindowSpec& window) {
  std::vector<double> env(layout.original_length, 0.0);
  for (std::size_t m = 0; m < layout.frame_count; ++m) {
    const std::ptrdiff_t start = layout.frame_start(m);
    for (std::size_t i = 0; i < layout.window_size; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(env.size())) {
        env[idx] += window.coefficients[i] * window.coefficients[i];
      }
    }
  }
  return env;
}

std::vector<double> istft(const Spectrogram& s) {
  check_reconstructible(s);
  const FrameLayout& layout = s.layout();
  const std::size_t n = layout.window_size;
  const WindowSpec& window = s.window();
  const Twiddles tw(n);

  std::vector<double> out(layout.original_length, 0.0);
  std::vector<double> frame(n);
  for (std::size_t m = 0; m < layout.frame_count; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s.bins(); ++k) {
        const std::complex<double> c = s(m, k);
        const std::size_t j = (k * i) % n;
        acc += fold_weight(k, n) * (c.real() * tw.cos_table[j] - c.imag() * tw.sin_table[j]);
      }
      frame[i] = acc / static_cast<double>(n);
    }
    const std::ptrdiff_t start = layout.frame_start(m);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(out.size())) {
        out[idx] += window.coefficients[i] * frame[i];
      }
    }
  }
  const std::vector<double> env = synthesis_envelope(layout, window);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] /= std::max(env[i], kEnvelopeGuard);
  }
  return out;
}

std::vector<double> istft(const Spectrogram& s, const WindowSpec& expected) {
  require(s.window() == expected, ErrorKind::kReconstructionContract,
          "spectrogram window does not match the synthesis window");
  return istft(s);
}

namespace {

CellFootprint footprint_with_envelope(const Spectrogram& geometry, std::span<const double> env, std::size_t frame,
                                      std::size_t bin, std::complex<double> value) {
  const FrameLayout& layout = geometry.layout();
  const std::size_t n = layout.window_size;
  const WindowSpec& window = geometry.window();

  const std::ptrdiff_t start = layout.frame_start(frame);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
  const std::ptrdiff_t hi =
      std::min<std::ptrdiff_t>(start + static_cast<std::ptrdiff_t>(n), static_cast<std::ptrdiff_t>(env.size()));
  CellFootprint fp;
  fp.offset = static_cast<std::size_t>(lo);
  if (hi <= lo) return fp;
  fp.values.resize(static_cast<std::size_t>(hi - lo));
  const double scale = fold_weight(bin, n) / static_cast<double>(n);
  for (std::ptrdiff_t idx = lo; idx < hi; ++idx) {
    const auto i = static_cast<std::size_t>(idx - start);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>((bin * i) % n) / static_cast<double>(n);
    const double re = value.real() * std::cos(phase) - value.imag() * std::sin(phase);
    fp.values[static_cast<std::size_t>(idx - lo)] =
        window.coefficients[i] * scale * re / std::max(env[idx], kEnvelopeGuard);
  }
  return fp;
}

}  // namespace

CellFootprint cell_footprint(const Spectrogram& geometry, std::size_t frame, std::size_t bin,
                             std::complex<double> value) {
  check_reconstructible(geometry);
  require(frame < geometry.frames() && bin < geometry.bins(), ErrorKind::kInvalidArgument,
          "cell index out of range");
  const std::vector<double> env = synthesis_envelope(geometry.layout(), geometry.window());
  return footprint_with_envelope(geometry, env, frame, bin, value);
}

std::vector<CellFootprint> cell_footprints(const Spectrogram& values) {
  check_reconstructible(values);
  const std::vector<double> env = synthesis_envelope(values.layout(), values.window());
  std::vector<CellFootprint> out;
  out.reserve(values.cell_count());
  for (std::size_t m = 0; m < values.frames(); ++m) {
    for (std::size_t k = 0; k < values.bins(); ++k) {
      out.push_back(footprint_with_envelope(values, env, m, k, values(m, k)));
    }
  }
  return out;
}

}  // namespace spectralx
