#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spectralx {

// A univariate real-valued series, optionally labelled.
struct TimeSeries {
  std::vector<double> values;
  std::optional<int> label;
  std::optional<std::string> id;

  std::size_t length() const noexcept { return values.size(); }
};

// One (frame, bin) entry of a spectrogram.
struct TfCell {
  std::size_t frame = 0;
  std::size_t bin = 0;
  auto operator<=>(const TfCell&) const = default;
};

// Half-open rectangle of cells: frames [frame_begin, frame_end) x bins [bin_begin, bin_end).
struct BandRegion {
  std::size_t frame_begin = 0;
  std::size_t frame_end = 0;
  std::size_t bin_begin = 0;
  std::size_t bin_end = 0;

  bool contains(TfCell c) const noexcept {
    return c.frame >= frame_begin && c.frame < frame_end && c.bin >= bin_begin && c.bin < bin_end;
  }
  bool operator==(const BandRegion&) const = default;
};

enum class WindowKind { kHann };

struct WindowSpec {
  WindowKind kind = WindowKind::kHann;
  std::vector<double> coefficients;

  std::size_t size() const noexcept { return coefficients.size(); }
  bool operator==(const WindowSpec&) const = default;
};

// Periodic window of even length `size`. Hann: w[n] = 0.5 (1 - cos(2 pi n / N)).
// Throws kInvalidArgument for odd or sub-2 sizes.
WindowSpec make_window(WindowKind kind, std::size_t size);

// How a signal of `original_length` samples is tiled by frames of
// `window_size` samples advancing by `hop`. The signal is zero padded by
// window_size/2 at the front and by at least that much at the back so every
// original sample lies under a nonzero part of some window.
struct FrameLayout {
  std::size_t window_size = 0;
  std::size_t hop = 0;
  std::size_t original_length = 0;
  std::size_t front_pad = 0;
  std::size_t padded_length = 0;
  std::size_t frame_count = 0;

  // First sample of frame m in original coordinates (may be negative).
  std::ptrdiff_t frame_start(std::size_t m) const noexcept {
    return static_cast<std::ptrdiff_t>(m * hop) - static_cast<std::ptrdiff_t>(front_pad);
  }
  bool operator==(const FrameLayout&) const = default;
};

FrameLayout make_frame_layout(std::size_t length, std::size_t window_size, std::size_t hop);

// Complex M x K grid (K = N/2 + 1, one-sided) plus the metadata needed to
// invert it. Cells are stored frame-major: index = m * K + k.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(FrameLayout layout, WindowSpec window);

  std::size_t frames() const noexcept { return layout_.frame_count; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t cell_count() const noexcept { return cells_.size(); }
  std::size_t window_size() const noexcept { return layout_.window_size; }
  std::size_t hop() const noexcept { return layout_.hop; }
  std::size_t original_length() const noexcept { return layout_.original_length; }
  const FrameLayout& layout() const noexcept { return layout_; }
  const WindowSpec& window() const noexcept { return window_; }
  bool empty() const noexcept { return cells_.empty(); }

  std::complex<double>& operator()(std::size_t m, std::size_t k) { return cells_[m * bins_ + k]; }
  const std::complex<double>& operator()(std::size_t m, std::size_t k) const {
    return cells_[m * bins_ + k];
  }
  std::span<std::complex<double>> cells() noexcept { return cells_; }
  std::span<const std::complex<double>> cells() const noexcept { return cells_; }

  bool same_geometry(const Spectrogram& other) const noexcept {
    return layout_ == other.layout_ && window_ == other.window_;
  }

 private:
  FrameLayout layout_;
  WindowSpec window_;
  std::size_t bins_ = 0;
  std::vector<std::complex<double>> cells_;
};

// S[m,k] = sum_n x_pad[n + mH] w[n] exp(-j 2 pi k n / N), unnormalized.
// Requires hop == N/2 (kUnsupportedConfiguration) and x.size() >= N
// (kInvalidArgument); non-finite samples are rejected.
Spectrogram stft(std::span<const double> x, const WindowSpec& window, std::size_t hop);

// Weighted overlap-add inverse: each inverse frame (1/N, conjugate-symmetric
// extension of the stored half spectrum) is multiplied by the synthesis window,
// summed, divided by sum_m w^2[n - mH] and trimmed to the original length.
std::vector<double> istft(const Spectrogram& s);

// Same, but first checks the spectrogram was produced with `expected`.
std::vector<double> istft(const Spectrogram& s, const WindowSpec& expected);

// Contribution of a single cell value to istft's output. istft is linear in
// the cells, so istft(S) is the sum of all footprints. Offsets are in original
// sample coordinates and the values are already clipped to [0, L).
struct CellFootprint {
  std::size_t offset = 0;
  std::vector<double> values;
};

CellFootprint cell_footprint(const Spectrogram& geometry, std::size_t frame, std::size_t bin,
                             std::complex<double> value);

// Footprints of every cell of `values`, index m * K + k.
std::vector<CellFootprint> cell_footprints(const Spectrogram& values);

// Sum over frames of w^2[n - mH] in original sample coordinates.
std::vector<double> synthesis_envelope(const FrameLayout& layout, const WindowSpec& window);

}  // namespace spectralx
