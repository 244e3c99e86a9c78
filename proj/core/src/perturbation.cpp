#include "spectralx/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spectralx/error.hpp"

namespace spectralx {
namespace {

constexpr double kRbpEps = 1e-12;

void check_indices(std::span<const std::size_t> indices, std::size_t count, const char* what) {
  for (std::size_t f : indices) {
    require(f < count, ErrorKind::kInvalidArgument,
            std::string(what) + " index " + std::to_string(f) + " out of range (" + std::to_string(count) +
                " features)");
  }
}

}  // namespace

std::string_view domain_name(FeatureDomain domain) {
  return domain == FeatureDomain::kTimeFrequency ? "tf" : "time";
}

FeatureSpace FeatureSpace::time_frequency(std::size_t frames, std::size_t bins) {
  require(frames > 0 && bins > 0, ErrorKind::kInvalidArgument, "time-frequency space needs frames and bins");
  FeatureSpace s;
  s.domain_ = FeatureDomain::kTimeFrequency;
  s.frames_ = frames;
  s.bins_ = bins;
  s.count_ = frames * bins;
  return s;
}

FeatureSpace FeatureSpace::time_segments(std::size_t signal_length, std::size_t segment_length) {
  require(segment_length > 0 && signal_length > 0, ErrorKind::kInvalidArgument,
          "time-segment space needs a positive signal and segment length");
  FeatureSpace s;
  s.domain_ = FeatureDomain::kTime;
  s.signal_length_ = signal_length;
  s.segment_length_ = segment_length;
  s.count_ = (signal_length + segment_length - 1) / segment_length;
  return s;
}

std::pair<std::size_t, std::size_t> FeatureSpace::segment_span(std::size_t segment) const {
  require(domain_ == FeatureDomain::kTime && segment < count_, ErrorKind::kInvalidArgument,
          "super-segment index " + std::to_string(segment) + " out of range");
  const std::size_t begin = segment * segment_length_;
  return {begin, std::min(signal_length_, begin + segment_length_)};
}

RbpBaseline compute_rbp(const Spectrogram& s) {
  require(s.frames() >= 2, ErrorKind::kInvalidArgument, "RBP needs at least two frames");
  const double frames = static_cast<double>(s.frames());
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < s.bins(); ++k) {
    double mean = 0.0;
    for (std::size_t m = 0; m < s.frames(); ++m) mean += std::abs(s(m, k));
    mean /= frames;
    double var = 0.0;
    for (std::size_t m = 0; m < s.frames(); ++m) {
      const double d = std::abs(s(m, k)) - mean;
      var += d * d;
    }
    var /= frames;
    const double score = mean / (var + kRbpEps);
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  RbpBaseline rbp{Spectrogram(s.layout(), s.window()), best};
  for (std::size_t m = 0; m < s.frames(); ++m) rbp.spectrogram(m, best) = s(m, best);
  return rbp;
}

std::vector<PerturbationMask> sample_masks(const FeatureSpace& space, std::size_t mask_size, std::size_t count,
                                           std::uint64_t seed, std::span<const std::size_t> excluded) {
  const std::size_t total = space.feature_count();
  check_indices(excluded, total, "excluded feature");
  std::vector<std::uint8_t> skip(total, 0);
  for (std::size_t f : excluded) skip[f] = 1;
  std::vector<std::size_t> available;
  for (std::size_t f = 0; f < total; ++f) {
    if (!skip[f]) available.push_back(f);
  }
  require(mask_size >= 1 && mask_size <= available.size(), ErrorKind::kInvalidArgument,
          "mask size " + std::to_string(mask_size) + " must lie in [1, " + std::to_string(available.size()) +
              "] (features not excluded)");

  std::mt19937_64 rng(seed);
  std::vector<PerturbationMask> masks(count);
  std::vector<std::size_t> pool = available;
  for (auto& mask : masks) {
    // Partial Fisher-Yates over the pool; the pool stays a permutation of `available`.
    for (std::size_t i = 0; i < mask_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    mask.selected.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mask_size));
    std::sort(mask.selected.begin(), mask.selected.end());
  }
  return masks;
}

Spectrogram apply_tf_perturbation(const Spectrogram& s, const RbpBaseline& rbp, const PerturbationMask& mask,
                                  PerturbationMode mode, std::span<const std::size_t> fixed) {
  require(s.same_geometry(rbp.spectrogram), ErrorKind::kGeometryMismatch,
          "spectrogram and RBP baseline have different geometry");
  const std::size_t total = s.cell_count();
  check_indices(mask.selected, total, "mask");
  check_indices(fixed, total, "fixed feature");
  std::vector<std::uint8_t> chosen(total, 0);
  for (std::size_t f : mask.selected) chosen[f] = 1;
  for (std::size_t f : fixed) {
    require(!chosen[f], ErrorKind::kInvalidArgument, "mask and fixed set overlap at feature " + std::to_string(f));
    chosen[f] = 1;
  }
  Spectrogram out = s;
  const auto src = s.cells();
  const auto base = rbp.spectrogram.cells();
  auto dst = out.cells();
  for (std::size_t f = 0; f < total; ++f) {
    const bool keep_source = mode == PerturbationMode::kInsertion ? chosen[f] != 0 : chosen[f] == 0;
    dst[f] = keep_source ? src[f] : base[f];
  }
  return out;
}

TimeSeries apply_time_perturbation(const TimeSeries& x, std::span<const std::size_t> segments,
                                   std::size_t segment_length) {
  const FeatureSpace space = FeatureSpace::time_segments(x.length(), segment_length);
  TimeSeries out = x;
  for (std::size_t seg : segments) {
    const auto [begin, end] = space.segment_span(seg);
    std::fill(out.values.begin() + static_cast<std::ptrdiff_t>(begin),
              out.values.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
  }
  return out;
}

PerturbationRenderer PerturbationRenderer::time_frequency(std::span<const double> signal, const WindowSpec& window,
                                                          std::size_t hop, DeletionFill fill) {
  const Spectrogram s = stft(signal, window, hop);
  Spectrogram replacement(s.layout(), s.window());
  if (fill == DeletionFill::kRbp) replacement = compute_rbp(s).spectrogram;

  PerturbationRenderer r;
  r.space_ = FeatureSpace::of(s);
  r.original_ = istft(s);
  r.baseline_ = istft(replacement);
  Spectrogram delta(s.layout(), s.window());
  for (std::size_t f = 0; f < s.cell_count(); ++f) delta.cells()[f] = replacement.cells()[f] - s.cells()[f];
  for (CellFootprint& fp : cell_footprints(delta)) r.deltas_.push_back({fp.offset, std::move(fp.values)});
  return r;
}

PerturbationRenderer PerturbationRenderer::time_segments(std::span<const double> signal, std::size_t segment_length) {
  PerturbationRenderer r;
  r.space_ = FeatureSpace::time_segments(signal.size(), segment_length);
  r.original_.assign(signal.begin(), signal.end());
  r.baseline_.assign(signal.size(), 0.0);
  for (std::size_t seg = 0; seg < r.space_.feature_count(); ++seg) {
    const auto [begin, end] = r.space_.segment_span(seg);
    Footprint fp{begin, {}};
    for (std::size_t i = begin; i < end; ++i) fp.values.push_back(-signal[i]);
    r.deltas_.push_back(std::move(fp));
  }
  return r;
}

void PerturbationRenderer::render_replaced(std::span<const std::size_t> replaced, std::span<double> out) const {
  require(out.size() == original_.size(), ErrorKind::kInvalidArgument, "render buffer has the wrong length");
  std::copy(original_.begin(), original_.end(), out.begin());
  for (std::size_t f : replaced) {
    const Footprint& d = deltas_[f];
    for (std::size_t i = 0; i < d.values.size(); ++i) out[d.offset + i] += d.values[i];
  }
}

void PerturbationRenderer::render_kept(std::span<const std::size_t> kept, std::span<double> out) const {
  require(out.size() == original_.size(), ErrorKind::kInvalidArgument, "render buffer has the wrong length");
  std::copy(baseline_.begin(), baseline_.end(), out.begin());
  for (std::size_t f : kept) {
    const Footprint& d = deltas_[f];
    for (std::size_t i = 0; i < d.values.size(); ++i) out[d.offset + i] -= d.values[i];
  }
}

void PerturbationRenderer::render_flags(std::span<const std::uint8_t> replaced, std::span<double> out) const {
  require(replaced.size() == deltas_.size(), ErrorKind::kInvalidArgument, "flag vector has the wrong length");
  const auto n_replaced = static_cast<std::size_t>(std::count(replaced.begin(), replaced.end(), std::uint8_t{1}));
  std::vector<std::size_t> list;
  const bool from_original = 2 * n_replaced <= replaced.size();
  for (std::size_t f = 0; f < replaced.size(); ++f) {
    if ((replaced[f] != 0) == from_original) list.push_back(f);
  }
  if (from_original) {
    render_replaced(list, out);
  } else {
    render_kept(list, out);
  }
}

}  // namespace spectralx
