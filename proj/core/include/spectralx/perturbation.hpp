#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spectralx/signal.hpp"

namespace spectralx {

enum class FeatureDomain { kTimeFrequency, kTime };

std::string_view domain_name(FeatureDomain domain);  // "tf" / "time"

// The set of atomic features an explainer ranks: spectrogram cells
// (feature = m * K + k) or fixed-length time super-segments. A trailing
// partial super-segment counts as a full feature.
class FeatureSpace {
 public:
  FeatureSpace() = default;

  static FeatureSpace time_frequency(std::size_t frames, std::size_t bins);
  static FeatureSpace time_segments(std::size_t signal_length, std::size_t segment_length = 16);
  static FeatureSpace of(const Spectrogram& s) { return time_frequency(s.frames(), s.bins()); }

  FeatureDomain domain() const noexcept { return domain_; }
  std::size_t feature_count() const noexcept { return count_; }

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  TfCell cell(std::size_t feature) const noexcept { return {feature / bins_, feature % bins_}; }
  std::size_t feature(TfCell c) const noexcept { return c.frame * bins_ + c.bin; }

  std::size_t signal_length() const noexcept { return signal_length_; }
  std::size_t segment_length() const noexcept { return segment_length_; }
  // Sample range [first, second) covered by a super-segment.
  std::pair<std::size_t, std::size_t> segment_span(std::size_t segment) const;

  bool operator==(const FeatureSpace&) const = default;

 private:
  FeatureDomain domain_ = FeatureDomain::kTimeFrequency;
  std::size_t count_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t signal_length_ = 0;
  std::size_t segment_length_ = 0;
};

struct PerturbationMask {
  std::vector<std::size_t> selected;  // ascending, distinct
  bool operator==(const PerturbationMask&) const = default;
};

// Realistic background: the source spectrogram restricted to its single most
// "background-like" bin, k* = argmax_k mean_m|S| / (var_m|S| + 1e-12), lowest
// index on ties. All other bins are zero.
struct RbpBaseline {
  Spectrogram spectrogram;
  std::size_t chosen_bin = 0;
};

RbpBaseline compute_rbp(const Spectrogram& s);

// P masks, each with R distinct features drawn uniformly from F \ excluded.
// The same list is shared by every sample of a batch.
std::vector<PerturbationMask> sample_masks(const FeatureSpace& space, std::size_t mask_size, std::size_t count,
                                           std::uint64_t seed, std::span<const std::size_t> excluded = {});

enum class PerturbationMode { kInsertion, kDeletion };

// Insertion: cells in mask u fixed keep S, the rest take the baseline.
// Deletion:  cells in mask u fixed take the baseline, the rest keep S.
Spectrogram apply_tf_perturbation(const Spectrogram& s, const RbpBaseline& rbp, const PerturbationMask& mask,
                                  PerturbationMode mode, std::span<const std::size_t> fixed = {});

// Zeroes the listed super-segments.
TimeSeries apply_time_perturbation(const TimeSeries& x, std::span<const std::size_t> segments,
                                   std::size_t segment_length = 16);

// What a removed TF feature is replaced with.
enum class DeletionFill { kRbp, kZero };

// Renders perturbed time-domain signals for one sample without a full ISTFT
// per perturbation. Each feature's effect on the output is precomputed as a
// short footprint, so a signal with features D replaced costs O(|D| N).
// Output equals istft(apply_tf_perturbation(...)) up to rounding.
class PerturbationRenderer {
 public:
  // Time-frequency features of `signal`; replaced cells take the RBP value or zero.
  static PerturbationRenderer time_frequency(std::span<const double> signal, const WindowSpec& window,
                                             std::size_t hop, DeletionFill fill = DeletionFill::kRbp);
  // Super-segment features; replaced segments become zero.
  static PerturbationRenderer time_segments(std::span<const double> signal, std::size_t segment_length = 16);

  const FeatureSpace& space() const noexcept { return space_; }
  std::size_t length() const noexcept { return original_.size(); }
  // Nothing replaced (istft(S) in the TF domain).
  std::span<const double> original() const noexcept { return original_; }
  // Everything replaced.
  std::span<const double> baseline() const noexcept { return baseline_; }

  // Signal with exactly the listed features replaced.
  void render_replaced(std::span<const std::size_t> replaced, std::span<double> out) const;
  // Signal with every feature replaced except the listed ones.
  void render_kept(std::span<const std::size_t> kept, std::span<double> out) const;
  // Per-feature flags (1 = replaced); picks the cheaper direction.
  void render_flags(std::span<const std::uint8_t> replaced, std::span<double> out) const;

 private:
  struct Footprint {
    std::size_t offset;
    std::vector<double> values;  // baseline minus original, over [offset, offset + size)
  };

  FeatureSpace space_;
  std::vector<double> original_;
  std::vector<double> baseline_;
  std::vector<Footprint> deltas_;
};

}  // namespace spectralx
