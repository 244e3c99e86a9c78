#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectralx/signal.hpp"

namespace spectralx {

// Equal-length labelled series; labels are dense in [0, class_count).
struct LabeledDataset {
  std::string name;
  std::size_t class_count = 0;
  std::vector<TimeSeries> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t series_length() const noexcept { return samples.empty() ? 0 : samples.front().length(); }
  std::vector<TimeSeries> of_class(int label) const;

  // Throws kInvalidArgument when lengths differ or a label is missing/out of range.
  void validate() const;
};

// Three-class benchmark: class 0 = low tone in segment 0 + high tone in
// segment 2, class 1 = the mirror image, class 2 = mid tone in segment 1.
// Cycle counts are per segment.
struct SynthConfig {
  std::size_t segment_length = 32;
  std::size_t segments = 3;
  double cycles_low = 1.0;
  double cycles_mid = 6.0;
  double cycles_high = 12.0;
  double noise_sigma = 0.1;
  std::size_t samples_per_class = 1000;
  std::uint64_t seed = 0;

  std::size_t series_length() const noexcept { return segment_length * segments; }
  void validate() const;
};

inline constexpr std::size_t kSyntheticClassCount = 3;

LabeledDataset generate_synthetic(const SynthConfig& cfg);

// Noise-free signal of one synthetic class.
TimeSeries synthetic_template(const SynthConfig& cfg, int class_id);

// Per-class time-frequency regions where the synthetic tones live. kContained
// keeps frames whose window lies entirely inside the active segment (used by
// the band-energy rule); kOverlapping keeps every frame touching it (used for
// ground-truth localization checks). Bins are those within 1.5 bins of the
// tone's centre frequency.
enum class RegionExtent { kContained, kOverlapping };
std::vector<std::vector<BandRegion>> synthetic_band_regions(const SynthConfig& cfg, std::size_t window_size,
                                                            std::size_t hop, RegionExtent extent);

struct GroundTruthRanking {
  int class_id = 0;
  std::vector<TfCell> ranked_cells;
  std::vector<double> magnitudes;  // parallel to ranked_cells, non-increasing
  double magnitude_threshold = 0.0;
};

// Cells of the template's STFT ordered by descending magnitude (ties by
// frame, then bin), keeping only magnitudes strictly above the threshold.
// The default threshold is 1e-6 of the peak magnitude.
GroundTruthRanking ground_truth_ranking(const TimeSeries& class_template, std::size_t window_size, std::size_t hop,
                                        std::optional<double> threshold = std::nullopt, int class_id = 0);

// Delimiter-separated text, one series per line, label first. Tab, comma or
// whitespace separation is detected from the first data line. Labels are
// remapped to 0..C-1 in ascending numeric order.
LabeledDataset load_ucr(const std::filesystem::path& path);

// Writes `label<TAB>v0<TAB>v1...` lines with 0-based labels.
void write_ucr(const LabeledDataset& dataset, const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

// Seeded shuffle, then contiguous slicing.
DatasetSplit split_dataset(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed);

}  // namespace spectralx
