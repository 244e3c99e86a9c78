#include "spectralx/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "spectralx/error.hpp"
#include "spectralx/random.hpp"

namespace spectralx {
namespace {

struct Tone {
  std::size_t segment;
  double cycles;
};

std::vector<Tone> class_tones(const SynthConfig& cfg, int class_id) {
  switch (class_id) {
    case 0:
      return {{0, cfg.cycles_low}, {2, cfg.cycles_high}};
    case 1:
      return {{0, cfg.cycles_high}, {2, cfg.cycles_low}};
    case 2:
      return {{1, cfg.cycles_mid}};
    default:
      fail(ErrorKind::kInvalidArgument, "synthetic class id must be 0, 1 or 2, got " + std::to_string(class_id));
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(field);
    return fields;
  }
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = line.find(delimiter, begin);
    fields.push_back(trim(std::string_view(line).substr(begin, end == std::string::npos ? end : end - begin)));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return fields;
}

double parse_field(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty() || !std::isfinite(value)) {
    fail(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": cannot parse field '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<TimeSeries> LabeledDataset::of_class(int label) const {
  std::vector<TimeSeries> out;
  for (const auto& s : samples) {
    if (s.label && *s.label == label) out.push_back(s);
  }
  return out;
}

void LabeledDataset::validate() const {
  require(class_count > 0, ErrorKind::kInvalidArgument, "dataset '" + name + "' has no classes");
  const std::size_t len = series_length();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(s.length() == len, ErrorKind::kInvalidArgument,
            "dataset '" + name + "': sample " + std::to_string(i) + " has length " + std::to_string(s.length()) +
                ", expected " + std::to_string(len));
    require(s.label.has_value() && *s.label >= 0 && static_cast<std::size_t>(*s.label) < class_count,
            ErrorKind::kInvalidArgument, "dataset '" + name + "': sample " + std::to_string(i) + " has no valid label");
  }
}

void SynthConfig::validate() const {
  require(segments == 3, ErrorKind::kInvalidArgument, "synthetic data uses exactly 3 segments");
  require(segment_length >= 2, ErrorKind::kInvalidArgument, "segment_length must be at least 2");
  require(cycles_low > 0.0 && cycles_low < 2.0, ErrorKind::kInvalidArgument, "cycles_low must lie in (0, 2)");
  require(cycles_mid > 4.0 && cycles_mid < 10.0, ErrorKind::kInvalidArgument, "cycles_mid must lie in (4, 10)");
  require(cycles_high > 10.0, ErrorKind::kInvalidArgument, "cycles_high must exceed 10");
  require(cycles_high / static_cast<double>(segment_length) < 0.5, ErrorKind::kInvalidArgument,
          "cycles_high / segment_length must stay below the Nyquist limit 0.5");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorKind::kInvalidArgument,
          "noise_sigma must be finite and non-negative");
  require(samples_per_class > 0, ErrorKind::kInvalidArgument, "samples_per_class must be positive");
}

TimeSeries synthetic_template(const SynthConfig& cfg, int class_id) {
  cfg.validate();
  TimeSeries t;
  t.values.assign(cfg.series_length(), 0.0);
  t.label = class_id;
  t.id = "template-" + std::to_string(class_id);
  const double seg = static_cast<double>(cfg.segment_length);
  for (const Tone& tone : class_tones(cfg, class_id)) {
    const std::size_t base = tone.segment * cfg.segment_length;
    for (std::size_t n = 0; n < cfg.segment_length; ++n) {
      t.values[base + n] = std::sin(2.0 * std::numbers::pi * tone.cycles * static_cast<double>(n) / seg);
    }
  }
  return t;
}

LabeledDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  LabeledDataset d;
  d.name = "synthetic";
  d.class_count = kSyntheticClassCount;
  d.samples.reserve(kSyntheticClassCount * cfg.samples_per_class);
  for (int c = 0; c < static_cast<int>(kSyntheticClassCount); ++c) {
    const TimeSeries base = synthetic_template(cfg, c);
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
      const std::size_t index = static_cast<std::size_t>(c) * cfg.samples_per_class + i;
      TimeSeries s = base;
      s.id = "synthetic-" + std::to_string(index);
      if (cfg.noise_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, index));
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (double& v : s.values) v += noise(rng);
      }
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

std::vector<std::vector<BandRegion>> synthetic_band_regions(const SynthConfig& cfg, std::size_t window_size,
                                                            std::size_t hop, RegionExtent extent) {
  cfg.validate();
  const FrameLayout layout = make_frame_layout(cfg.series_length(), window_size, hop);
  const std::size_t bins = window_size / 2 + 1;
  const auto seg_len = static_cast<std::ptrdiff_t>(cfg.segment_length);
  const auto n = static_cast<std::ptrdiff_t>(window_size);

  std::vector<std::vector<BandRegion>> regions(kSyntheticClassCount);
  for (int c = 0; c < static_cast<int>(kSyntheticClassCount); ++c) {
    for (const Tone& tone : class_tones(cfg, c)) {
      const std::ptrdiff_t a = static_cast<std::ptrdiff_t>(tone.segment) * seg_len;
      const std::ptrdiff_t b = a + seg_len;
      std::size_t m_lo = layout.frame_count;
      std::size_t m_hi = 0;
      for (std::size_t m = 0; m < layout.frame_count; ++m) {
        const std::ptrdiff_t start = layout.frame_start(m);
        const bool keep = extent == RegionExtent::kContained ? (start >= a && start + n <= b)
                                                             : (start < b && start + n > a);
        if (keep) {
          m_lo = std::min(m_lo, m);
          m_hi = std::max(m_hi, m + 1);
        }
      }
      const double centre = tone.cycles * static_cast<double>(window_size) / static_cast<double>(cfg.segment_length);
      std::size_t k_lo = bins;
      std::size_t k_hi = 0;
      for (std::size_t k = 0; k < bins; ++k) {
        if (std::abs(static_cast<double>(k) - centre) <= 1.5) {
          k_lo = std::min(k_lo, k);
          k_hi = std::max(k_hi, k + 1);
        }
      }
      require(m_lo < m_hi && k_lo < k_hi, ErrorKind::kInvalidArgument,
              "STFT geometry too coarse to resolve the synthetic segments");
      regions[c].push_back({m_lo, m_hi, k_lo, k_hi});
    }
  }
  return regions;
}

GroundTruthRanking ground_truth_ranking(const TimeSeries& class_template, std::size_t window_size, std::size_t hop,
                                        std::optional<double> threshold, int class_id) {
  const Spectrogram s = stft(class_template.values, make_window(WindowKind::kHann, window_size), hop);
  std::vector<double> mag(s.cell_count());
  double peak = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::abs(s.cells()[i]);
    peak = std::max(peak, mag[i]);
  }
  GroundTruthRanking gt;
  gt.class_id = class_id;
  gt.magnitude_threshold = threshold.value_or(1e-6 * peak);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] > gt.magnitude_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
  for (std::size_t i : order) {
    gt.ranked_cells.push_back({i / s.bins(), i % s.bins()});
    gt.magnitudes.push_back(mag[i]);
  }
  return gt;
}

LabeledDataset load_ucr(const std::filesystem::path& path) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorKind::kDatasetNotFound,
          "dataset file not found: " + path.string());
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kDatasetNotFound, "cannot open dataset file: " + path.string());

  std::vector<std::pair<double, std::vector<double>>> rows;
  std::optional<char> delimiter;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (!delimiter) {
      delimiter = line.find('\t') != std::string::npos ? '\t' : line.find(',') != std::string::npos ? ',' : ' ';
    }
    const std::vector<std::string> fields = split_fields(line, *delimiter);
    require(fields.size() >= 2, ErrorKind::kFormat,
            "line " + std::to_string(line_no) + ": expected a label and at least one sample");
    if (rows.empty()) {
      width = fields.size();
    } else {
      require(fields.size() == width, ErrorKind::kFormat,
              "line " + std::to_string(line_no) + ": ragged row with " + std::to_string(fields.size() - 1) +
                  " samples, expected " + std::to_string(width - 1));
    }
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    const double label = parse_field(fields[0], line_no);
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(parse_field(fields[i], line_no));
    rows.emplace_back(label, std::move(values));
  }
  require(!rows.empty(), ErrorKind::kFormat, "dataset file is empty: " + path.string());

  std::map<double, int> remap;
  for (const auto& row : rows) remap.emplace(row.first, 0);
  int next = 0;
  for (auto& [label, index] : remap) index = next++;

  LabeledDataset d;
  d.name = path.stem().string();
  d.class_count = remap.size();
  d.samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TimeSeries s;
    s.values = std::move(rows[i].second);
    s.label = remap.at(rows[i].first);
    s.id = d.name + "-" + std::to_string(i);
    d.samples.push_back(std::move(s));
  }
  return d;
}

void write_ucr(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out.precision(17);
  for (const auto& s : dataset.samples) {
    out << s.label.value_or(0);
    for (double v : s.values) out << '\t' << v;
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed: " + path.string());
}

DatasetSplit split_dataset(const LabeledDataset& dataset, SplitRatios ratios, std::uint64_t seed) {
  require(ratios.train >= 0.0 && ratios.validation >= 0.0 && ratios.test >= 0.0, ErrorKind::kInvalidArgument,
          "split ratios must be non-negative");
  require(std::abs(ratios.train + ratios.validation + ratios.test - 1.0) <= 1e-9, ErrorKind::kInvalidArgument,
          "split ratios must sum to 1");
  const std::size_t n = dataset.size();
  const auto slice = [n](double r) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9)); };
  const std::size_t n_train = slice(ratios.train);
  const std::size_t n_val = std::min(slice(ratios.validation), n - n_train);
  const std::size_t n_test = n - n_train - n_val;
  require(n_train > 0 && n_val > 0 && n_test > 0, ErrorKind::kInvalidArgument,
          "split would leave a partition empty (" + std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
              std::to_string(n_test) + ")");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x5b117));
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  LabeledDataset* parts[] = {&split.train, &split.validation, &split.test};
  const char* suffix[] = {"/train", "/validation", "/test"};
  const std::size_t bounds[] = {0, n_train, n_train + n_val, n};
  for (int p = 0; p < 3; ++p) {
    parts[p]->name = dataset.name + suffix[p];
    parts[p]->class_count = dataset.class_count;
    for (std::size_t i = bounds[p]; i < bounds[p + 1]; ++i) parts[p]->samples.push_back(dataset.samples[order[i]]);
  }
  return split;
}

}  // namespace spectralx
