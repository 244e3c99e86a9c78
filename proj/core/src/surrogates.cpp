#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "batching.hpp"
#include "spectralx/error.hpp"
#include "spectralx/explainers.hpp"
#include "spectralx/random.hpp"

namespace spectralx {
namespace {

constexpr std::size_t kChunkRows = 4096;

Explanation ranked_by_score(ExplainerMethod method, int target, const FeatureSpace& space,
                            std::span<const double> scores, std::uint64_t seed) {
  Explanation e;
  e.method = method;
  e.target_class = target;
  e.space = space;
  e.seed = seed;
  for (std::size_t f = 0; f < scores.size(); ++f) e.ranked.push_back({f, scores[f]});
  std::stable_sort(e.ranked.begin(), e.ranked.end(),
                   [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
  return e;
}

// Target probability of one sample for each binary design row (1 = feature
// present, 0 = replaced).
std::vector<double> evaluate_design(const Classifier& model, int target, const PerturbationRenderer& renderer,
                                    const std::vector<std::vector<std::uint8_t>>& presence) {
  std::vector<std::uint8_t> replaced(renderer.space().feature_count());
  return detail::target_probabilities(model, target, presence.size(), renderer.length(), kChunkRows,
                                      [&](std::size_t row, std::span<double> out) {
                                        for (std::size_t f = 0; f < replaced.size(); ++f) {
                                          replaced[f] = presence[row][f] ? 0 : 1;
                                        }
                                        renderer.render_flags(replaced, out);
                                      });
}

void check_design(const std::vector<std::vector<std::uint8_t>>& design, std::size_t features) {
  for (const auto& row : design) {
    require(row.size() == features, ErrorKind::kInvalidArgument,
            "design row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(features));
  }
}

double binomial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

}  // namespace

Eigen::VectorXd weighted_ridge(const Matrix& design, const Eigen::VectorXd& target, const Eigen::VectorXd& weights,
                               double ridge) {
  const Eigen::Index rows = design.rows();
  const Eigen::Index cols = design.cols() + 1;
  require(rows >= cols, ErrorKind::kInvalidArgument,
          "regression needs at least F + 1 = " + std::to_string(cols) + " perturbations, got " +
              std::to_string(rows) + "; increase the number of perturbations");
  Eigen::MatrixXd a(rows, cols);
  a.col(0).setOnes();
  a.rightCols(cols - 1) = design;
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd weighted = sw.asDiagonal() * a;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted);
  qr.setThreshold(1e-10);
  require(qr.rank() == cols, ErrorKind::kInvalidArgument,
          "singular regression: perturbation design has rank " + std::to_string(qr.rank()) + " < " +
              std::to_string(cols) + "; increase the number of perturbations");
  Eigen::MatrixXd normal = weighted.transpose() * weighted;
  for (Eigen::Index j = 1; j < cols; ++j) normal(j, j) += ridge;
  const Eigen::VectorXd rhs = weighted.transpose() * sw.cwiseProduct(target);
  return normal.ldlt().solve(rhs);
}

double shapley_kernel_weight(std::size_t features, std::size_t coalition_size) {
  if (coalition_size == 0 || coalition_size >= features) return 0.0;
  return static_cast<double>(features - 1) /
         (binomial(features, coalition_size) * static_cast<double>(coalition_size) *
          static_cast<double>(features - coalition_size));
}

Explanation rise_explain(const Classifier& model, std::span<const TimeSeries> samples, int target_class,
                         const DomainConfig& domain, const RiseConfig& cfg) {
  require(!samples.empty(), ErrorKind::kInvalidArgument, "RISE needs at least one sample");
  std::vector<PerturbationRenderer> renderers;
  for (const TimeSeries& s : samples) renderers.push_back(make_renderer(s, domain));
  const FeatureSpace space = renderers.front().space();
  const std::size_t total = space.feature_count();

  std::vector<PerturbationMask> masks = cfg.masks;
  if (masks.empty()) {
    require(cfg.perturbations > 0, ErrorKind::kInvalidArgument, "RISE needs a positive number of perturbations");
    // As in FIA, never remove more than half the features so each one is kept somewhere.
    const std::size_t r = std::min(cfg.mask_size, std::max<std::size_t>(1, total / 2));
    masks = sample_masks(space, r, cfg.perturbations, derive_seed(cfg.seed, 0x5153));
  }
  const std::size_t n = renderers.size();
  const std::vector<double> rows = detail::target_probabilities(
      model, target_class, masks.size() * n, renderers.front().length(), kChunkRows,
      [&](std::size_t row, std::span<double> out) { renderers[row % n].render_replaced(masks[row / n].selected, out); });

  std::vector<double> weighted(total, 0.0);
  std::vector<double> kept(total, 0.0);
  std::vector<std::uint8_t> removed(total);
  for (std::size_t p = 0; p < masks.size(); ++p) {
    double prob = 0.0;
    for (std::size_t s = 0; s < n; ++s) prob += rows[p * n + s];
    prob /= static_cast<double>(n);
    std::fill(removed.begin(), removed.end(), 0);
    for (std::size_t f : masks[p].selected) removed[f] = 1;
    for (std::size_t f = 0; f < total; ++f) {
      if (!removed[f]) {
        weighted[f] += prob;
        kept[f] += 1.0;
      }
    }
  }
  std::vector<double> importance(total);
  for (std::size_t f = 0; f < total; ++f) {
    require(kept[f] > 0.0 || total == 1, ErrorKind::kCoverage,
            "feature " + std::to_string(f) + " was removed in every RISE mask; increase the number of perturbations");
    importance[f] = kept[f] > 0.0 ? weighted[f] / kept[f] : 0.0;
  }
  Explanation e = ranked_by_score(ExplainerMethod::kRise, target_class, space, importance, cfg.seed);
  e.config = {{"perturbations", static_cast<double>(masks.size())},
              {"mask_size", static_cast<double>(masks.empty() ? 0 : masks.front().selected.size())},
              {"samples", static_cast<double>(n)}};
  return e;
}

Explanation lime_explain(const Classifier& model, const TimeSeries& sample, int target_class,
                         const DomainConfig& domain, const LimeConfig& cfg) {
  require(cfg.kernel_width > 0.0, ErrorKind::kInvalidArgument, "kernel width must be positive");
  require(cfg.ridge >= 0.0, ErrorKind::kInvalidArgument, "ridge penalty must be non-negative");
  const PerturbationRenderer renderer = make_renderer(sample, domain);
  const FeatureSpace space = renderer.space();
  const std::size_t total = space.feature_count();

  std::vector<std::vector<std::uint8_t>> design = cfg.design;
  if (design.empty()) {
    require(cfg.perturbations >= total + 1, ErrorKind::kInvalidArgument,
            "LIME needs at least F + 1 = " + std::to_string(total + 1) + " perturbations");
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x11e));
    std::bernoulli_distribution coin(0.5);
    design.assign(cfg.perturbations, std::vector<std::uint8_t>(total));
    for (auto& row : design) {
      for (auto& z : row) z = coin(rng) ? 1 : 0;
    }
  }
  check_design(design, total);

  const std::vector<double> probs = evaluate_design(model, target_class, renderer, design);
  Matrix z(static_cast<Eigen::Index>(design.size()), static_cast<Eigen::Index>(total));
  Eigen::VectorXd y(z.rows());
  Eigen::VectorXd w(z.rows());
  for (std::size_t p = 0; p < design.size(); ++p) {
    std::size_t on = 0;
    for (std::size_t f = 0; f < total; ++f) {
      z(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(f)) = design[p][f];
      on += design[p][f] != 0;
    }
    const double distance = 1.0 - static_cast<double>(on) / static_cast<double>(total);
    w(static_cast<Eigen::Index>(p)) =
        std::isinf(cfg.kernel_width) ? 1.0 : std::exp(-distance * distance / (cfg.kernel_width * cfg.kernel_width));
    y(static_cast<Eigen::Index>(p)) = probs[p];
  }
  const Eigen::VectorXd beta = weighted_ridge(z, y, w, cfg.ridge);
  std::vector<double> coef(beta.data() + 1, beta.data() + beta.size());
  Explanation e = ranked_by_score(ExplainerMethod::kLime, target_class, space, coef, cfg.seed);
  e.config = {{"perturbations", static_cast<double>(design.size())},
              {"kernel_width", cfg.kernel_width},
              {"ridge", cfg.ridge},
              {"intercept", beta(0)}};
  return e;
}

Explanation kernelshap_explain(const Classifier& model, const TimeSeries& sample, int target_class,
                               const DomainConfig& domain, const KernelShapConfig& cfg) {
  const PerturbationRenderer renderer = make_renderer(sample, domain);
  const FeatureSpace space = renderer.space();
  const std::size_t total = space.feature_count();
  require(total >= 2, ErrorKind::kInvalidArgument, "KernelSHAP needs at least two features");

  std::vector<std::vector<std::uint8_t>> design;
  std::vector<double> weights;
  if (!cfg.design.empty() || cfg.exhaustive) {
    std::vector<std::vector<std::uint8_t>> rows = cfg.design;
    if (rows.empty()) {
      require(total <= 20, ErrorKind::kInvalidArgument, "exhaustive KernelSHAP is limited to 20 features");
      for (std::uint64_t bits = 1; bits + 1 < (std::uint64_t{1} << total); ++bits) {
        auto& row = rows.emplace_back(total);
        for (std::size_t f = 0; f < total; ++f) row[f] = (bits >> f) & 1U;
      }
    }
    check_design(rows, total);
    for (auto& row : rows) {
      const auto size = static_cast<std::size_t>(std::count(row.begin(), row.end(), std::uint8_t{1}));
      if (size == 0 || size == total) continue;  // enforced as constraints
      weights.push_back(shapley_kernel_weight(total, size));
      design.push_back(std::move(row));
    }
  } else {
    require(cfg.perturbations >= total + 1, ErrorKind::kInvalidArgument,
            "KernelSHAP needs at least F + 1 = " + std::to_string(total + 1) + " perturbations");
    // Coalition sizes drawn in proportion to the kernel mass of each size,
    // members uniformly; the sampled rows are then equally weighted.
    std::vector<double> size_mass(total - 1);
    for (std::size_t s = 1; s < total; ++s) {
      size_mass[s - 1] = static_cast<double>(total - 1) / (static_cast<double>(s) * static_cast<double>(total - s));
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x5ba9));
    std::discrete_distribution<std::size_t> size_dist(size_mass.begin(), size_mass.end());
    std::vector<std::size_t> pool(total);
    for (std::size_t p = 0; p < cfg.perturbations; ++p) {
      const std::size_t size = size_dist(rng) + 1;
      for (std::size_t f = 0; f < total; ++f) pool[f] = f;
      auto& row = design.emplace_back(total, 0);
      for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(pool[i], pool[pick(rng)]);
        row[pool[i]] = 1;
      }
      weights.push_back(1.0);
    }
  }

  std::vector<std::vector<std::uint8_t>> ends = {std::vector<std::uint8_t>(total, 1),
                                                 std::vector<std::uint8_t>(total, 0)};
  const std::vector<double> end_probs = evaluate_design(model, target_class, renderer, ends);
  const double v_full = end_probs[0];
  const double v_empty = end_probs[1];
  const double delta = v_full - v_empty;
  const std::vector<double> probs = evaluate_design(model, target_class, renderer, design);

  // Eliminate the last feature through the efficiency constraint.
  const auto rows = static_cast<Eigen::Index>(design.size());
  const auto cols = static_cast<Eigen::Index>(total - 1);
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  Eigen::VectorXd w(rows);
  for (Eigen::Index p = 0; p < rows; ++p) {
    const auto& row = design[static_cast<std::size_t>(p)];
    const double last = row[total - 1];
    for (Eigen::Index f = 0; f < cols; ++f) x(p, f) = row[static_cast<std::size_t>(f)] - last;
    y(p) = probs[static_cast<std::size_t>(p)] - v_empty - last * delta;
    w(p) = weights[static_cast<std::size_t>(p)];
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd wx = sw.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
  qr.setThreshold(1e-10);
  require(rows >= cols && qr.rank() == cols, ErrorKind::kInvalidArgument,
          "singular KernelSHAP regression; increase the number of perturbations");
  const Eigen::VectorXd beta = qr.solve(sw.cwiseProduct(y));

  std::vector<double> phi(total);
  double partial = 0.0;
  for (Eigen::Index f = 0; f < cols; ++f) {
    phi[static_cast<std::size_t>(f)] = beta(f);
    partial += beta(f);
  }
  phi[total - 1] = delta - partial;
  Explanation e = ranked_by_score(ExplainerMethod::kKernelShap, target_class, space, phi, cfg.seed);
  e.config = {{"perturbations", static_cast<double>(design.size())},
              {"exhaustive", cfg.exhaustive ? 1.0 : 0.0},
              {"base_value", v_empty},
              {"full_value", v_full}};
  return e;
}

}  // namespace spectralx
