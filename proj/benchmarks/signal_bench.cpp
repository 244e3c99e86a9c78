#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "spectralx/perturbation.hpp"
#include "spectralx/signal.hpp"

using namespace spectralx;

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

void BM_Stft(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const WindowSpec w = make_window(WindowKind::kHann, 16);
  for (auto _ : state) benchmark::DoNotOptimize(stft(x, w, 8));
}
BENCHMARK(BM_Stft)->Arg(96)->Arg(384)->Arg(4096);

void BM_Istft(benchmark::State& state) {
  const auto s = stft(noise(static_cast<std::size_t>(state.range(0))), make_window(WindowKind::kHann, 16), 8);
  for (auto _ : state) benchmark::DoNotOptimize(istft(s));
}
BENCHMARK(BM_Istft)->Arg(96)->Arg(384)->Arg(4096);

// One perturbed signal with R = 10 cells replaced, via footprints.
void BM_RendererReplace(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const auto r = PerturbationRenderer::time_frequency(x, make_window(WindowKind::kHann, 16), 8, DeletionFill::kRbp);
  const auto masks = sample_masks(r.space(), 10, 64, 3);
  std::vector<double> out(x.size());
  std::size_t i = 0;
  for (auto _ : state) {
    r.render_replaced(masks[i++ % masks.size()].selected, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_RendererReplace)->Arg(96)->Arg(384);

// The same perturbation through a full spectrogram edit and inverse.
void BM_LiteralReplace(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const auto s = stft(x, make_window(WindowKind::kHann, 16), 8);
  const auto rbp = compute_rbp(s);
  const auto masks = sample_masks(FeatureSpace::of(s), 10, 64, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(istft(apply_tf_perturbation(s, rbp, masks[i++ % masks.size()], PerturbationMode::kDeletion)));
  }
}
BENCHMARK(BM_LiteralReplace)->Arg(96)->Arg(384);

}  // namespace
