#include <benchmark/benchmark.h>

#include <patchgauss/patchgauss.hpp>

using namespace patchgauss;

namespace {

ImageTensor random_image(std::size_t side, std::size_t channels, std::uint64_t seed) {
  ImageTensor img(side, side, channels);
  RngStream rng(seed, 0, "bench");
  for (double& v : img.values()) v = rng.next_unit();
  return img;
}

void BM_Dft2(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto plane = channel_plane(random_image(side, 1, 1), 0);
  for (auto _ : state) benchmark::DoNotOptimize(dft2(plane));
}
BENCHMARK(BM_Dft2)->Arg(8)->Arg(32)->Arg(64);

void BM_PatchGaussian(benchmark::State& state) {
  const auto img = random_image(32, 3, 2);
  AugmentSpec spec;
  spec.kind = AugmentKind::patch_gaussian;
  spec.sigma_max = 1.0;
  spec.patch_size = static_cast<std::size_t>(state.range(0));
  spec.fill.values.assign(3, 0.5);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(img, spec, StreamKey{7, i++}));
}
BENCHMARK(BM_PatchGaussian)->Arg(8)->Arg(16)->Arg(32);

void BM_GaussianSuite(benchmark::State& state) {
  LabeledDataset data;
  for (std::uint64_t k = 0; k < 64; ++k) {
    data.images.push_back(random_image(32, 3, k));
    data.labels.push_back(static_cast<int>(k % 10));
  }
  const auto workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_eval_suite(data, 3, workers));
}
BENCHMARK(BM_GaussianSuite)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ToyForward(benchmark::State& state) {
  const auto model = init_toy_model(1, static_cast<std::size_t>(state.range(0)), 1, 2, 2);
  const auto img = random_image(32, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(img));
}
BENCHMARK(BM_ToyForward)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
