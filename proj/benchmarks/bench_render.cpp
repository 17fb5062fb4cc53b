#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "gode/loss.hpp"
#include "gode/renderer.hpp"

namespace {

gode::Camera bench_camera(int res) {
    return gode::Camera::look_at(res, res, res, {0.0, 0.5, -4.0}, {0.0, 0.0, 0.0});
}

void BM_RenderForward(benchmark::State& state) {
    const auto model = bench::random_cloud(static_cast<std::size_t>(state.range(0)));
    const auto cam = bench_camera(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(gode::render(model, cam));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderForward)->Args({1000, 128})->Args({5000, 128})->Args({5000, 256})->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
    const auto model = bench::random_cloud(static_cast<std::size_t>(state.range(0)));
    const auto cam = bench_camera(static_cast<int>(state.range(1)));
    const auto fwd = gode::render_forward(model, cam);
    const gode::Image d_image(cam.width, cam.height, 0.01);
    for (auto _ : state) benchmark::DoNotOptimize(gode::render_backward(model, fwd, d_image));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderBackward)->Args({1000, 128})->Args({5000, 128})->Unit(benchmark::kMillisecond);

void BM_LossAndGrad(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    const gode::Image a(res, res, 0.3), b(res, res, 0.6);
    for (auto _ : state) benchmark::DoNotOptimize(gode::loss_and_grad(a, b, 0.2));
}
BENCHMARK(BM_LossAndGrad)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
