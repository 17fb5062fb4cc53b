#include <benchmark/benchmark.h>

#include <vector>

#include "bench_common.hpp"
#include "gode/codec.hpp"
#include "gode/hierarchy.hpp"
#include "gode/quantize.hpp"

namespace {

struct Fixture {
    gode::GaussianModel model;
    gode::Hierarchy hierarchy;
    gode::QuantParams params;

    explicit Fixture(std::size_t n) : model(bench::random_cloud(n)) {
        const std::vector<std::size_t> sizes = {n / 8, n / 8, n / 4, n - n / 2};
        hierarchy = gode::contiguous_hierarchy(sizes);
        params = gode::compute_quant_params(model, hierarchy, gode::QuantizationSpec{});
    }
};

void BM_Encode(benchmark::State& state) {
    const Fixture f(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gode::encode(f.model, f.hierarchy, gode::QuantizationSpec{}, f.params));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Encode)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_DecodeTopLevel(benchmark::State& state) {
    const Fixture f(static_cast<std::size_t>(state.range(0)));
    const auto bytes = gode::encode(f.model, f.hierarchy, gode::QuantizationSpec{}, f.params).bytes();
    for (auto _ : state) benchmark::DoNotOptimize(gode::decode(bytes, 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecodeTopLevel)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace
