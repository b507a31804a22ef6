#include <vector>

#include <benchmark/benchmark.h>

#include "planerect/geometry.hpp"
#include "planerect/polysolve.hpp"
#include "planerect/robust.hpp"
#include "planerect/synth.hpp"

using namespace planerect;

namespace {

GroundTruthScene bench_scene() {
    SceneSpec s;
    s.seed = 4242;
    s.groupSizes = {2, 2, 2, 3, 3, 4, 4};
    return gen_scene(s);
}

PolySystem bench_system() {
    const GroundTruthScene s = bench_scene();
    const Pool pool = make_pool(s.normalized_frames());
    const Variant v = parse_variant("des222");
    return build_system(pool, *draw_sample(pool, v.config, 1, 0), v);
}

std::vector<ImagePoint> bench_grid(int n) {
    std::vector<ImagePoint> g;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            g.emplace_back(-0.5 + i / (n - 1.0), -0.5 + k / (n - 1.0));
        }
    }
    return g;
}

void BM_TrackSerial(benchmark::State &state) {
    const PolySystem sys = bench_system();
    const SolverConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(homotopy::track_all_serial(sys, cfg));
    }
}

void BM_TrackParallel(benchmark::State &state) {
    const PolySystem sys = bench_system();
    const SolverConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(homotopy::track_all_parallel(sys, cfg));
    }
}

void BM_DenseMapSerial(benchmark::State &state) {
    const auto grid = bench_grid(static_cast<int>(state.range(0)));
    const RectifyModel m(0.3, -0.2, -4.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense_change_of_scale_map_serial(grid, m, ImagePoint::Zero()));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}

void BM_DenseMapParallel(benchmark::State &state) {
    const auto grid = bench_grid(static_cast<int>(state.range(0)));
    const RectifyModel m(0.3, -0.2, -4.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense_change_of_scale_map(grid, m, ImagePoint::Zero()));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}

FrameGroups add_noise_normalized(const GroundTruthScene &s) {
    GroundTruthScene noisy = s;
    noisy.frames = add_noise(s, {1.0}, 3);
    return noisy.normalized_frames();
}

RansacOptions bench_options() {
    RansacOptions o;
    o.variant = parse_variant("des222");
    o.iterations = 25;
    o.seed = 7;
    return o;
}

void BM_RansacSerial(benchmark::State &state) {
    const GroundTruthScene s = bench_scene();
    const Pool pool = make_pool(add_noise_normalized(s));
    const RansacOptions o = bench_options();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ransac_serial(pool, o));
    }
}

void BM_RansacParallel(benchmark::State &state) {
    const GroundTruthScene s = bench_scene();
    const Pool pool = make_pool(add_noise_normalized(s));
    const RansacOptions o = bench_options();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ransac(pool, o));
    }
}

} // namespace

BENCHMARK(BM_TrackSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrackParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseMapSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseMapParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RansacSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RansacParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
