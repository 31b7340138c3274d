#include <benchmark/benchmark.h>

#include "kslab/batch.hpp"

using namespace kslab;

namespace {

std::vector<RunJob> make_jobs(std::size_t count) {
    std::vector<RunJob> jobs;
    auto grid = make_grid(RadialGrid::log_graded(8.0, 300, 1e-4));
    for (std::size_t k = 0; k < count; ++k) {
        SolverConfig c;
        c.grid = grid;
        c.time_cap = 0.2;
        c.blowup_threshold = 1e5;
        jobs.push_back({c, InitialData{Gaussian{4.0 + 2.0 * static_cast<double>(k), 1.0}}});
    }
    return jobs;
}

std::vector<double> tail_coefficients(std::size_t count) {
    std::vector<double> ms;
    for (std::size_t k = 0; k < count; ++k) ms.push_back(0.25 + 0.2 * static_cast<double>(k));
    return ms;
}

void BM_RunsSerial(benchmark::State& state) {
    const auto jobs = make_jobs(8);
    for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(jobs));
}

void BM_RunsParallel(benchmark::State& state) {
    const auto jobs = make_jobs(8);
    const int threads = resolve_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(run_batch(jobs, threads));
    state.counters["threads"] = threads;
}

void BM_ProfilesSerial(benchmark::State& state) {
    const auto ms = tail_coefficients(16);
    for (auto _ : state) benchmark::DoNotOptimize(profile_batch_serial(ms, Dimension(3), {}));
}

void BM_ProfilesParallel(benchmark::State& state) {
    const auto ms = tail_coefficients(16);
    const int threads = resolve_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(profile_batch(ms, Dimension(3), {}, threads));
    state.counters["threads"] = threads;
}

}  // namespace

BENCHMARK(BM_RunsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RunsParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ProfilesSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ProfilesParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
