// Compares the OpenMP kernels against their serial reference twins, and
// times a full dispatch solve. Thread count follows OMP_NUM_THREADS /
// EQGRID_THREADS.
#include <benchmark/benchmark.h>

#include "eqgrid/kernels.hpp"
#include "eqgrid/rng.hpp"
#include "eqgrid/sched.hpp"
#include "eqgrid/synth.hpp"

using namespace eqgrid;
using kernels::Csr;

namespace {

Csr random_matrix(int rows, int cols, int nnz_per_row, std::uint64_t seed) {
    Rng rng(seed, 0, "bench");
    Csr a;
    a.rows = rows;
    a.cols = cols;
    for (int i = 0; i < rows; ++i) {
        int prev = -1;
        for (int k = 0; k < nnz_per_row; ++k) {
            int col = prev + 1 + static_cast<int>(rng.index(cols / nnz_per_row));
            if (col >= cols) break;
            a.idx.push_back(col);
            a.val.push_back(rng.uniform(-1, 1));
            prev = col;
        }
        a.ptr.push_back(static_cast<int>(a.idx.size()));
    }
    return a;
}

void bench_spmv_serial(benchmark::State& state) {
    const Csr a = random_matrix(6000, 15000, 12, 7);
    std::vector<double> x(a.cols, 1.0), y(a.rows);
    for (auto _ : state) {
        kernels::spmv_serial(a, x.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void bench_spmv_parallel(benchmark::State& state) {
    const Csr a = random_matrix(6000, 15000, 12, 7);
    std::vector<double> x(a.cols, 1.0), y(a.rows);
    for (auto _ : state) {
        kernels::spmv_parallel(a, x.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void bench_normal_fill_serial(benchmark::State& state) {
    const Csr a = random_matrix(2000, 6000, 10, 11);
    const auto pat = kernels::normal_pattern(a);
    std::vector<double> theta(a.cols, 1.0), diag(a.rows, 1e-8);
    std::vector<double> values(pat.ptr.back());
    for (auto _ : state) {
        kernels::normal_fill_serial(a, pat, theta.data(), diag.data(), values.data());
        benchmark::DoNotOptimize(values.data());
    }
}

void bench_normal_fill_parallel(benchmark::State& state) {
    const Csr a = random_matrix(2000, 6000, 10, 11);
    const auto pat = kernels::normal_pattern(a);
    std::vector<double> theta(a.cols, 1.0), diag(a.rows, 1e-8);
    std::vector<double> values(pat.ptr.back());
    for (auto _ : state) {
        kernels::normal_fill_parallel(a, pat, theta.data(), diag.data(), values.data());
        benchmark::DoNotOptimize(values.data());
    }
}

void bench_dispatch_solve(benchmark::State& state) {
    synth::SynthConfig cfg;
    cfg.seed = 1;
    cfg.kind = synth::ScenarioKind::Weekday;
    const model::Scenario sc = synth::build_scenario(cfg);
    const model::EquityWeights w(sc.num_households(), 1.0);
    const auto s_out = sched::outside_options(sc);
    for (auto _ : state) {
        auto problem = sched::build_problem(sc, w, sched::RelaxRung::None, &s_out);
        auto schedule = sched::solve(problem);
        benchmark::DoNotOptimize(schedule.objective);
    }
}

}  // namespace

BENCHMARK(bench_spmv_serial);
BENCHMARK(bench_spmv_parallel);
BENCHMARK(bench_normal_fill_serial);
BENCHMARK(bench_normal_fill_parallel);
BENCHMARK(bench_dispatch_solve)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
