#include <benchmark/benchmark.h>

#include "sccontrol/bank_full.hpp"
#include "sccontrol/bank_partial.hpp"
#include "sccontrol/calibrate.hpp"
#include "sccontrol/filter.hpp"
#include "sccontrol/liquidation.hpp"
#include "sccontrol/retire.hpp"
#include "sccontrol/sim.hpp"

using namespace scc;

namespace {

const ValidBankParams& table_b()
{
    static const ValidBankParams p = ValidBankParams::validate(bank_table_b());
    return p;
}

}  // namespace

static void BM_LiquidationBarrier(benchmark::State& state)
{
    const auto rule = LiquidationRule::from(table_b());
    const double S = table_b()->stationary_variance();
    for (auto _ : state) benchmark::DoNotOptimize(rule.barrier(S));
}
BENCHMARK(BM_LiquidationBarrier);

static void BM_RiccatiClosedForm(benchmark::State& state)
{
    const double S0 = 2.0 * table_b()->stationary_variance();
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(riccati_variance(table_b(), S0, t));
        t += 1e-3;
    }
}
BENCHMARK(BM_RiccatiClosedForm);

static void BM_KalmanLogLik(benchmark::State& state)
{
    const Theta th{0.04, 0.05, 0.03, -0.30};
    const auto s = simulate_signal_series(th, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(s.Mac, th, s.Mac[0], th.m * th.m));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KalmanLogLik)->Arg(100)->Arg(400)->Arg(1600)->Complexity();

static void BM_ParticleStep(benchmark::State& state)
{
    const Theta th{0.04, 0.05, 0.03, -0.30};
    const auto s = simulate_signal_series(th, 2, 1);
    PfConfig cfg;
    cfg.n_particles = static_cast<int>(state.range(0));
    const ParticleCloud c0 = pf_init(s.Mac[0], cfg);
    for (auto _ : state) benchmark::DoNotOptimize(pf_step(c0, s.Mac[0], s.Mac[1], cfg));
}
BENCHMARK(BM_ParticleStep)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

static void BM_SolveBarriers(benchmark::State& state)
{
    const auto p = ValidBankParams::validate(bank_figure());
    for (auto _ : state) benchmark::DoNotOptimize(solve_barriers(p).u1);
}
BENCHMARK(BM_SolveBarriers)->Unit(benchmark::kMillisecond);

static void BM_PartialSolve(benchmark::State& state)
{
    PartialConfig cfg = default_partial_config();
    cfg.grid.x.n = static_cast<int>(state.range(0));
    cfg.grid.y.n = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(penalty_solve(table_b(), cfg).residual);
}
BENCHMARK(BM_PartialSolve)->Args({101, 21})->Args({401, 81})->Unit(benchmark::kMillisecond);

static void BM_RetireSolve(benchmark::State& state)
{
    const auto p = ValidRetireParams::validate(retire_baseline());
    GridSpec g = default_retire_grid(p.get());
    g.x.n = static_cast<int>(state.range(0));
    g.y.n = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(penalty_solve_retire(p, g).residual);
}
BENCHMARK(BM_RetireSolve)->Args({61, 21})->Args({101, 41})->Unit(benchmark::kMillisecond);

static void BM_SimulateBank(benchmark::State& state)
{
    const BankPolicy pol = BankPolicy::from(solve_full(line_params(table_b())));
    BankSimConfig cfg;
    cfg.n_paths = static_cast<int>(state.range(0));
    cfg.keep_paths = false;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_bank(table_b(), pol, cfg).liquidated);
}
BENCHMARK(BM_SimulateBank)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_SimulateRetirement(benchmark::State& state)
{
    const auto p = ValidRetireParams::validate(retire_baseline());
    GridSpec g = default_retire_grid(p.get());
    g.x.n = 61;
    g.y.n = 21;
    const RetireSolution s = penalty_solve_retire(p, g);
    RetireSimConfig cfg;
    cfg.n_paths = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_retirement_policy(p, s, cfg, "policy").expected_time);
}
BENCHMARK(BM_SimulateRetirement)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
