#include "doctest.h"

#include "sccontrol/bank_full.hpp"
#include "sccontrol/bank_partial.hpp"
#include "sccontrol/errors.hpp"
#include "sccontrol/sim.hpp"

#include <cmath>

using namespace scc;

namespace {

const ValidBankParams& table_b()
{
    static const ValidBankParams p = ValidBankParams::validate(bank_table_b());
    return p;
}

const BankPolicy& partial_policy()
{
    static const BankPolicy pol = BankPolicy::from(penalty_solve(table_b()));
    return pol;
}

GridSpec small_grid()
{
    GridSpec g = default_retire_grid(retire_baseline());
    g.x.n = 61;
    g.y.n = 21;
    return g;
}

RetireParams retire_with_alpha(double a)
{
    RetireParams b = retire_baseline();
    b.mean_reversion = a;
    return b;
}

const RetireSolution& retire_policy()
{
    static const RetireSolution s = penalty_solve_retire(ValidRetireParams::validate(retire_baseline()), small_grid());
    return s;
}

const RetireSolution& retire_bench()
{
    static const RetireSolution s = penalty_solve_retire(ValidRetireParams::validate(retire_with_alpha(0.0)), small_grid());
    return s;
}

}  // namespace

TEST_CASE("without noise the expected equity is the true equity")
{
    BankParams b = bank_figure();
    b.noise_m = 0.0;
    b.rho = 0.0;
    auto p = ValidBankParams::validate(b);
    BankSimConfig c;
    c.n_paths = 50;
    c.X0 = 0.2;
    c.horizon = 5.0;
    auto out = simulate_bank(p, BankPolicy::none(), c);
    for (const auto& path : out.paths)
        for (std::size_t k = 0; k < path.E.size(); ++k) CHECK(path.E_hat[k] == path.E[k]);
}

TEST_CASE("tracking error settles at the filter standard deviation")
{
    auto p = ValidBankParams::validate(bank_book_equity_figure());
    BankSimConfig c;
    c.n_paths = 500;
    c.X0 = 0.1;
    c.seed = 11;
    auto out = simulate_bank(p, BankPolicy::none(), c);
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 4; k < out.t.size(); ++k)
        if (std::isfinite(out.tracking_sd[k])) {
            sum += out.tracking_sd[k];
            ++n;
        }
    REQUIRE(n > 40);
    CHECK(sum / n == doctest::Approx(std::sqrt(p->stationary_variance())).epsilon(0.15));
}

TEST_CASE("orders, deliveries and dividends respect the delay")
{
    const auto& p = table_b();
    BankSimConfig c;
    c.n_paths = 200;
    c.seed = 5;
    auto out = simulate_bank(p, partial_policy(), c);
    int orders = 0;
    for (const auto& path : out.paths) {
        orders += static_cast<int>(path.order_times.size());
        CHECK(path.delivery_times.size() <= path.order_times.size());
        for (std::size_t k = 0; k < path.delivery_times.size(); ++k)
            CHECK(path.delivery_times[k] == doctest::Approx(path.order_times[k] + p->delay_Delta).epsilon(1e-9));
        for (double o : path.order_times)
            for (double d : path.dividend_times) CHECK_FALSE((d >= o - 1e-12 && d < o + p->delay_Delta - 1e-12));
    }
    CHECK(orders > 0);
    CHECK(out.mean_issued > 0.0);
    CHECK(out.mean_dividends > 0.0);
}

TEST_CASE("expected ratio stays near or below the dividend barrier at reports")
{
    const auto& p = table_b();
    const auto& pol = partial_policy();
    BankSimConfig c;
    c.n_paths = 100;
    c.seed = 9;
    auto out = simulate_bank(p, pol, c);
    // one step of diffusion above the barrier is allowed
    const double slack = 6.0 * 0.2 * std::sqrt(c.dt);
    for (const auto& path : out.paths)
        for (std::size_t k = 0; k < path.E.size(); ++k) {
            if (path.liquidation_time >= 0.0 && out.t[k] >= path.liquidation_time) break;
            CHECK(path.E_hat[k] / path.D[k] <= pol.dividend_barrier(out.S[k]) + slack);
        }
}

TEST_CASE("bank simulation is reproducible and seed dependent")
{
    BankSimConfig c;
    c.n_paths = 40;
    c.horizon = 5.0;
    c.seed = 21;
    auto a = simulate_bank(table_b(), partial_policy(), c);
    auto b = simulate_bank(table_b(), partial_policy(), c);
    c.seed = 22;
    auto d = simulate_bank(table_b(), partial_policy(), c);
    bool differs = false;
    for (std::size_t n = 0; n < a.paths.size(); ++n) {
        CHECK(a.paths[n].E == b.paths[n].E);
        CHECK(a.paths[n].E_hat == b.paths[n].E_hat);
        differs = differs || a.paths[n].E != d.paths[n].E;
    }
    CHECK(differs);
}

TEST_CASE("bank simulation rejects a coarse step")
{
    BankSimConfig c;
    c.dt = table_b()->delay_Delta / 4.0;
    CHECK_THROWS_AS(simulate_bank(table_b(), partial_policy(), c), Error);
    c.dt = 1.0 / 64.0;
    c.n_paths = 0;
    CHECK_THROWS_AS(simulate_bank(table_b(), partial_policy(), c), Error);
}

TEST_CASE("retirement simulation is reproducible")
{
    auto p = ValidRetireParams::validate(retire_baseline());
    RetireSimConfig c;
    c.n_paths = 300;
    c.seed = 4;
    auto a = simulate_retirement_policy(p, retire_policy(), c, "a");
    auto b = simulate_retirement_policy(p, retire_policy(), c, "b");
    CHECK(a.expected_time == b.expected_time);
    CHECK(a.expected_share == b.expected_share);
    CHECK(a.expected_share >= 0.0);
    CHECK(a.expected_share <= 1.0);
}

TEST_CASE("starting beyond the boundary retires at once")
{
    auto p = ValidRetireParams::validate(retire_baseline());
    const auto& s = retire_policy();
    RetireSimConfig c;
    c.n_paths = 100;
    c.w_over_I = 2.0 * s.threshold[static_cast<std::size_t>(s.z_index(0.0))];
    auto st = simulate_retirement_policy(p, s, c, "x");
    CHECK(st.expected_time == 0.0);
    CHECK(st.immediate == st.paths);
}

TEST_CASE("antithetic and plain estimates agree")
{
    auto p = ValidRetireParams::validate(retire_baseline());
    RetireSimConfig c;
    c.n_paths = 2000;
    c.seed = 8;
    auto plain = simulate_retirement_policy(p, retire_policy(), c, "plain");
    c.antithetic = true;
    c.seed = 9;
    auto anti = simulate_retirement_policy(p, retire_policy(), c, "anti");
    const double se = std::hypot(plain.time_se, anti.time_se);
    CHECK(std::abs(plain.expected_time - anti.expected_time) < 3.0 * se);
}

TEST_CASE("halving the step moves the mean by less than sampling error")
{
    auto p = ValidRetireParams::validate(retire_baseline());
    RetireSimConfig c;
    c.n_paths = 2000;
    c.seed = 12;
    auto coarse = simulate_retirement_policy(p, retire_policy(), c, "coarse");
    c.dt /= 2.0;
    auto fine = simulate_retirement_policy(p, retire_policy(), c, "fine");
    CHECK(std::abs(coarse.expected_time - fine.expected_time) < 3.0 * std::hypot(coarse.time_se, fine.time_se));
}

TEST_CASE("identical policies give identical statistics")
{
    auto p = ValidRetireParams::validate(retire_with_alpha(0.0));
    RetireSimConfig c;
    c.n_paths = 500;
    auto cmp = simulate_retirement(p, retire_bench(), retire_bench(), c);
    CHECK(cmp.policy.expected_time == cmp.benchmark.expected_time);
    CHECK(cmp.policy.expected_share == cmp.benchmark.expected_share);
}

TEST_CASE("benchmark must ignore cointegration")
{
    auto p = ValidRetireParams::validate(retire_baseline());
    RetireSimConfig c;
    c.n_paths = 10;
    CHECK_THROWS_AS(simulate_retirement(p, retire_policy(), retire_policy(), c), Error);
    c.dt = 0.0;
    CHECK_THROWS_AS(simulate_retirement_policy(p, retire_policy(), c, "x"), Error);
}

TEST_CASE("benchmark works longer when labor and stocks are more tightly tied")
{
    RetireSimConfig c;
    c.n_paths = 4000;
    c.seed = 3;
    double prev = -1.0;
    for (double a : {0.05, 0.15, 0.25}) {
        auto p = ValidRetireParams::validate(retire_with_alpha(a));
        auto st = simulate_retirement_policy(p, retire_bench(), c, "bench");
        CHECK(st.expected_time > prev);
        prev = st.expected_time;
    }
}
