#include <doctest.h>

#include "sccontrol/config.hpp"
#include "sccontrol/errors.hpp"
#include "sccontrol/normal.hpp"
#include "sccontrol/parallel.hpp"
#include "sccontrol/params.hpp"
#include "sccontrol/rng.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace scc;

namespace {

// Marsaglia's Taylor series for Phi; independent of erfc.
double cdf_series(double x)
{
    long double sum = x, term = x;
    const long double x2 = static_cast<long double>(x) * x;
    for (int n = 1; n < 500; ++n) {
        term *= x2 / (2 * n + 1);
        sum += term;
        if (std::fabs(static_cast<double>(term)) < 1e-30) break;
    }
    const long double pdf = std::exp(-0.5L * x2) / std::sqrt(2.0L * 3.14159265358979323846L);
    return static_cast<double>(0.5L + pdf * sum);
}

double quantile_by_bisection(double p)
{
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (norm_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

template <class F>
ErrorCode code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("normal cdf matches the Taylor series")
{
    for (double x = -6.0; x <= 6.0; x += 0.25) {
        const double ref = cdf_series(x);
        CHECK(norm_cdf(x) == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("normal quantile inverts the cdf")
{
    for (double p : {1e-8, 1e-4, 0.01, 0.2, 0.5, 0.7993, 0.95, 0.999999}) {
        CHECK(std::abs(norm_quantile(p) - quantile_by_bisection(p)) < 1e-9);
    }
    CHECK(std::isinf(norm_quantile(0.0)));
    CHECK(code_of([] { norm_quantile(1.5); }) == ErrorCode::InvalidInput);
}

TEST_CASE("bank calibration row is accepted and validation is idempotent")
{
    const auto v = validate_bank_params(bank_table_b());
    CHECK(v->sigma == 0.0521);
    CHECK(v->S_bar == doctest::Approx(4.0 * 0.0285 * 0.0521 * (1.0 + 0.2671)));
    const auto w = ValidBankParams::validate(v);
    CHECK(w->S_bar == v->S_bar);
    const auto u = validate_bank_params(v.get());
    CHECK(u->S_bar == v->S_bar);
}

TEST_CASE("bank parameter violations are named")
{
    BankParams p = bank_table_b();
    p.mu = 0.2;
    p.alpha = 0.1;
    p.delta = 0.2;
    CHECK(code_of([&] { validate_bank_params(p); }) == ErrorCode::DiscountTooLow);

    p = bank_table_b();
    p.sigma = 0.0;
    CHECK(code_of([&] { validate_bank_params(p); }) == ErrorCode::NonpositiveVolatility);

    p = bank_table_b();
    p.omega = 1.2;
    CHECK(code_of([&] { validate_bank_params(p); }) == ErrorCode::InvalidParameter);

    p = bank_table_b();
    p.noise_m = -0.01;
    CHECK(code_of([&] { validate_bank_params(p); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("retirement baseline: theta and Merton constant")
{
    const auto v = validate_retire_params(retire_baseline());
    // direct evaluation in long double
    const long double th = (0.05L - 0.01L) / 0.18L;
    const long double kbar = 0.04L / 3.0L - ((1.0L - 3.0L) / 3.0L) * (0.01L + th * th / 6.0L);
    CHECK(v.theta() == doctest::Approx(static_cast<double>(th)).epsilon(1e-14));
    CHECK(v.K_bar() == doctest::Approx(static_cast<double>(kbar)).epsilon(1e-14));
    CHECK(v.theta() == doctest::Approx(0.2222).epsilon(1e-3));
    CHECK(v.K_bar() == doctest::Approx(0.02549).epsilon(1e-3));
}

TEST_CASE("retirement parameter violations")
{
    RetireParams p = retire_baseline();
    p.B = 1.0;
    CHECK(code_of([&] { validate_retire_params(p); }) == ErrorCode::LeisureNotAboveOne);

    p = retire_baseline();
    p.gamma = 1.0;
    CHECK(code_of([&] { validate_retire_params(p); }) == ErrorCode::InvalidParameter);

    // gamma < 1 with a low discount rate makes K_bar negative
    p = retire_baseline();
    p.gamma = 0.5;
    p.beta = 0.0;
    CHECK(code_of([&] { validate_retire_params(p); }) == ErrorCode::NegativeMertonConstant);
}

TEST_CASE("json round trip keeps every field")
{
    BankParams b = bank_table_b();
    b.S_bar = 0.02;
    const nlohmann::json jb = b;
    const BankParams b2 = jb.get<BankParams>();
    CHECK(nlohmann::json(b2) == jb);
    CHECK(std::isinf(b2.issue_cap_sbar));

    RetireParams r = retire_baseline();
    r.eis_psi = 0.5;
    const nlohmann::json jr = r;
    const RetireParams r2 = jr.get<RetireParams>();
    CHECK(r2.eis_psi.value() == 0.5);
    CHECK(!r2.horizon_T.has_value());
    CHECK(nlohmann::json(r2) == jr);

    nlohmann::json bad = jb;
    bad["sigmaa"] = 0.1;
    CHECK(code_of([&] { (void)bad.get<BankParams>(); }) == ErrorCode::InvalidInput);
}

TEST_CASE("grid axes")
{
    Axis a{0.0, 1.0, 11, Stretch::Uniform, 1.0};
    auto x = a.nodes();
    CHECK(x.front() == 0.0);
    CHECK(x.back() == 1.0);
    CHECK(x[5] == doctest::Approx(0.5));

    Axis g{0.0, 1.0, 21, Stretch::Geometric, 10.0};
    x = g.nodes();
    CHECK(x.back() == 1.0);
    const double first = x[1] - x[0];
    const double last = x[20] - x[19];
    CHECK(last / first == doctest::Approx(10.0).epsilon(1e-9));
    for (int i = 1; i < 21; ++i) CHECK(x[i] > x[i - 1]);

    GridSpec gs;
    gs.x.n = 2;
    CHECK(code_of([&] { validate_grid(gs); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("rng is reproducible and roughly standard normal")
{
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
    Rng c(7);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.01);
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("parallel_for results do not depend on the thread count")
{
    std::vector<double> out1(1000), out4(1000);
    auto body = [](std::vector<double>& o) {
        return [&o](std::size_t i) {
            Rng r(derive_seed(9, i));
            o[i] = r.normal();
        };
    };
    set_thread_count(1);
    parallel_for(out1.size(), body(out1));
    set_thread_count(4);
    parallel_for(out4.size(), body(out4));
    set_thread_count(0);
    CHECK(out1 == out4);
}
