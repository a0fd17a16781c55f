#include "sccontrol/params.hpp"

#include "sccontrol/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace scc {

namespace {

void require_finite(double v, const char* name)
{
    if (!std::isfinite(v)) fail(ErrorCode::InvalidParameter, std::string(name) + " must be finite");
}

void require(bool ok, ErrorCode code, const std::string& msg)
{
    if (!ok) fail(code, msg);
}

}  // namespace

ValidBankParams ValidBankParams::validate(const BankParams& raw)
{
    BankParams p = raw;
    require_finite(p.mu, "mu");
    require_finite(p.alpha, "alpha");
    require_finite(p.sigma, "sigma");
    require_finite(p.delta, "delta");
    require_finite(p.omega, "omega");
    require_finite(p.kappa_min, "kappa_min");
    require_finite(p.issue_cost_K, "issue_cost_K");
    require_finite(p.delay_Delta, "delay_Delta");
    require_finite(p.noise_m, "noise_m");
    require_finite(p.rho, "rho");
    require_finite(p.conf_a, "conf_a");
    require(!std::isnan(p.issue_cap_sbar), ErrorCode::InvalidParameter, "issue_cap_sbar is NaN");
    require(!std::isnan(p.S_bar), ErrorCode::InvalidParameter, "S_bar is NaN");

    require(p.delta > std::max(p.mu, p.alpha), ErrorCode::DiscountTooLow,
            "delta must exceed max(mu, alpha)");
    require(p.sigma > 0.0, ErrorCode::NonpositiveVolatility, "sigma must be positive");
    require(p.noise_m >= 0.0, ErrorCode::InvalidParameter, "noise_m must be nonnegative");
    require(p.omega >= 0.0 && p.omega <= 1.0, ErrorCode::InvalidParameter, "omega must lie in [0,1]");
    require(p.rho >= -1.0 && p.rho <= 1.0, ErrorCode::InvalidParameter, "rho must lie in [-1,1]");
    require(p.conf_a > 0.0 && p.conf_a < 1.0, ErrorCode::InvalidParameter, "conf_a must lie in (0,1)");
    require(p.kappa_min >= 0.0, ErrorCode::InvalidParameter, "kappa_min must be nonnegative");
    require(p.issue_cost_K >= 0.0, ErrorCode::InvalidParameter, "issue_cost_K must be nonnegative");
    require(p.delay_Delta >= 0.0, ErrorCode::InvalidParameter, "delay_Delta must be nonnegative");
    require(p.issue_cap_sbar > 0.0, ErrorCode::InvalidParameter, "issue_cap_sbar must be positive");

    if (p.S_bar <= 0.0) p.S_bar = 4.0 * p.stationary_variance();
    return ValidBankParams(p);
}

ValidRetireParams ValidRetireParams::validate(const RetireParams& raw)
{
    const RetireParams& p = raw;
    for (auto [v, name] : {std::pair{p.r, "r"}, {p.mu_stock, "mu_stock"}, {p.sigma_stock, "sigma_stock"},
                           {p.gamma, "gamma"}, {p.B, "B"}, {p.beta, "beta"}, {p.mu_income, "mu_income"},
                           {p.sigma_income, "sigma_income"}, {p.recovery, "recovery"},
                           {p.jump_intensity, "jump_intensity"}, {p.sigma_z, "sigma_z"},
                           {p.mean_reversion, "mean_reversion"}, {p.z_bar, "z_bar"}})
        require_finite(v, name);

    require(p.sigma_stock > 0.0, ErrorCode::NonpositiveVolatility, "sigma_stock must be positive");
    require(p.mu_stock > p.r, ErrorCode::InvalidParameter, "mu_stock must exceed r");
    require(p.gamma > 0.0 && p.gamma != 1.0, ErrorCode::InvalidParameter,
            "gamma must be positive and different from 1");
    require(p.B > 1.0, ErrorCode::LeisureNotAboveOne, "B must exceed 1");
    require(p.r > 0.0, ErrorCode::InvalidParameter, "r must be positive");
    require(p.sigma_income >= 0.0, ErrorCode::InvalidParameter, "sigma_income must be nonnegative");
    require(p.sigma_z >= 0.0, ErrorCode::InvalidParameter, "sigma_z must be nonnegative");
    require(p.recovery >= 0.0 && p.recovery <= 1.0, ErrorCode::InvalidParameter,
            "recovery must lie in [0,1]");
    require(p.jump_intensity >= 0.0, ErrorCode::InvalidParameter, "jump_intensity must be nonnegative");
    require(p.mean_reversion >= 0.0, ErrorCode::InvalidParameter, "mean_reversion must be nonnegative");
    if (p.power_nu)
        require(std::isfinite(*p.power_nu) && *p.power_nu > 0.0, ErrorCode::InvalidParameter,
                "power_nu must be positive");
    if (p.eis_psi)
        require(std::isfinite(*p.eis_psi) && *p.eis_psi > 0.0, ErrorCode::InvalidParameter,
                "eis_psi must be positive");
    if (p.horizon_T)
        require(std::isfinite(*p.horizon_T) && *p.horizon_T > 0.0, ErrorCode::InvalidParameter,
                "horizon_T must be positive");

    const double theta = (p.mu_stock - p.r) / p.sigma_stock;
    const double g = p.gamma;
    const double K_bar = p.beta / g - ((1.0 - g) / g) * (p.r + theta * theta / (2.0 * g));
    require(K_bar > 0.0, ErrorCode::NegativeMertonConstant, "Merton constant K_bar must be positive");
    if (p.eis_psi) {
        const double psi = *p.eis_psi;
        const double k_ez = psi * p.beta + (1.0 - psi) * (p.r + theta * theta / (2.0 * g));
        require(k_ez > 0.0, ErrorCode::NegativeMertonConstant,
                "recursive-utility consumption rate must be positive");
    }
    return ValidRetireParams(p, theta, K_bar);
}

std::vector<double> Axis::nodes() const
{
    std::vector<double> v(static_cast<std::size_t>(n));
    if (stretch == Stretch::Uniform || ratio == 1.0) {
        for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    } else {
        // cell widths grow by a constant factor q, last/first = ratio
        const double q = std::pow(ratio, 1.0 / (n - 2));
        const double first = (hi - lo) * (q - 1.0) / (std::pow(q, n - 1) - 1.0);
        double x = lo;
        double h = first;
        v[0] = lo;
        for (int i = 1; i < n; ++i) {
            x += h;
            v[i] = x;
            h *= q;
        }
        v[n - 1] = hi;
    }
    return v;
}

void validate_grid(const GridSpec& g)
{
    for (const Axis* a : {&g.x, &g.y}) {
        require(a->n >= 3, ErrorCode::InvalidParameter, "grid axes need at least 3 nodes");
        require(a->hi > a->lo, ErrorCode::InvalidParameter, "grid axis must have hi > lo");
        require(a->ratio > 0.0, ErrorCode::InvalidParameter, "geometric ratio must be positive");
    }
    require(g.tol > 0.0, ErrorCode::InvalidParameter, "tolerance must be positive");
    require(g.max_iter >= 1, ErrorCode::InvalidParameter, "max_iter must be at least 1");
    for (double rp : g.penalty_schedule)
        require(rp > 0.0, ErrorCode::InvalidParameter, "penalty parameters must be positive");
}

BankParams bank_table_b()
{
    BankParams p;
    p.mu = 0.1052;
    p.alpha = 0.1285;
    p.sigma = 0.0521;
    p.delta = 0.2570;
    p.kappa_min = 0.048;
    p.omega = 0.2510;
    p.noise_m = 0.0285;
    p.rho = -0.2671;
    p.conf_a = 0.7993;
    p.delay_Delta = 0.5;
    p.issue_cost_K = 0.002;
    return p;
}

BankParams bank_table_a()
{
    BankParams p;
    p.mu = 0.1052;
    p.alpha = 0.1159;
    p.sigma = 0.0345;
    p.delta = 0.2330;
    p.kappa_min = 0.048;
    p.omega = 0.3150;
    p.delay_Delta = 0.5;
    p.issue_cost_K = 0.002;
    return p;
}

BankParams bank_figure()
{
    BankParams p = bank_table_a();
    p.sigma = 0.0311;
    return p;
}

RetireParams retire_baseline()
{
    RetireParams p;
    p.r = 0.01;
    p.mu_stock = 0.05;
    p.sigma_stock = 0.18;
    p.gamma = 3.0;
    p.B = 2.0;
    p.beta = 0.04;
    p.mu_income = 0.005;
    p.sigma_income = 0.10;
    p.recovery = 0.8;
    p.jump_intensity = 0.05;
    p.sigma_z = 0.18;
    p.mean_reversion = 0.15;
    p.z_bar = 0.0;
    return p;
}

}  // namespace scc
