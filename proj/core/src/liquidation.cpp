#include "sccontrol/liquidation.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scc {

double LiquidationRule::barrier(double S) const
{
    if (S < 0.0) fail(ErrorCode::InvalidInput, "variance must be nonnegative");
    const double q = norm_quantile(conf_a);
    return -1.0 + (1.0 + kappa_min) * std::exp(0.5 * S - q * std::sqrt(S));
}

double LiquidationRule::barrier_slope(double S) const
{
    const double q = norm_quantile(conf_a);
    if (S == 0.0) {
        if (q > 0.0) return -std::numeric_limits<double>::infinity();
        if (q < 0.0) return std::numeric_limits<double>::infinity();
        return 0.5 * (1.0 + kappa_min);
    }
    return (1.0 + barrier(S)) * (0.5 - 0.5 * q / std::sqrt(S));
}

double LiquidationRule::argmin() const
{
    const double q = norm_quantile(conf_a);
    return q > 0.0 ? q * q : 0.0;
}

double liquidation_barrier(double S, const LiquidationRule& rule) { return rule.barrier(S); }

double psi(double x, double y)
{
    if (!(x > -1.0)) fail(ErrorCode::InvalidInput, "psi needs x > -1");
    if (y < 0.0) fail(ErrorCode::InvalidInput, "psi needs y >= 0");
    if (y == 0.0) return std::max(x, 0.0);
    const double sy = std::sqrt(y);
    const double u_star = (0.5 * y - std::log1p(x)) / sy;
    return (x + 1.0) * norm_cdf(sy - u_star) - norm_cdf(-u_star);
}

DegenerateLine degenerate_boundary_params(const ValidBankParams& p)
{
    DegenerateLine d;
    d.S_line = p->stationary_variance();
    d.kappa1 = LiquidationRule::from(p).barrier(d.S_line);
    d.omega1 = d.kappa1 > 0.0 ? p->omega / d.kappa1 * psi(d.kappa1, d.S_line) : p->omega;
    return d;
}

}  // namespace scc
