#pragma once

#include "sccontrol/params.hpp"

namespace scc {

// Regulator closure rule under noisy accounting: the bank is closed when the
// expected equity ratio falls to I(S).
struct LiquidationRule {
    double kappa_min = 0.0;
    double conf_a = 0.5;

    static LiquidationRule from(const ValidBankParams& p) { return {p->kappa_min, p->conf_a}; }

    double barrier(double S) const;        // I(S)
    double barrier_slope(double S) const;  // dI/dS, -inf at S=0 when a > 1/2
    double argmin() const;                 // S minimizing I, 0 when a <= 1/2
};

double liquidation_barrier(double S, const LiquidationRule& rule);

// E[((x+1) exp(-y/2 + u sqrt(y)) - 1)^+], u ~ N(0,1).
double psi(double x, double y);

struct DegenerateLine {
    double S_line = 0.0;  // invariant variance m sigma (1 - rho)
    double kappa1 = 0.0;
    double omega1 = 0.0;
};

DegenerateLine degenerate_boundary_params(const ValidBankParams& p);

}  // namespace scc
