#pragma once

#include "sccontrol/params.hpp"

#include <cstdint>
#include <vector>

namespace scc {

// Conditional law of log assets given the noisy signal: N(m_hat, s_var).
struct FilterState {
    double m_hat = 0.0;
    double s_var = 0.0;
    double t = 0.0;
};

// Closed-form solution of dS = [sigma^2 - (S/m + sigma rho)^2] dt. Returns 0
// for m = 0 (fully observed).
double riccati_variance(const ValidBankParams& p, double s0, double t);
double riccati_rhs(const ValidBankParams& p, double s);

// One step of the continuous-time filter on the signal increment dZ.
// Rejects m = 0 with ZeroNoise; use observe_exact in that case.
FilterState kalman_step_continuous(const FilterState& st, double dZ, double dt, const ValidBankParams& p);

// m = 0: the log-asset value is observed directly.
FilterState observe_exact(const FilterState& st, double log_assets, double dt);

// Quarterly state-space parameters.
struct Theta {
    double alpha = 0.0;
    double sigma = 0.0;
    double m = 0.0;
    double rho = 0.0;
};

// Predicted moments for the next observation. `cross` is Cov(M_k, m e_k)
// given the past: zero for the first observation and rho sigma m after
// each prediction step, because the asset shock and the accounting error of
// the same quarter are correlated.
struct DiscreteFilterState {
    double a = 0.0;       // predicted mean a_k
    double P = 0.0;       // predicted variance P_k
    double cross = 0.0;
    double v = 0.0;       // last innovation
    double F = 0.0;       // last innovation variance
    double a_filt = 0.0;  // a_{k|k}
    double P_filt = 0.0;  // P_{k|k}
};

// Exact: conditions on the contemporaneous noise correlation, so the
// posterior is the exact Gaussian conditional.
// Printed: the textbook recursion written for the transformed model, with
// F = P + m^2 and the lagged observation in the mean update. Kept for
// comparison; it is not the exact conditional when rho != 0.
enum class KalmanForm { Exact, Printed };

// Update with observation obs, then predict the next quarter.
DiscreteFilterState kalman_step_discrete(const DiscreteFilterState& st, double obs, const Theta& th,
                                         KalmanForm form = KalmanForm::Exact);

// Starting state from a prior N(a0, P0) on M_0.
DiscreteFilterState discrete_prior(double a0, double P0);

struct DiscreteFilterRun {
    std::vector<DiscreteFilterState> steps;  // state after each observation
    double loglik = 0.0;
};

DiscreteFilterRun run_discrete_filter(const std::vector<double>& series, const Theta& th, double a0, double P0,
                                      KalmanForm form = KalmanForm::Exact);

double log_likelihood(const std::vector<double>& series, const Theta& th, double a0, double P0,
                      KalmanForm form = KalmanForm::Exact);

struct SignalSeries {
    std::vector<double> M;    // true log assets M_0..M_n
    std::vector<double> Mac;  // reported log assets
};

// M_0 = m0, then n Euler steps of one quarter each.
SignalSeries simulate_signal_series(const Theta& th, int n, std::uint64_t seed, double m0 = 0.0);

}  // namespace scc
