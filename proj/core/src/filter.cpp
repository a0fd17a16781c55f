#include "sccontrol/filter.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scc {

double riccati_rhs(const ValidBankParams& p, double s)
{
    const double g = (p->noise_m > 0.0 ? s / p->noise_m : 0.0) + p->sigma * p->rho;
    return p->sigma * p->sigma - g * g;
}

double riccati_variance(const ValidBankParams& p, double s0, double t)
{
    if (s0 < 0.0) fail(ErrorCode::InvalidInput, "initial variance must be nonnegative");
    if (t < 0.0) fail(ErrorCode::InvalidInput, "time must be nonnegative");
    const double m = p->noise_m;
    if (m == 0.0) return 0.0;
    const double ms = m * p->sigma;
    const double s_inf = ms * (1.0 - p->rho);
    if (s0 == s_inf || t == 0.0) return s0;

    // A e^{2 sigma t/m} -/+ 1 over A e^{2 sigma t/m} +/- 1 is tanh or coth of
    // half the exponent; this form does not overflow for small m.
    const double A = std::abs((ms * (1.0 + p->rho) + s0) / (s_inf - s0));
    const double h = 0.5 * (std::log(A) + 2.0 * p->sigma * t / m);
    const double ratio = s0 < s_inf ? std::tanh(h) : 1.0 / std::tanh(h);
    return ms * ratio - ms * p->rho;
}

FilterState kalman_step_continuous(const FilterState& st, double dZ, double dt, const ValidBankParams& p)
{
    if (p->noise_m == 0.0) fail(ErrorCode::ZeroNoise, "continuous filter needs m > 0");
    if (!(dt > 0.0)) fail(ErrorCode::InvalidInput, "dt must be positive");
    const double m = p->noise_m;
    const double gain = st.s_var / m + p->sigma * p->rho;
    FilterState out;
    out.m_hat = st.m_hat + (p->alpha - 0.5 * p->sigma * p->sigma) * dt + gain * (dZ / m - st.m_hat * dt / m);
    out.s_var = riccati_variance(p, st.s_var, dt);
    out.t = st.t + dt;
    return out;
}

FilterState observe_exact(const FilterState& st, double log_assets, double dt)
{
    return FilterState{log_assets, 0.0, st.t + dt};
}

DiscreteFilterState discrete_prior(double a0, double P0)
{
    if (P0 < 0.0) fail(ErrorCode::InvalidInput, "prior variance must be nonnegative");
    DiscreteFilterState s;
    s.a = a0;
    s.P = P0;
    return s;
}

DiscreteFilterState kalman_step_discrete(const DiscreteFilterState& st, double obs, const Theta& th,
                                         KalmanForm form)
{
    const double drift = th.alpha - 0.5 * th.sigma * th.sigma;
    const double m2 = th.m * th.m;
    DiscreteFilterState out = st;

    if (form == KalmanForm::Exact) {
        const double F = st.P + m2 + 2.0 * st.cross;
        if (!(F > 0.0)) fail(ErrorCode::SingularTransform, "innovation variance is not positive");
        const double cov = st.P + st.cross;
        out.v = obs - st.a;
        out.F = F;
        out.a_filt = st.a + cov / F * out.v;
        out.P_filt = std::max(0.0, st.P - cov * cov / F);
        out.a = out.a_filt + drift;
        out.P = out.P_filt + th.sigma * th.sigma;
        out.cross = th.rho * th.sigma * th.m;
        return out;
    }

    const double c = 1.0 + th.sigma * th.rho / th.m;
    if (th.m == 0.0 || c == 0.0) fail(ErrorCode::SingularTransform, "1 + sigma rho / m vanishes");
    const double F = st.P + m2;
    if (!(F > 0.0)) fail(ErrorCode::SingularTransform, "innovation variance is not positive");
    out.v = obs - st.a;
    out.F = F;
    out.a_filt = st.a + st.P / F * out.v;
    out.P_filt = st.P - st.P * st.P / F;
    out.a = out.a_filt / c + th.sigma * th.rho * obs / (th.m + th.sigma * th.rho) + drift / c;
    out.P = (out.P_filt + th.sigma * th.sigma * (1.0 - th.rho * th.rho)) / (c * c);
    out.cross = 0.0;
    return out;
}

DiscreteFilterRun run_discrete_filter(const std::vector<double>& series, const Theta& th, double a0, double P0,
                                      KalmanForm form)
{
    if (series.empty()) fail(ErrorCode::InvalidInput, "empty series");
    DiscreteFilterRun run;
    run.steps.reserve(series.size());
    DiscreteFilterState s = discrete_prior(a0, P0);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (double y : series) {
        s = kalman_step_discrete(s, y, th, form);
        run.loglik += -0.5 * (log2pi + std::log(std::abs(s.F)) + s.v * s.v / s.F);
        run.steps.push_back(s);
    }
    return run;
}

double log_likelihood(const std::vector<double>& series, const Theta& th, double a0, double P0, KalmanForm form)
{
    return run_discrete_filter(series, th, a0, P0, form).loglik;
}

SignalSeries simulate_signal_series(const Theta& th, int n, std::uint64_t seed, double m0)
{
    if (n < 1) fail(ErrorCode::InvalidInput, "need at least one step");
    const double drift = th.alpha - 0.5 * th.sigma * th.sigma;
    const double rc = std::sqrt(std::max(0.0, 1.0 - th.rho * th.rho));
    SignalSeries out;
    out.M.resize(n + 1);
    out.Mac.resize(n + 1);
    Rng rng(derive_seed(seed, 0x5157));
    out.M[0] = m0;
    out.Mac[0] = m0 + th.m * rng.normal();
    for (int k = 1; k <= n; ++k) {
        const double e = rng.normal();
        const double eps = th.rho * e + rc * rng.normal();
        out.M[k] = out.M[k - 1] + drift + th.sigma * eps;
        out.Mac[k] = out.M[k] + th.m * e;
    }
    return out;
}

}  // namespace scc
