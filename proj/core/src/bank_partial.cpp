#include "sccontrol/bank_partial.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace scc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Thomas algorithm; a sub-, b main, c super-diagonal. Inputs are clobbered.
void solve_tridiagonal(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                       std::vector<double>& d, std::vector<double>& x)
{
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    x.resize(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
}

// Coefficients of -L on the zeta grid for the PDE
//   1/2 s(x)^2 V_zz + c(x) V_z - r V
// with central drift where that keeps the matrix monotone, upwind otherwise.
struct Operator {
    std::vector<double> lo, di, up;   // rows 1..n-2 meaningful
};

Operator build_operator(const std::vector<double>& z, double I, double vol, double shift_drift, double growth,
                        double rate)
{
    const std::size_t n = z.size();
    Operator op;
    op.lo.assign(n, 0.0);
    op.di.assign(n, 0.0);
    op.up.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = z[i] - z[i - 1];
        const double hp = z[i + 1] - z[i];
        const double x = I + z[i];
        const double a = 0.5 * (1.0 + x) * (1.0 + x) * vol * vol;
        const double c = growth * (1.0 + x) + shift_drift;
        double wl = 2.0 * a / (hm * (hm + hp));
        double wu = 2.0 * a / (hp * (hm + hp));
        const double cl = -c * hp / (hm * (hm + hp));
        const double cu = c * hm / (hp * (hm + hp));
        if (wl + cl >= 0.0 && wu + cu >= 0.0) {
            wl += cl;
            wu += cu;
        } else if (c > 0.0) {
            wu += c / hp;
        } else {
            wl += -c / hm;
        }
        op.lo[i] = -wl;
        op.up[i] = -wu;
        op.di[i] = wl + wu + rate;
    }
    return op;
}

double drift_S(const BankParams& p, double S)
{
    const double v = S / p.noise_m + p.sigma * p.rho;
    return p.sigma * p.sigma - v * v;
}

double vol_of(const BankParams& p, double S) { return S / p.noise_m + p.sigma * p.rho; }

// Terminal payoff of an order placed now: best top-up of the value at S(Delta).
std::vector<double> issue_payoff(const std::vector<double>& z, const std::vector<double>& W, double K, double cap)
{
    const std::size_t n = z.size();
    std::vector<double> g(n);
    if (std::isinf(cap)) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = n; k-- > 0;) {
            best = std::max(best, W[k] - z[k]);
            g[k] = best + z[k] - K;
        }
        return g;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double best = W[i] - z[i];
        for (std::size_t k = i + 1; k < n && z[k] - z[i] < cap; ++k) best = std::max(best, W[k] - z[k]);
        g[i] = best + z[i] - K;
    }
    return g;
}

}  // namespace

PartialConfig default_partial_config()
{
    PartialConfig c;
    c.grid.x = {0.0, 0.0, 401, Stretch::Geometric, 40.0};
    c.grid.y = {0.0, 0.0, 81, Stretch::Uniform, 1.0};
    return c;
}

ValidBankParams line_params(const ValidBankParams& p)
{
    const DegenerateLine d = degenerate_boundary_params(p);
    BankParams q = p.get();
    q.kappa_min = d.kappa1;
    q.omega = d.omega1;
    return ValidBankParams::validate(q);
}

std::vector<double> impulse_operator(const ValidBankParams& pv, double S0, const std::vector<double>& z,
                                     const std::vector<double>& W_delta, int steps)
{
    const BankParams& p = pv.get();
    const LiquidationRule rule = LiquidationRule::from(pv);
    const std::size_t n = z.size();
    const double rate = p.delta - p.mu;
    const double growth = p.alpha - p.mu;
    const double T = p.delay_Delta;
    const double dt = T / steps;

    std::vector<double> u = issue_payoff(z, W_delta, p.issue_cost_K, p.issue_cap_sbar);
    if (T <= 0.0) return u;

    auto coeffs = [&](double t) {
        const double S = riccati_variance(pv, S0, t);
        const double I = rule.barrier(S);
        const double shift = -rule.barrier_slope(S) * drift_S(p, S);
        return std::make_tuple(S, I, build_operator(z, I, vol_of(p, S), std::isfinite(shift) ? shift : 0.0, growth, rate));
    };

    Operator op_next = std::get<2>(coeffs(T));
    std::vector<double> a(n), b(n), c(n), d(n), x;
    // Rannacher start: two implicit half steps, then Crank-Nicolson.
    std::vector<std::pair<double, double>> plan;   // (dt, theta)
    plan.push_back({0.5 * dt, 1.0});
    plan.push_back({0.5 * dt, 1.0});
    for (int k = 1; k < steps; ++k) plan.push_back({dt, 0.5});
    double t = T;
    for (const auto& [h, theta] : plan) {
        const double t0 = std::max(t - h, 0.0);
        auto [S0t, I0, op] = coeffs(t0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double explicit_part =
                -(op_next.lo[i] * u[i - 1] + op_next.di[i] * u[i] + op_next.up[i] * u[i + 1]);
            a[i] = theta * h * op.lo[i];
            b[i] = 1.0 + theta * h * op.di[i];
            c[i] = theta * h * op.up[i];
            d[i] = u[i] + (1.0 - theta) * h * explicit_part;
        }
        a[0] = 0.0;
        b[0] = 1.0;
        c[0] = 0.0;
        d[0] = p.omega * psi(I0, S0t);
        // far field: slope of the undiscounted linear payoff carried back
        a[n - 1] = -1.0;
        b[n - 1] = 1.0;
        c[n - 1] = 0.0;
        d[n - 1] = (z[n - 1] - z[n - 2]) * std::exp((p.alpha - p.delta) * (T - t0));
        solve_tridiagonal(a, b, c, d, x);
        u.swap(x);
        op_next = std::move(op);
        t = t0;
    }
    return u;
}

namespace {

struct SliceProblem {
    Operator op;                 // -L including the S-transport diagonal
    double beta = 0.0;           // |b(S)| / h_S
    const std::vector<double>* neighbour = nullptr;
    double bottom = 0.0;         // omega psi(I, S)
};

// Penalized obstacle problem on one slice by policy iteration.
void solve_penalized(const SliceProblem& sp, const std::vector<double>& z, const std::vector<double>& P, double rho,
                     std::vector<double>& V)
{
    const std::size_t n = z.size();
    std::vector<char> grad(n, 0), imp(n, 0), grad_prev, imp_prev;
    std::vector<double> a(n), b(n), c(n), d(n), x;
    for (int it = 0; it < 100; ++it) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            grad[i] = 1.0 - (V[i] - V[i - 1]) / (z[i] - z[i - 1]) > 0.0;
            imp[i] = P[i] - V[i] > 0.0;
        }
        if (it > 0 && grad == grad_prev && imp == imp_prev) break;
        grad_prev = grad;
        imp_prev = imp;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hm = z[i] - z[i - 1];
            a[i] = sp.op.lo[i];
            b[i] = sp.op.di[i] + sp.beta;
            c[i] = sp.op.up[i];
            d[i] = sp.neighbour ? sp.beta * (*sp.neighbour)[i] : 0.0;
            if (grad[i]) {
                b[i] += rho / hm;
                a[i] -= rho / hm;
                d[i] += rho;
            }
            if (imp[i]) {
                b[i] += rho;
                d[i] += rho * P[i];
            }
        }
        a[0] = 0.0;
        b[0] = 1.0;
        c[0] = 0.0;
        d[0] = sp.bottom;
        a[n - 1] = -1.0;
        b[n - 1] = 1.0;
        c[n - 1] = 0.0;
        d[n - 1] = z[n - 1] - z[n - 2];
        solve_tridiagonal(a, b, c, d, x);
        V.swap(x);
    }
}

// Linear interpolation in S of the slice values at fixed zeta, where the
// slice `current` is taken from `cur` instead of the surface.
std::vector<double> slice_at(const std::vector<double>& S, const std::vector<double>& surface, std::size_t nz,
                             int current, const std::vector<double>& cur, double s)
{
    const int ns = static_cast<int>(S.size());
    int k = static_cast<int>(std::upper_bound(S.begin(), S.end(), s) - S.begin()) - 1;
    k = std::clamp(k, 0, ns - 2);
    const double w = std::clamp((s - S[k]) / (S[k + 1] - S[k]), 0.0, 1.0);
    auto row = [&](int j, std::size_t i) { return j == current ? cur[i] : surface[j * nz + i]; };
    std::vector<double> out(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        if (w <= 0.0) out[i] = row(k, i);
        else if (w >= 1.0) out[i] = row(k + 1, i);
        else out[i] = (1.0 - w) * row(k, i) + w * row(k + 1, i);
    }
    return out;
}

}  // namespace

PartialSolution penalty_solve(const ValidBankParams& pv, const PartialConfig& cfg)
{
    const BankParams& p = pv.get();
    if (!(p.noise_m > 0.0)) fail(ErrorCode::ZeroNoise, "the partially observed solver needs m > 0");
    if (!(p.delay_Delta > 0.0)) fail(ErrorCode::InvalidParameter, "the partially observed solver needs Delta > 0");
    if (cfg.aux_steps < 2) fail(ErrorCode::InvalidParameter, "aux_steps must be at least 2");
    if (cfg.grid.penalty_schedule.empty()) fail(ErrorCode::InvalidParameter, "empty penalty schedule");
    for (double r : cfg.grid.penalty_schedule)
        if (!(r > 0.0)) fail(ErrorCode::InvalidParameter, "penalties must be positive");

    const LiquidationRule rule = LiquidationRule::from(pv);
    PartialSolution sol;
    sol.line = degenerate_boundary_params(pv);
    const double S_line = sol.line.S_line;
    const FullSolution line_full = solve_full(line_params(pv));

    Axis zx = cfg.grid.x;
    if (zx.lo != 0.0) fail(ErrorCode::InvalidParameter, "the offset axis must start at 0");
    if (zx.hi <= 0.0) zx.hi = 5.0 * line_full.u2 - sol.line.kappa1;
    Axis sy = cfg.grid.y;
    if (sy.lo <= 0.0) sy.lo = S_line / 40.0;
    if (sy.hi <= 0.0) sy.hi = p.S_bar;
    GridSpec g = cfg.grid;
    g.x = zx;
    g.y = sy;
    validate_grid(g);
    if (!(sy.lo <= S_line && S_line <= sy.hi)) fail(ErrorCode::InvalidParameter, "S axis must contain the invariant line");

    sol.zeta = zx.nodes();
    const std::size_t nz = sol.zeta.size();
    // split at the line: the lower part gets about half the nodes
    const int ns_total = sy.n;
    int n_lo = (sy.lo < S_line) ? std::max(2, (ns_total + 1) / 2) : 1;
    int n_hi = (sy.hi > S_line) ? ns_total - n_lo + 1 : 1;
    if (n_lo == 1) n_hi = ns_total;
    if (n_hi == 1) n_lo = ns_total;
    for (int k = 0; k < n_lo - 1; ++k) sol.S.push_back(sy.lo + (S_line - sy.lo) * k / (n_lo - 1));
    sol.line_index = static_cast<int>(sol.S.size());
    sol.S.push_back(S_line);
    for (int k = 1; k < n_hi; ++k) sol.S.push_back(S_line + (sy.hi - S_line) * k / (n_hi - 1));
    const int ns = static_cast<int>(sol.S.size());

    sol.barrier.resize(ns);
    for (int j = 0; j < ns; ++j) sol.barrier[j] = rule.barrier(sol.S[j]);
    sol.V.assign(ns * nz, 0.0);
    sol.P.assign(ns * nz, 0.0);
    sol.region.assign(ns * nz, Region::Continuation);

    const double growth = p.alpha - p.mu;
    const double rate = p.delta - p.mu;

    auto solve_slice = [&](int j, int nb, std::vector<double> V) {
        const double S = sol.S[j];
        const double I = sol.barrier[j];
        const double b = j == sol.line_index ? 0.0 : drift_S(p, S);
        const double slope_I = rule.barrier_slope(S);
        SliceProblem sp;
        sp.op = build_operator(sol.zeta, I, vol_of(p, S), -slope_I * b, growth, rate);
        sp.bottom = p.omega * psi(I, S);
        std::vector<double> nbv;
        if (nb >= 0) {
            sp.beta = std::abs(b) / std::abs(sol.S[nb] - S);
            nbv.assign(sol.V.begin() + nb * nz, sol.V.begin() + (nb + 1) * nz);
            sp.neighbour = &nbv;
        }
        const double S_delta = riccati_variance(pv, S, p.delay_Delta);
        std::vector<double> P;
        for (double rho_p : cfg.grid.penalty_schedule) {
            bool done = false;
            for (int it = 0; it < cfg.grid.max_iter; ++it) {
                const auto W = slice_at(sol.S, sol.V, nz, j, V, j == sol.line_index ? S : S_delta);
                P = impulse_operator(pv, S, sol.zeta, W, cfg.aux_steps);
                std::vector<double> next = V;
                solve_penalized(sp, sol.zeta, P, rho_p, next);
                double change = 0.0;
                for (std::size_t i = 0; i < nz; ++i) change = std::max(change, std::abs(next[i] - V[i]));
                V.swap(next);
                ++sol.iterations;
                if (change < g.tol) {
                    done = true;
                    break;
                }
            }
            if (!done) fail(ErrorCode::NoConvergence, "impulse fixed point did not converge");
            sol.penalty = rho_p;
        }
        // final operator at the converged surface
        const auto W = slice_at(sol.S, sol.V, nz, j, V, j == sol.line_index ? S : S_delta);
        P = impulse_operator(pv, S, sol.zeta, W, cfg.aux_steps);
        std::copy(V.begin(), V.end(), sol.V.begin() + j * nz);
        std::copy(P.begin(), P.end(), sol.P.begin() + j * nz);

        // residuals of the three HJB terms
        for (std::size_t i = 1; i + 1 < nz; ++i) {
            double LV = -(sp.op.lo[i] * V[i - 1] + sp.op.di[i] * V[i] + sp.op.up[i] * V[i + 1]);
            if (sp.neighbour) LV += sp.beta * (nbv[i] - V[i]);
            const double r2 = 1.0 - (V[i] - V[i - 1]) / (sol.zeta[i] - sol.zeta[i - 1]);
            const double r3 = P[i] - V[i];
            sol.residual = std::max(sol.residual, std::abs(std::max({LV, r2, r3})));
        }
    };

    // invariant line first: the S-drift vanishes there, so it is a closed
    // 1-D problem; start from the fully observed value
    std::vector<double> guess(nz);
    for (std::size_t i = 0; i < nz; ++i) guess[i] = line_full.value(sol.line.kappa1 + sol.zeta[i]);
    solve_slice(sol.line_index, -1, guess);

    // characteristics in S run toward the line: march outward from it
    for (int j = sol.line_index - 1; j >= 0; --j)
        solve_slice(j, j + 1, std::vector<double>(sol.V.begin() + (j + 1) * nz, sol.V.begin() + (j + 2) * nz));
    for (int j = sol.line_index + 1; j < ns; ++j)
        solve_slice(j, j - 1, std::vector<double>(sol.V.begin() + (j - 1) * nz, sol.V.begin() + j * nz));

    const double tol = 1e-6;
    for (int j = 0; j < ns; ++j) {
        for (std::size_t i = 1; i < nz; ++i) {
            const std::size_t k = j * nz + i;
            const double slope = (sol.V[k] - sol.V[k - 1]) / (sol.zeta[i] - sol.zeta[i - 1]);
            if (sol.P[k] >= sol.V[k] - tol) sol.region[k] = Region::Recapitalization;
            else if (slope <= 1.0 + tol) sol.region[k] = Region::Dividend;
        }
        sol.region[j * nz] = sol.region[j * nz + 1];
    }
    return sol;
}

double PartialSolution::value(double Xhat, double S_val) const
{
    const int ns = static_cast<int>(S.size());
    if (S_val < S.front() || S_val > S.back()) fail(ErrorCode::InvalidInput, "S outside the solved range");
    int k = static_cast<int>(std::upper_bound(S.begin(), S.end(), S_val) - S.begin()) - 1;
    k = std::clamp(k, 0, ns - 2);
    const double w = (S_val - S[k]) / (S[k + 1] - S[k]);
    auto on_slice = [&](int j) {
        const double zt = Xhat - barrier[j];
        if (zt < -1e-12) fail(ErrorCode::InvalidInput, "point below the liquidation barrier");
        if (zt >= zeta.back()) return at(j, static_cast<int>(nz()) - 1) + (zt - zeta.back());
        int i = static_cast<int>(std::upper_bound(zeta.begin(), zeta.end(), zt) - zeta.begin()) - 1;
        i = std::clamp(i, 0, static_cast<int>(nz()) - 2);
        const double u = (zt - zeta[i]) / (zeta[i + 1] - zeta[i]);
        return (1.0 - u) * at(j, i) + u * at(j, i + 1);
    };
    if (w <= 0.0) return on_slice(k);
    if (w >= 1.0) return on_slice(k + 1);
    return (1.0 - w) * on_slice(k) + w * on_slice(k + 1);
}

BoundaryCurves extract_regions(const PartialSolution& sol, double tol)
{
    BoundaryCurves bc;
    const std::size_t nz = sol.nz();
    for (std::size_t j = 0; j < sol.S.size(); ++j) {
        bc.S.push_back(sol.S[j]);
        bc.I.push_back(sol.barrier[j]);
        const double* V = sol.V.data() + j * nz;
        const double* P = sol.P.data() + j * nz;
        // smallest X^ from which the slope stays at one
        std::size_t i2 = nz - 1;
        while (i2 > 1 && (V[i2 - 1] - V[i2 - 2]) / (sol.zeta[i2 - 1] - sol.zeta[i2 - 2]) <= 1.0 + tol) --i2;
        bc.u2.push_back(sol.barrier[j] + sol.zeta[i2 - 1]);
        double u1 = kNaN;
        for (std::size_t i = 1; i < nz; ++i)
            if (P[i] >= V[i] - tol) u1 = sol.barrier[j] + sol.zeta[i];
        bc.u1.push_back(u1);
    }
    return bc;
}

GrowthConstants growth_constants(const ValidBankParams& pv)
{
    const BankParams& p = pv.get();
    const LiquidationRule rule = LiquidationRule::from(pv);
    GrowthConstants g;
    // scan (0, S_bar] for the extremes of I and of omega psi(I) - I
    double I_max = rule.kappa_min, I_min = rule.kappa_min, excess = p.omega * psi(rule.kappa_min, 0.0) - rule.kappa_min;
    const int n = 2000;
    for (int k = 1; k <= n; ++k) {
        const double S = p.S_bar * k / n;
        const double I = rule.barrier(S);
        I_max = std::max(I_max, I);
        I_min = std::min(I_min, I);
        excess = std::max(excess, p.omega * psi(I, S) - I);
    }
    const double rate = p.delta - p.mu;
    g.C0 = std::max(I_max, p.kappa_min);
    g.C2 = 0.0;
    g.C1 = std::max({0.0, (p.alpha - p.mu - (p.delta - p.alpha) * I_min) / rate, excess});
    return g;
}

PolicyOutputs elasticity(const std::function<PolicyOutputs(double)>& run, double x0, double rel_step)
{
    if (!(rel_step > 0.0)) fail(ErrorCode::InvalidParameter, "rel_step must be positive");
    if (x0 == 0.0) fail(ErrorCode::DegenerateDenominator, "elasticity at a zero input");
    const double h = rel_step * std::abs(x0);
    const PolicyOutputs up = run(x0 + h), dn = run(x0 - h), mid = run(x0);
    auto e = [&](double a, double b, double m) {
        if (m == 0.0) return a == b ? 0.0 : kNaN;
        return ((a - b) / std::abs(m)) / (2.0 * h / std::abs(x0));
    };
    return {e(up.u2, dn.u2, mid.u2), e(up.u1, dn.u1, mid.u1), e(up.I, dn.I, mid.I), e(up.V, dn.V, mid.V)};
}

PolicyOutputs line_outputs(const ValidBankParams& p, double X_ref)
{
    const DegenerateLine d = degenerate_boundary_params(p);
    const FullSolution s = solve_full(line_params(p));
    return {s.u2, s.recapitalizes ? s.u1 : kNaN, d.kappa1, s.value(X_ref)};
}

PolicyOutputs line_elasticity(const ValidBankParams& p, SensParam q, double rel_step, double X_ref)
{
    auto field = [q](BankParams& b) -> double& {
        switch (q) {
        case SensParam::Sigma: return b.sigma;
        case SensParam::M: return b.noise_m;
        case SensParam::Omega: return b.omega;
        case SensParam::Rho: return b.rho;
        case SensParam::Delta: return b.delay_Delta;
        case SensParam::K: break;
        }
        return b.issue_cost_K;
    };
    BankParams base = p.get();
    const double x0 = field(base);
    return elasticity(
        [&](double x) {
            BankParams b = base;
            field(b) = x;
            return line_outputs(ValidBankParams::validate(b), X_ref);
        },
        x0, rel_step);
}

PolicyOutputs surface_outputs(const PartialSolution& sol, double S, double X_ref)
{
    const BoundaryCurves bc = extract_regions(sol);
    auto interp = [&](const std::vector<double>& y) {
        int k = static_cast<int>(std::upper_bound(bc.S.begin(), bc.S.end(), S) - bc.S.begin()) - 1;
        k = std::clamp(k, 0, static_cast<int>(bc.S.size()) - 2);
        const double w = (S - bc.S[k]) / (bc.S[k + 1] - bc.S[k]);
        return (1.0 - w) * y[k] + w * y[k + 1];
    };
    return {interp(bc.u2), interp(bc.u1), interp(bc.I), sol.value(X_ref, S)};
}

PolicyOutputs average_surface_elasticity(const PartialSolution& sol, double S0, double half_width, int n,
                                         double rel_step, double X_ref)
{
    PolicyOutputs acc;
    int used = 0;
    for (int k = 0; k < n; ++k) {
        const double S = S0 * (1.0 - half_width + 2.0 * half_width * (n == 1 ? 0.5 : static_cast<double>(k) / (n - 1)));
        const PolicyOutputs e = elasticity([&](double s) { return surface_outputs(sol, s, X_ref); }, S, rel_step);
        acc.u2 += e.u2;
        acc.u1 += e.u1;
        acc.I += e.I;
        acc.V += e.V;
        ++used;
    }
    return {acc.u2 / used, acc.u1 / used, acc.I / used, acc.V / used};
}

double barrier_elasticity(const LiquidationRule& rule, double S, double rel_step)
{
    return elasticity(
               [&](double s) {
                   PolicyOutputs o;
                   o.I = rule.barrier(s);
                   return o;
               },
               S, rel_step)
        .I;
}

double average_barrier_elasticity(const LiquidationRule& rule, double S0, double half_width, int n, double rel_step)
{
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double S = S0 * (1.0 - half_width + 2.0 * half_width * (n == 1 ? 0.5 : static_cast<double>(k) / (n - 1)));
        acc += barrier_elasticity(rule, S, rel_step);
    }
    return acc / n;
}

}  // namespace scc
