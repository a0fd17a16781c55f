#include "sccontrol/sim.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/filter.hpp"
#include "sccontrol/liquidation.hpp"
#include "sccontrol/parallel.hpp"
#include "sccontrol/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double interp_clamped(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    if (xs.size() == 1 || x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    const double a = ys[k], b = ys[k + 1];
    // an empty region on either side empties the interval
    if (std::isnan(a) || std::isnan(b)) return kNaN;
    const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return (1.0 - w) * a + w * b;
}

}  // namespace

BankPolicy BankPolicy::from(const FullSolution& s)
{
    BankPolicy b;
    b.label = "fully observed barriers";
    b.S = {0.0};
    b.u1 = {s.recapitalizes ? s.u1 : kNaN};
    b.u2 = {s.u2};
    return b;
}

BankPolicy BankPolicy::from(const PartialSolution& s)
{
    const BoundaryCurves bc = extract_regions(s);
    BankPolicy b;
    b.label = "partially observed surface";
    b.S = bc.S;
    b.u1 = bc.u1;
    b.u2 = bc.u2;
    return b;
}

BankPolicy BankPolicy::none()
{
    BankPolicy b;
    b.label = "no control";
    b.S = {0.0};
    b.u1 = {kNaN};
    b.u2 = {std::numeric_limits<double>::infinity()};
    return b;
}

double BankPolicy::order_barrier(double S_val) const { return interp_clamped(S, u1, S_val); }
double BankPolicy::dividend_barrier(double S_val) const { return interp_clamped(S, u2, S_val); }

BankParams bank_book_equity_figure()
{
    BankParams p = bank_table_b();
    p.mu = 0.035;
    p.alpha = 0.04;
    p.sigma = 0.05;
    p.noise_m = 0.03;
    p.rho = -0.3;
    return p;
}

PathBundle simulate_bank(const ValidBankParams& p, const BankPolicy& policy, const BankSimConfig& cfg)
{
    if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || cfg.n_paths < 1 || !(cfg.record_every >= cfg.dt))
        fail(ErrorCode::InvalidInput, "bank simulation needs dt > 0, horizon > 0, paths >= 1, record_every >= dt");
    const double Delta = p->delay_Delta;
    if (Delta > 0.0 && cfg.dt > Delta / 8.0 + 1e-15) fail(ErrorCode::InvalidInput, "dt must not exceed Delta/8");
    if (policy.S.empty() || policy.u1.size() != policy.S.size() || policy.u2.size() != policy.S.size())
        fail(ErrorCode::InvalidInput, "malformed bank policy");

    const double m = p->noise_m, sig = p->sigma, rho = p->rho, a = p->alpha, mu = p->mu;
    const bool observed = m == 0.0;
    const double S0 = observed ? 0.0 : (cfg.S0 >= 0.0 ? cfg.S0 : p->stationary_variance());
    const LiquidationRule rule = LiquidationRule::from(p);
    const double X0 = cfg.X0 >= 0.0 ? cfg.X0 : policy.dividend_barrier(S0);
    if (!std::isfinite(X0)) fail(ErrorCode::InvalidInput, "no starting ratio: give X0 for a policy without dividends");

    const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    const int every = std::max(1, static_cast<int>(std::llround(cfg.record_every / cfg.dt)));
    const int n_rec = steps / every + 1;

    PathBundle out;
    out.seed = cfg.seed;
    out.dt = cfg.dt;
    out.n_paths = cfg.n_paths;
    out.t.resize(n_rec);
    out.S.resize(n_rec);
    {
        double S = S0;
        for (int k = 0; k < n_rec; ++k) {
            out.t[k] = k * every * cfg.dt;
            out.S[k] = observed ? 0.0 : S;
            if (!observed) S = riccati_variance(p, S, every * cfg.dt);
        }
    }

    std::vector<BankPath> paths(cfg.n_paths);
    parallel_for(static_cast<std::size_t>(cfg.n_paths), [&](std::size_t n) {
        Rng rng(derive_seed(cfg.seed, n));
        BankPath& bp = paths[n];
        double D = 1.0;
        double A = 1.0 + X0, A_hat = A;   // true and expected total assets
        double M = 0.0;                   // log Y, Y the uncontrolled asset index
        FilterState fs{0.0, S0, 0.0};
        double pending_until = -1.0;      // delivery time of the open order
        double div_acc = 0.0, iss_acc = 0.0;
        bool alive = true;
        auto record = [&] {
            bp.E.push_back(A - D);
            bp.E_hat.push_back(A_hat - D);
            bp.D.push_back(D);
            bp.dividends.push_back(div_acc);
            bp.issued.push_back(iss_acc);
            div_acc = iss_acc = 0.0;
        };
        record();
        for (int s = 1; s <= steps && alive; ++s) {
            const double t = (s - 1) * cfg.dt;
            const double S = fs.s_var;
            const double Xh = (A_hat - D) / D;
            // actions on the state at the start of the step
            if (pending_until >= 0.0 && t >= pending_until - 1e-12) {
                const double target = policy.dividend_barrier(S);
                double amount = std::isfinite(target) ? std::max(target - Xh, 0.0) * D : 0.0;
                amount = std::min(amount, p->issue_cap_sbar * D);
                A += amount;
                A_hat += amount;
                iss_acc += amount;
                bp.delivery_times.push_back(t);
                pending_until = -1.0;
            }
            const bool pending = pending_until >= 0.0;
            const double Xh_now = (A_hat - D) / D;
            const double u1 = policy.order_barrier(S), u2 = policy.dividend_barrier(S);
            if (!pending && !std::isnan(u1) && Xh_now <= u1 && Delta > 0.0) {
                pending_until = t + Delta;
                bp.order_times.push_back(t);
            } else if (!pending && Xh_now > u2) {
                const double L = (Xh_now - u2) * D;
                A -= L;
                A_hat -= L;
                div_acc += L;
                bp.dividend_times.push_back(t);
            }

            // shocks: W drives assets, B the reporting noise
            const double n1 = rng.normal(), n2 = rng.normal();
            const double sq = std::sqrt(cfg.dt);
            const double dW = sq * n1;
            const double dB = sq * (rho * n1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * n2);
            const double M_new = M + (a - 0.5 * sig * sig) * cfg.dt + sig * dW;
            // assets move with the uncontrolled index between actions
            A *= std::exp(M_new - M);
            if (observed) {
                A_hat = A;
            } else {
                const double dZ = 0.5 * (M + M_new) * cfg.dt + m * dB;
                const FilterState next = kalman_step_continuous(fs, dZ, cfg.dt, p);
                A_hat *= std::exp(next.m_hat - fs.m_hat + 0.5 * (next.s_var - fs.s_var));
                fs = next;
            }
            M = M_new;
            D *= std::exp(mu * cfg.dt);

            const double X_check = (A_hat - D) / D;
            const double bar = observed ? p->kappa_min : rule.barrier(fs.s_var);
            if (X_check <= bar) {
                alive = false;
                bp.liquidation_time = s * cfg.dt;
            }
            if (s % every == 0) record();
        }
        // pad so every path has n_rec entries; liquidated paths repeat their last state
        while (static_cast<int>(bp.E.size()) < n_rec) {
            bp.E.push_back(bp.E.back());
            bp.E_hat.push_back(bp.E_hat.back());
            bp.D.push_back(bp.D.back());
            bp.dividends.push_back(0.0);
            bp.issued.push_back(0.0);
        }
    });

    out.tracking_sd.assign(n_rec, kNaN);
    for (int k = 0; k < n_rec; ++k) {
        double s1 = 0.0, s2 = 0.0;
        int cnt = 0;
        for (const auto& bp : paths) {
            if (bp.liquidation_time >= 0.0 && bp.liquidation_time <= out.t[k]) continue;
            const double d = std::log((bp.E_hat[k] + bp.D[k]) / (bp.E[k] + bp.D[k]));
            s1 += d;
            s2 += d * d;
            ++cnt;
        }
        if (cnt > 1) out.tracking_sd[k] = std::sqrt(std::max(0.0, (s2 - s1 * s1 / cnt) / (cnt - 1)));
    }
    double dsum = 0.0, isum = 0.0;
    for (const auto& bp : paths) {
        if (bp.liquidation_time >= 0.0) ++out.liquidated;
        for (double v : bp.dividends) dsum += v;
        for (double v : bp.issued) isum += v;
    }
    out.mean_dividends = dsum / cfg.n_paths;
    out.mean_issued = isum / cfg.n_paths;
    if (cfg.keep_paths) out.paths = std::move(paths);
    return out;
}

namespace {

struct PathResult {
    double time = 0.0;
    double share = 0.0;   // time-average stock share of financial wealth
    bool capped = false;
    bool immediate = false;
};

PathResult retire_path(const ValidRetireParams& p, const RetireSolution& pol, const RetireSimConfig& cfg,
                       const IncomeJumpSpec& jumps, std::uint64_t seed, bool flip)
{
    Rng rng(seed);
    const double sgn = flip ? -1.0 : 1.0;
    auto normal = [&] { return sgn * rng.normal(); };
    auto uniform = [&] {
        const double u = rng.uniform();
        return flip ? 1.0 - u : u;
    };
    const double r = p->r, s = p->sigma_stock, sz = p->sigma_z, sI = p->sigma_income;
    const double theta = p.theta(), al = p->mean_reversion, zb = p->z_bar, muI = p->mu_income;
    const double lam = p->jump_intensity, dt = cfg.dt, sq = std::sqrt(dt);
    const double var_I = (s - sz) * (s - sz) + sI * sI;
    const double p_jump = 1.0 - std::exp(-lam * dt);

    double W = cfg.w_over_I, I = 1.0, Z = cfg.z0;
    PathResult res;
    double share_time = 0.0;
    const int max_steps = static_cast<int>(std::ceil(cfg.cap / dt - 1e-9));
    for (int k = 0; k < max_steps; ++k) {
        const double N = W + I / r;
        const double xi = (I / r) / N;
        if (xi <= pol.xi_star_at(Z)) {
            res.time = k * dt;
            res.immediate = k == 0;
            res.share = k > 0 ? share_time / (k * dt) : 0.0;
            return res;
        }
        const RetireControls c = pol.controls_at(xi, Z);
        const double y = std::clamp(c.y, 0.0, 1.0 - xi) * N;
        const double cons = std::max(c.c, 0.0) * N;
        if (W > 0.0) share_time += std::min(y / W, 1.0) * dt;

        const double dB1 = sq * normal(), dB2 = sq * normal();
        W += (r * W - cons + I) * dt + y * s * (dB1 + theta * dt);
        W = std::max(W, 0.0);   // Euler overshoot past the no-borrowing floor
        const double drift = muI - al * (Z - zb);
        I *= std::exp((drift - 0.5 * var_I) * dt + (s - sz) * dB1 + sI * dB2);
        if (lam > 0.0 && uniform() < p_jump) {
            double kappa = jumps.kappa.front();
            if (jumps.mode == IncomeJumpSpec::Mode::Power) {
                // inverse CDF of nu kappa^(nu-1): kappa = U^(1/nu)
                kappa = std::pow(uniform(), 1.0 / jumps.nu);
            }
            I *= kappa;
        }
        Z += -al * (Z - zb) * dt - sz * dB1 + sI * dB2;
    }
    res.time = cfg.cap;
    res.share = share_time / cfg.cap;
    res.capped = true;
    return res;
}

}  // namespace

RetireStats simulate_retirement_policy(const ValidRetireParams& p, const RetireSolution& policy,
                                       const RetireSimConfig& cfg, const std::string& label)
{
    if (!(cfg.dt > 0.0) || cfg.n_paths < 1 || !(cfg.cap > 0.0) || !(cfg.w_over_I >= 0.0))
        fail(ErrorCode::InvalidInput, "retirement simulation needs dt > 0, paths >= 1, cap > 0, w/I >= 0");
    if (policy.xi.empty() || policy.z.empty()) fail(ErrorCode::InvalidInput, "empty retirement policy");
    const IncomeJumpSpec jumps = IncomeJumpSpec::from(p);
    std::vector<PathResult> res(cfg.n_paths);
    parallel_for(static_cast<std::size_t>(cfg.n_paths), [&](std::size_t n) {
        // antithetic pairs share a stream with mirrored draws
        const std::size_t stream = cfg.antithetic ? n / 2 : n;
        const bool flip = cfg.antithetic && (n % 2 == 1);
        res[n] = retire_path(p, policy, cfg, jumps, derive_seed(cfg.seed, stream), flip);
    });

    RetireStats st;
    st.label = label;
    st.paths = cfg.n_paths;
    double t1 = 0.0, share = 0.0;
    int working = 0;
    for (const auto& r : res) {
        t1 += r.time;
        if (r.capped) ++st.capped;
        if (r.immediate) ++st.immediate;
        else {
            share += r.share;
            ++working;
        }
    }
    st.expected_time = t1 / cfg.n_paths;
    st.expected_share = working > 0 ? share / working : 0.0;
    // pairs are the independent units under antithetic sampling
    std::vector<double> units;
    if (cfg.antithetic) {
        for (std::size_t n = 0; n + 1 < res.size(); n += 2) units.push_back(0.5 * (res[n].time + res[n + 1].time));
        if (res.size() % 2 == 1) units.push_back(res.back().time);
    } else {
        for (const auto& r : res) units.push_back(r.time);
    }
    if (units.size() > 1) {
        double mean = 0.0;
        for (double u : units) mean += u;
        mean /= static_cast<double>(units.size());
        double v = 0.0;
        for (double u : units) v += (u - mean) * (u - mean);
        v /= static_cast<double>(units.size() - 1);
        st.time_se = std::sqrt(v / static_cast<double>(units.size()));
    }
    return st;
}

RetireComparison simulate_retirement(const ValidRetireParams& p, const RetireSolution& policy,
                                     const RetireSolution& benchmark, const RetireSimConfig& cfg)
{
    if (benchmark.params.mean_reversion != 0.0)
        fail(ErrorCode::InvalidInput, "benchmark policy must be solved with mean_reversion = 0");
    RetireComparison c;
    c.policy = simulate_retirement_policy(p, policy, cfg, "cointegration");
    c.benchmark = simulate_retirement_policy(p, benchmark, cfg, "benchmark");
    return c;
}

}  // namespace scc
