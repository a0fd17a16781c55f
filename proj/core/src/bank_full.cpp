#include "sccontrol/bank_full.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/normal.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace scc {

namespace {

constexpr double kQuadTol = 1e-12;

// Plain bisection on a sign change; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F&& f, double lo, double hi, double tol)
{
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Passage {
    double x0;      // ln((1+X)/(1+kappa))
    double mu_m;    // alpha - mu - sigma^2/2
    double sigma;
};

Passage passage(double X, const ValidBankParams& p)
{
    return {std::log((1.0 + X) / (1.0 + p->kappa_min)), p->alpha - p->mu - 0.5 * p->sigma * p->sigma, p->sigma};
}

// log of ((1+kappa)/(1+X))^{2 mu_-/sigma^2}
double log_reflection(const Passage& q) { return -2.0 * q.mu_m * q.x0 / (q.sigma * q.sigma); }

double cdf_at(const Passage& q, double t)
{
    if (q.x0 <= 0.0) return 1.0;
    const double st = q.sigma * std::sqrt(t);
    const double a = (q.x0 + q.mu_m * t) / st;
    const double b = (-q.x0 + q.mu_m * t) / st;
    const double refl = std::exp(log_reflection(q)) * norm_cdf(b);
    return std::clamp(1.0 - norm_cdf(a) + refl, 0.0, 1.0);
}

double density_at(const Passage& q, double t)
{
    if (q.x0 <= 0.0 || t <= 0.0) return 0.0;
    const double st = q.sigma * std::sqrt(t);
    const double a = (q.x0 + q.mu_m * t) / st;
    const double b = (-q.x0 + q.mu_m * t) / st;
    const double t32 = t * std::sqrt(t);
    const double da = -q.x0 / (2.0 * q.sigma * t32) + q.mu_m / (2.0 * st);
    const double db = q.x0 / (2.0 * q.sigma * t32) + q.mu_m / (2.0 * st);
    const double refl_pdf = std::exp(log_reflection(q) - 0.5 * b * b) * (norm_pdf(0.0));
    return -norm_pdf(a) * da + refl_pdf * db;
}

// E[e^{-(delta-mu) tau} 1{tau <= Delta}] by quadrature of the passage density.
double discounted_passage(const Passage& q, double Delta, double r)
{
    if (q.x0 <= 0.0) return 1.0;
    if (Delta <= 0.0) return 0.0;
    // Mass below t_lo is taken as undiscounted; the error is at most r t_lo.
    const double t_lo = Delta * 1e-14;
    const auto f = [&](double s) {
        const double t = std::exp(s);
        return std::exp(-r * t) * density_at(q, t) * t;
    };
    double err = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, std::log(t_lo), std::log(Delta), 15, kQuadTol, &err);
    if (!(err <= 1e-9)) fail(ErrorCode::QuadratureFailure, "passage integral did not reach tolerance");
    return cdf_at(q, t_lo) + val;
}

struct HParts {
    double base = 0.0;   // terms independent of u2
    double surv = 0.0;   // e^{-(delta-mu) Delta} P[tau > Delta]
};

HParts h_parts(double X, const ValidBankParams& p)
{
    const double kappa = p->kappa_min;
    HParts h;
    if (X <= kappa) {
        h.base = p->omega * kappa;
        return h;
    }
    const double D = p->delay_Delta;
    const double r = p->delta - p->mu;
    const Passage q = passage(X, p);
    const double rebate = p->omega * kappa * discounted_passage(q, D, r);
    if (D <= 0.0) {
        h.base = 1.0 + X;
        h.surv = 1.0;
        return h;
    }
    const double sd = p->sigma * std::sqrt(D);
    const double mu_p = p->alpha - p->mu + 0.5 * p->sigma * p->sigma;
    const double disc_a = std::exp(-(p->delta - p->alpha) * D);
    const double t1 = disc_a * (1.0 + X) * norm_cdf((q.x0 + mu_p * D) / sd);
    const double t2 = -(1.0 + kappa) * disc_a
                      * std::exp(-2.0 * (p->alpha - p->mu) / (p->sigma * p->sigma) * q.x0)
                      * norm_cdf((-q.x0 + mu_p * D) / sd);
    h.base = t1 + t2 + rebate;
    h.surv = std::exp(-r * D) * (1.0 - cdf_at(q, D));
    return h;
}

// f1(u2;u2) - u2 - K - 1: value per unit of surviving ratio net of the top-up.
double top_up_constant(double u2, const Roots& r, const ValidBankParams& p)
{
    return candidate_value_f1(u2, u2, r) - u2 - p->issue_cost_K - 1.0;
}

double h_value(const HParts& h, double C) { return h.base + C * h.surv; }

struct Tangency {
    double u2 = 0.0;
    double u1 = 0.0;
    double gap = 0.0;   // max_X H - f1
};

// max over X in [kappa, u2] of H(X;u2) - f1(X;u2). The X-grid parts are
// cached because H depends on u2 only through the top-up constant.
class GapScanner {
public:
    GapScanner(const ValidBankParams& p, const Roots& r, double x_hi, int n) : p_(p), r_(r)
    {
        xs_.resize(n);
        parts_.resize(n);
        const double kappa = p->kappa_min;
        for (int i = 0; i < n; ++i) {
            xs_[i] = kappa + (x_hi - kappa) * i / (n - 1);
            parts_[i] = h_parts(xs_[i], p);
        }
    }

    Tangency max_gap(double u2) const
    {
        const double C = top_up_constant(u2, r_, p_);
        auto gap = [&](double X) { return h_value(h_parts(X, p_), C) - candidate_value_f1(X, u2, r_); };
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        int last = 0;
        for (std::size_t i = 0; i < xs_.size() && xs_[i] <= u2; ++i) {
            const double v = h_value(parts_[i], C) - candidate_value_f1(xs_[i], u2, r_);
            if (v > best_v) {
                best_v = v;
                best = static_cast<int>(i);
            }
            last = static_cast<int>(i);
        }
        Tangency t{u2, xs_[best], best_v};
        const double end_v = gap(u2);
        if (end_v > t.gap) t = {u2, u2, end_v};
        if (best > 0) {
            const double lo = xs_[best - 1];
            const double hi = best < last ? xs_[best + 1] : u2;
            const auto res = boost::math::tools::brent_find_minima([&](double X) { return -gap(X); }, lo, hi, 50);
            if (-res.second > t.gap) t = {u2, res.first, -res.second};
        }
        return t;
    }

private:
    ValidBankParams p_;
    Roots r_;
    std::vector<double> xs_;
    std::vector<HParts> parts_;
};

FullSolution make_solution(const ValidBankParams& p, const Roots& r, double u0)
{
    FullSolution s(p);
    s.roots = r;
    s.u0 = u0;
    s.conditions = check_conditions(p, u0);
    return s;
}

}  // namespace

Roots lambda_roots(const ValidBankParams& p)
{
    const double s2 = p->sigma * p->sigma;
    const double b = p->alpha - p->mu - 0.5 * s2;
    const double disc = std::sqrt(b * b + 2.0 * s2 * (p->delta - p->mu));
    // the product of the roots is -2(delta-mu)/sigma^2; use it to avoid
    // cancellation in the smaller root
    const double c = -2.0 * (p->delta - p->mu) / s2;
    Roots r;
    if (b <= 0.0) {
        r.lambda_plus = (-b + disc) / s2;
        r.lambda_minus = c / r.lambda_plus;
    } else {
        r.lambda_minus = (-b - disc) / s2;
        r.lambda_plus = c / r.lambda_minus;
    }
    return r;
}

double candidate_value_f1(double X, double u2, const Roots& r)
{
    const double lp = r.lambda_plus, lm = r.lambda_minus;
    const double y = (1.0 + X) / (1.0 + u2);
    return (1.0 + u2)
           * ((lp - 1.0) * std::pow(y, lm) / (lm * (lp - lm)) - (lm - 1.0) * std::pow(y, lp) / (lp * (lp - lm)));
}

double candidate_slope_f1(double X, double u2, const Roots& r)
{
    const double lp = r.lambda_plus, lm = r.lambda_minus;
    const double y = (1.0 + X) / (1.0 + u2);
    return ((lp - 1.0) * std::pow(y, lm - 1.0) - (lm - 1.0) * std::pow(y, lp - 1.0)) / (lp - lm);
}

double candidate_curvature_f1(double X, double u2, const Roots& r)
{
    const double lp = r.lambda_plus, lm = r.lambda_minus;
    const double y = (1.0 + X) / (1.0 + u2);
    return ((lp - 1.0) * (lm - 1.0) * (std::pow(y, lm - 2.0) - std::pow(y, lp - 2.0))) / ((lp - lm) * (1.0 + u2));
}

double candidate_value_f2(double X, double u2, const Roots& r)
{
    return candidate_value_f1(u2, u2, r) + (X - u2);
}

double hitting_cdf(double X, double t, const ValidBankParams& p)
{
    if (!(t > 0.0)) fail(ErrorCode::InvalidInput, "hitting_cdf needs t > 0");
    return cdf_at(passage(X, p), t);
}

double hitting_cdf_dt(double X, double t, const ValidBankParams& p)
{
    if (!(t > 0.0)) fail(ErrorCode::InvalidInput, "hitting_cdf_dt needs t > 0");
    return density_at(passage(X, p), t);
}

double hitting_cdf_dX(double X, double t, const ValidBankParams& p)
{
    if (!(t > 0.0)) fail(ErrorCode::InvalidInput, "hitting_cdf_dX needs t > 0");
    const Passage q = passage(X, p);
    const double st = q.sigma * std::sqrt(t);
    const double a = (q.x0 + q.mu_m * t) / st;
    const double b = (-q.x0 + q.mu_m * t) / st;
    const double E = std::exp(log_reflection(q));
    const double d_x0 = -norm_pdf(a) / st - 2.0 * q.mu_m / (q.sigma * q.sigma) * E * norm_cdf(b)
                        - E * norm_pdf(b) / st;
    return d_x0 / (1.0 + X);
}

double delayed_value_H(double X, double u2, const ValidBankParams& p)
{
    if (X < p->kappa_min) fail(ErrorCode::InvalidInput, "delayed_value_H needs X >= kappa_min");
    const Roots r = lambda_roots(p);
    return h_value(h_parts(X, p), top_up_constant(u2, r, p));
}

double delayed_slope_H(double X, double u2, const ValidBankParams& p)
{
    const double h = 1e-4 * (1.0 + X);
    auto H = [&](double x) { return delayed_value_H(x, u2, p); };
    if (X - 2.0 * h < p->kappa_min) {
        // one-sided, Richardson-extrapolated second-order differences
        auto d = [&](double hh) { return (-3.0 * H(X) + 4.0 * H(X + hh) - H(X + 2.0 * hh)) / (2.0 * hh); };
        return (4.0 * d(0.5 * h) - d(h)) / 3.0;
    }
    auto d = [&](double hh) { return (H(X + hh) - H(X - hh)) / (2.0 * hh); };
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

double solve_u0(const ValidBankParams& p)
{
    const double kappa = p->kappa_min;
    const double ok = p->omega * kappa;
    const double f_kk = (p->alpha - p->mu) / (p->delta - p->mu) * (1.0 + kappa);
    if (!(ok < f_kk)) fail(ErrorCode::NoBracket, "omega kappa must be below (alpha-mu)/(delta-mu)(1+kappa)");
    const Roots r = lambda_roots(p);
    auto g = [&](double th) { return candidate_value_f1(kappa, th, r) - ok; };
    double hi = kappa + 0.05;
    for (int i = 0; g(hi) > 0.0; ++i) {
        if (i > 60) fail(ErrorCode::NoBracket, "could not bracket u0");
        hi = kappa + 2.0 * (hi - kappa);
    }
    return bisect(g, kappa, hi, 1e-13);
}

bool ConditionsReport::all_pass() const
{
    return std::all_of(items.begin(), items.end(), [](const ConditionItem& c) { return c.pass; });
}

ConditionsReport check_conditions(const ValidBankParams& p, double u0)
{
    const Roots r = lambda_roots(p);
    const double kappa = p->kappa_min;
    const double D = p->delay_Delta;
    const double am = p->alpha - p->mu;
    const double dm = p->delta - p->mu;
    const double da = p->delta - p->alpha;
    ConditionsReport rep;

    const double hx = delayed_slope_H(kappa, u0, p);
    const double fx = candidate_slope_f1(kappa, u0, r);
    rep.items.push_back({"slope_at_kappa", hx > fx, hx, fx});

    const double mu_m = am - 0.5 * p->sigma * p->sigma;
    rep.items.push_back({"drift_nonnegative", mu_m >= 0.0, mu_m, 0.0});

    const double ok_rhs = std::exp(-da * D) * am / dm * (1.0 + kappa);
    rep.items.push_back({"liquidation_value_bound", p->omega * kappa < ok_rhs, ok_rhs, p->omega * kappa});

    const double u0_rhs = am / da + dm / da * (kappa - p->omega * kappa - p->issue_cost_K);
    rep.items.push_back({"u0_bound", u0 < u0_rhs, u0_rhs, u0});

    const double A = da / dm * std::exp(am * D);
    const double dp = D > 0.0 ? hitting_cdf_dX(kappa, D, p) : 0.0;
    const double rhs5 = (A * (1.0 + kappa) - da / dm * (1.0 + u0) - p->issue_cost_K) * dp;
    rep.items.push_back({"passage_slope_bound", A >= rhs5, A, rhs5});
    return rep;
}

double FullSolution::value(double X) const
{
    const double kappa = params->kappa_min;
    if (X < kappa) fail(ErrorCode::InvalidInput, "value needs X >= kappa_min");
    if (X >= u2) return candidate_value_f2(X, u2, roots);
    if (recapitalizes && X <= u1) return delayed_value_H(X, u2, params);
    if (!recapitalizes && X == kappa) return params->omega * kappa;
    return candidate_value_f1(X, u2, roots);
}

double FullSolution::slope(double X) const
{
    if (X >= u2) return 1.0;
    if (recapitalizes && X <= u1) return delayed_slope_H(X, u2, params);
    return candidate_slope_f1(X, u2, roots);
}

Action FullSolution::action(double X) const
{
    if (X >= u2) return {ActionKind::PayDividend, X - u2};
    if (recapitalizes && X <= u1) return {ActionKind::OrderEquity, 0.0};
    return {ActionKind::Wait, 0.0};
}

double FullSolution::top_up(double X) const { return std::max(u2 - X, 0.0); }

FullSolution no_recap_solution(const ValidBankParams& p)
{
    const double u0 = solve_u0(p);
    FullSolution s = make_solution(p, lambda_roots(p), u0);
    s.u1 = p->kappa_min;
    s.u2 = u0;
    s.recapitalizes = false;
    return s;
}

FullSolution solve_barriers(const ValidBankParams& p)
{
    const double u0 = solve_u0(p);
    if (p->issue_cap_sbar < u0) fail(ErrorCode::InvalidParameter, "issue_cap_sbar must be at least u0");
    const Roots r = lambda_roots(p);
    const double kappa = p->kappa_min;
    const GapScanner scan(p, r, u0, 2001);

    // u2 candidates: uniform in (kappa, u0) plus points crowding toward u0,
    // where the gap changes sign for typical calibrations.
    std::vector<double> grid;
    const int n_uni = 80;
    for (int i = 1; i < n_uni; ++i) grid.push_back(kappa + (u0 - kappa) * i / n_uni);
    for (int i = 0; i <= 60; ++i) grid.push_back(u0 - (u0 - kappa) / n_uni * std::pow(10.0, -8.0 * i / 60.0));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const double x_min = kappa + 1e-9 * (1.0 + kappa);
    std::vector<Tangency> found;
    double prev_u = grid.front();
    double prev_g = scan.max_gap(prev_u).gap;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double u = grid[i];
        const double g = scan.max_gap(u).gap;
        if ((prev_g < 0.0) != (g < 0.0)) {
            const double root = bisect([&](double x) { return scan.max_gap(x).gap; }, prev_u, u, 1e-12);
            const Tangency t = scan.max_gap(root);
            if (t.u1 > x_min && t.u1 < root) found.push_back(t);
        }
        prev_u = u;
        prev_g = g;
    }
    if (found.empty()) fail(ErrorCode::NoSolution, "no tangency pair in (kappa, u0)");

    // Several pairs: keep the one with the largest value on a test grid.
    FullSolution best = make_solution(p, r, u0);
    double best_score = -std::numeric_limits<double>::infinity();
    for (const Tangency& t : found) {
        FullSolution s = make_solution(p, r, u0);
        s.u1 = t.u1;
        s.u2 = t.u2;
        s.recapitalizes = true;
        double score = 0.0;
        for (int i = 0; i <= 50; ++i) score += s.value(kappa + (u0 - kappa) * i / 50.0);
        if (score > best_score) {
            best_score = score;
            best = s;
        }
    }
    best.tangency_count = static_cast<int>(found.size());
    return best;
}

FullSolution solve_full(const ValidBankParams& p)
{
    try {
        return solve_barriers(p);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSolution) throw;
        return no_recap_solution(p);
    }
}

}  // namespace scc
