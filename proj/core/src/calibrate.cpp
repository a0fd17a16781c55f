#include "sccontrol/calibrate.hpp"

#include "sccontrol/errors.hpp"
#include "sccontrol/normal.hpp"
#include "sccontrol/parallel.hpp"
#include "sccontrol/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scc {

namespace {

constexpr double kMinScale = 1e-4;
constexpr double kMaxRho = 0.99;

enum Stream : std::uint64_t { kInit = 1, kPropagate = 2, kJitter = 3, kResample = 4 };

std::array<double, 4> as_array(const Theta& t) { return {t.alpha, t.sigma, t.m, t.rho}; }
Theta from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

void project(Theta& t)
{
    t.sigma = std::max(t.sigma, kMinScale);
    t.m = std::max(t.m, kMinScale);
    t.rho = std::clamp(t.rho, -kMaxRho, kMaxRho);
}

double default_p0(const Theta& t) { return 4.0 * t.m * t.sigma * (1.0 - t.rho); }

// Normalizes log-weights in place into weights; throws if nothing survives.
void normalize(const std::vector<double>& logw, std::vector<double>& w)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logw)
        if (!std::isnan(v)) mx = std::max(mx, v);
    if (!std::isfinite(mx)) fail(ErrorCode::DegenerateCloud, "all particle weights vanished");
    w.resize(logw.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        w[i] = std::isnan(logw[i]) ? 0.0 : std::exp(logw[i] - mx);
        s += w[i];
    }
    for (double& v : w) v /= s;
}

// Exact Kalman update of a particle's belief with observation y, from the
// filtered moments of the previous quarter.
void kalman_exact(Particle& p, double y)
{
    const Theta& t = p.theta;
    const double a = p.a_filt + t.alpha - 0.5 * t.sigma * t.sigma;
    const double P = p.P_filt + t.sigma * t.sigma;
    const double cross = t.rho * t.sigma * t.m;
    const double F = P + t.m * t.m + 2.0 * cross;
    const double cov = P + cross;
    p.a_filt = a + cov / F * (y - a);
    p.P_filt = std::max(P - cov * cov / F, 0.0);
}

}  // namespace

double ParticleCloud::effective_size() const
{
    double s = 0.0;
    for (double w : weights) s += w * w;
    return s > 0.0 ? 1.0 / s : 0.0;
}

Theta ParticleCloud::mean_theta() const
{
    std::array<double, 4> m{};
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const auto a = as_array(particles[i].theta);
        for (int j = 0; j < 4; ++j) m[j] += weights[i] * a[j];
    }
    return from_array(m);
}

void validate_pf_config(const PfConfig& cfg)
{
    if (cfg.n_particles < 100) fail(ErrorCode::InvalidParameter, "n_particles must be at least 100");
    if (!(cfg.a_pf > 0.0 && cfg.a_pf < 1.0)) fail(ErrorCode::InvalidParameter, "a_pf must lie in (0,1)");
    if (!(cfg.resample_threshold > 0.0 && cfg.resample_threshold <= 1.0))
        fail(ErrorCode::InvalidParameter, "resample_threshold must lie in (0,1]");
    for (const PriorBox* b : {&cfg.alpha, &cfg.sigma, &cfg.m, &cfg.rho})
        if (!(b->hi >= b->lo)) fail(ErrorCode::InvalidParameter, "prior box needs hi >= lo");
    if (cfg.sigma.lo <= 0.0 || cfg.m.lo <= 0.0) fail(ErrorCode::InvalidParameter, "sigma and m priors must be positive");
    if (cfg.rho.lo <= -1.0 || cfg.rho.hi >= 1.0) fail(ErrorCode::InvalidParameter, "rho prior must lie inside (-1,1)");
}

ParticleCloud pf_init(double obs0, const PfConfig& cfg)
{
    validate_pf_config(cfg);
    const int N = cfg.n_particles;
    ParticleCloud c;
    c.particles.resize(N);
    std::vector<double> logw(N);
    parallel_for(N, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, kInit, i));
        Particle& p = c.particles[i];
        p.theta = {rng.uniform(cfg.alpha.lo, cfg.alpha.hi), rng.uniform(cfg.sigma.lo, cfg.sigma.hi),
                   rng.uniform(cfg.m.lo, cfg.m.hi), rng.uniform(cfg.rho.lo, cfg.rho.hi)};
        // prior N(obs0, P0) on M_0; the first observation only updates it
        const double P0 = cfg.P0 >= 0.0 ? cfg.P0 : default_p0(p.theta);
        const double F = P0 + p.theta.m * p.theta.m;
        p.a_filt = obs0;
        p.P_filt = P0 - P0 * P0 / F;
        p.M = p.a_filt + std::sqrt(p.P_filt) * rng.normal();
        logw[i] = log_normal_density(obs0, obs0, F);
    });
    normalize(logw, c.weights);
    return c;
}

ParticleCloud pf_step(const ParticleCloud& cloud, double obs_prev, double obs, const PfConfig& cfg)
{
    const int N = static_cast<int>(cloud.particles.size());
    ParticleCloud c = cloud;
    c.step = cloud.step + 1;
    c.resampled = false;
    std::vector<double> logw(N);
    parallel_for(N, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, kPropagate + 8 * static_cast<std::uint64_t>(c.step), i));
        Particle& p = c.particles[i];
        const Theta& t = p.theta;
        const double drift = t.alpha - 0.5 * t.sigma * t.sigma;
        const double M_prev = p.M;
        double lw = std::log(cloud.weights[i]);

        if (cfg.weights == PfWeights::Exact) {
            kalman_exact(p, obs);
            p.M = p.a_filt + std::sqrt(p.P_filt) * rng.normal();
            // y_k | M_k, M_{k-1}: the accounting error given the asset shock
            const double mean_y = p.M + t.rho * t.m / t.sigma * (p.M - M_prev - drift);
            const double var_y = t.m * t.m * (1.0 - t.rho * t.rho);
            lw += log_normal_density(obs, mean_y, var_y) + log_normal_density(p.M, M_prev + drift, t.sigma * t.sigma);
            if (p.P_filt > 0.0) lw -= log_normal_density(p.M, p.a_filt, p.P_filt);
        } else {
            const double d = 1.0 + t.sigma * t.rho / t.m;
            if (d == 0.0) fail(ErrorCode::SingularTransform, "1 + sigma rho / m vanishes");
            // printed recursion: predict through the transformed dynamics
            // with the previous report, then update with the current one
            const double a_pred = p.a_filt / d + t.sigma * t.rho * obs_prev / (t.m + t.sigma * t.rho) + drift / d;
            const double P_pred = (p.P_filt + t.sigma * t.sigma * (1.0 - t.rho * t.rho)) / (d * d);
            const double F = P_pred + t.m * t.m;
            p.a_filt = a_pred + P_pred / F * (obs - a_pred);
            p.P_filt = P_pred - P_pred * P_pred / F;
            p.M = a_pred + std::sqrt(P_pred) * rng.normal();
            const double mean_q = (M_prev + drift + t.sigma * t.rho * obs / t.m) / d;
            const double var_q = t.sigma * t.sigma * (1.0 - t.rho * t.rho) / (d * d);
            lw += log_normal_density(obs, p.M, t.m * t.m) + log_normal_density(p.M, M_prev + drift, t.sigma * t.sigma)
                  - log_normal_density(p.M, mean_q, var_q);
        }
        logw[i] = lw;
    });
    normalize(logw, c.weights);

    jitter(c, cfg.a_pf, derive_seed(cfg.seed, kJitter, c.step));

    if (c.effective_size() < cfg.resample_threshold * N) {
        Rng rng(derive_seed(cfg.seed, kResample, c.step));
        const auto idx = systematic_resample(c.weights, rng.uniform(0.0, 1.0 / N));
        std::vector<Particle> next(N);
        for (int i = 0; i < N; ++i) next[i] = c.particles[idx[i]];
        c.particles = std::move(next);
        std::fill(c.weights.begin(), c.weights.end(), 1.0 / N);
        c.resampled = true;
    }
    return c;
}

void jitter(ParticleCloud& cloud, double a_pf, std::uint64_t seed)
{
    const std::size_t N = cloud.particles.size();
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < N; ++i) {
        const auto a = as_array(cloud.particles[i].theta);
        mean += cloud.weights[i] * Eigen::Vector4d(a[0], a[1], a[2], a[3]);
    }
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    for (std::size_t i = 0; i < N; ++i) {
        const auto a = as_array(cloud.particles[i].theta);
        const Eigen::Vector4d d = Eigen::Vector4d(a[0], a[1], a[2], a[3]) - mean;
        Q += cloud.weights[i] * d * d.transpose();
    }
    // The scaled covariance keeps the cloud's spread fixed while shrinking
    // toward the mean; an unscaled Q would inflate it every step.
    Eigen::Matrix4d L = Eigen::Matrix4d::Zero();
    if (Q.trace() > 0.0) {
        Eigen::LLT<Eigen::Matrix4d> llt(Q + 1e-14 * Eigen::Matrix4d::Identity());
        if (llt.info() == Eigen::Success) L = std::sqrt(1.0 - a_pf * a_pf) * Eigen::Matrix4d(llt.matrixL());
    }
    parallel_for(N, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        auto a = as_array(cloud.particles[i].theta);
        Eigen::Vector4d z(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        const Eigen::Vector4d noise = L * z;
        for (int j = 0; j < 4; ++j) a[j] = a_pf * a[j] + (1.0 - a_pf) * mean[j] + noise[j];
        Theta t = from_array(a);
        project(t);
        cloud.particles[i].theta = t;
    });
}

std::vector<int> systematic_resample(const std::vector<double>& weights, double u)
{
    const int N = static_cast<int>(weights.size());
    std::vector<int> idx(N);
    double cum = weights[0];
    int j = 0;
    for (int i = 0; i < N; ++i) {
        const double target = u + static_cast<double>(i) / N;
        while (cum <= target && j < N - 1) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

Theta annualize(const Theta& q) { return {4.0 * q.alpha, 2.0 * q.sigma, 2.0 * q.m, q.rho}; }

EstimateResult estimate_theta(const std::vector<double>& series, const PfConfig& cfg)
{
    if (series.size() < 2) fail(ErrorCode::InvalidInput, "series needs at least two observations");
    ParticleCloud c = pf_init(series[0], cfg);
    EstimateResult res;
    res.history.reserve(series.size());
    res.history.push_back(c.mean_theta());
    for (std::size_t k = 1; k < series.size(); ++k) {
        c = pf_step(c, series[k - 1], series[k], cfg);
        res.resample_count += c.resampled;
        res.history.push_back(c.mean_theta());
    }
    res.theta_hat = c.mean_theta();
    res.theta_annual = annualize(res.theta_hat);
    res.final_ess = c.effective_size();
    const double P0 = cfg.P0 >= 0.0 ? cfg.P0 : default_p0(res.theta_hat);
    res.loglik = log_likelihood(series, res.theta_hat, series[0], P0);
    return res;
}

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) fail(ErrorCode::InvalidInput, "x and y differ in length");
    if (x.size() < 3) fail(ErrorCode::InvalidInput, "need at least 3 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) fail(ErrorCode::DegenerateRegressor, "regressor has zero variance");
    OlsFit f;
    f.b = sxy / sxx;
    f.a = my - f.b * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
    return f;
}

}  // namespace scc
