#pragma once

#include "sccontrol/filter.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace scc {

struct Particle {
    double M = 0.0;        // sampled log assets
    Theta theta;
    double a_filt = 0.0;   // per-particle Kalman belief used as proposal
    double P_filt = 0.0;
};

struct ParticleCloud {
    std::vector<Particle> particles;
    std::vector<double> weights;   // normalized
    int step = 0;
    bool resampled = false;   // set by the last pf_step
    double effective_size() const;
    Theta mean_theta() const;
};

// How the importance weights are formed.
// Exact: target p(y_k | M_k, M_{k-1}) p(M_k | M_{k-1}) over the density the
// state is actually drawn from, N(a_{k|k}, P_{k|k}).
// Printed: p(y|M) p(M|M_prev) / p(M | M_prev, y_k) under the transformed
// dynamics, with the printed Kalman recursion as proposal. Kept for
// comparison; it does not correct for the sampling density.
enum class PfWeights { Exact, Printed };

struct PriorBox {
    double lo;
    double hi;
};

struct PfConfig {
    int n_particles = 2000;
    double a_pf = 0.98;
    double resample_threshold = 2.0 / 3.0;
    PriorBox alpha{-0.1, 0.4};
    PriorBox sigma{0.005, 0.25};
    PriorBox m{0.001, 0.15};
    PriorBox rho{-0.95, 0.95};
    double P0 = -1.0;        // initial state variance; < 0 means 4 m sigma (1 - rho) per particle
    PfWeights weights = PfWeights::Exact;
    std::uint64_t seed = 1;
};

void validate_pf_config(const PfConfig& cfg);

// Draws the prior cloud and absorbs the first observation.
ParticleCloud pf_init(double obs0, const PfConfig& cfg);

// One filtering step (k >= 1) on observation obs, with obs_prev = M^ac_{k-1}.
ParticleCloud pf_step(const ParticleCloud& cloud, double obs_prev, double obs, const PfConfig& cfg);

// Kernel shrinkage toward the weighted mean: theta <- a theta + (1-a) mean +
// N(0, (1-a^2) Q), then projection to sigma, m >= 1e-4 and |rho| <= 0.99.
void jitter(ParticleCloud& cloud, double a_pf, std::uint64_t seed);

// Systematic resampling with a single offset u in [0, 1/N).
std::vector<int> systematic_resample(const std::vector<double>& weights, double u);

struct EstimateResult {
    Theta theta_hat;          // quarterly posterior mean
    Theta theta_annual;       // alpha x4, sigma and m x2, rho unchanged
    double loglik = 0.0;      // exact Kalman log-likelihood at theta_hat
    std::vector<Theta> history;   // posterior mean after every step
    int resample_count = 0;
    double final_ess = 0.0;
};

EstimateResult estimate_theta(const std::vector<double>& series, const PfConfig& cfg);

Theta annualize(const Theta& quarterly);

struct OlsFit {
    double a = 0.0;
    double b = 0.0;
    double r_squared = 0.0;
};

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace scc
