#pragma once

#include "sccontrol/bank_full.hpp"
#include "sccontrol/liquidation.hpp"
#include "sccontrol/params.hpp"

#include <functional>
#include <vector>

namespace scc {

// Grid for the partially observed problem. x is the offset zeta = X^ - I(S)
// above the liquidation barrier (lo must be 0; hi <= 0 picks 5 u2 - kappa1
// from the degenerate line), y is the variance axis S (lo <= 0 picks
// S_line/40, hi <= 0 picks S_bar). The S axis is split at the invariant
// line, which is always a node.
struct PartialConfig {
    GridSpec grid;
    int aux_steps = 64;   // time steps of the auxiliary PDE behind the impulse operator
};

PartialConfig default_partial_config();

enum class Region : unsigned char { Continuation, Dividend, Recapitalization };

struct PartialSolution {
    std::vector<double> zeta;     // shared offset grid
    std::vector<double> S;        // increasing; S[line_index] = S_line
    int line_index = 0;
    std::vector<double> barrier;  // I(S_j)
    // Row-major by slice: V[j * nz + i] at X^ = I(S_j) + zeta_i.
    std::vector<double> V;
    std::vector<double> P;        // impulse operator at the converged surface
    std::vector<Region> region;
    DegenerateLine line;
    int iterations = 0;           // outer fixed-point sweeps, summed over slices
    double residual = 0.0;        // max over interior nodes of |max of the three HJB terms|
    double penalty = 0.0;         // last penalty used

    std::size_t nz() const { return zeta.size(); }
    double at(int j, int i) const { return V[static_cast<std::size_t>(j) * zeta.size() + i]; }
    double X(int j, int i) const { return barrier[j] + zeta[i]; }
    // Bilinear in (zeta, S); slope one beyond the grid in zeta.
    double value(double Xhat, double S_val) const;
};

PartialSolution penalty_solve(const ValidBankParams& p, const PartialConfig& cfg = default_partial_config());

// Impulse operator for the slice at variance S0: order equity now, receive it
// after the delay. W_delta(zeta) is the value at S(Delta) on the shared grid.
// Returns P V on the same grid.
std::vector<double> impulse_operator(const ValidBankParams& p, double S0, const std::vector<double>& zeta,
                                     const std::vector<double>& W_delta, int steps);

// Fully observed parameters with the degenerate-line barrier and recovery.
ValidBankParams line_params(const ValidBankParams& p);

struct BoundaryCurves {
    std::vector<double> S;
    std::vector<double> I;
    std::vector<double> u1;   // NaN where the recapitalization region is empty
    std::vector<double> u2;
};

BoundaryCurves extract_regions(const PartialSolution& sol, double tol = 1e-6);

// Constants of the linear growth bounds X^ - C0 <= V^ <= X^ + C1 + C2 S on
// S in (0, S_bar].
struct GrowthConstants {
    double C0 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

GrowthConstants growth_constants(const ValidBankParams& p);

// Policy outputs whose sensitivities are reported.
struct PolicyOutputs {
    double u2 = 0.0;
    double u1 = 0.0;
    double I = 0.0;
    double V = 0.0;
};

// Central-difference elasticity (d out/|out|) / (d x/|x|) of every output.
PolicyOutputs elasticity(const std::function<PolicyOutputs(double)>& run, double x0, double rel_step);

enum class SensParam { Sigma, M, Omega, Rho, Delta, K };

// Outputs on the invariant line (fully observed with kappa1, omega1), V at
// X_ref.
PolicyOutputs line_outputs(const ValidBankParams& p, double X_ref);
PolicyOutputs line_elasticity(const ValidBankParams& p, SensParam q, double rel_step, double X_ref);

// Outputs of a solved surface at variance S, V at X_ref.
PolicyOutputs surface_outputs(const PartialSolution& sol, double S, double X_ref);
// Mean of point elasticities in S over n points spread over
// [S0 (1 - half_width), S0 (1 + half_width)].
PolicyOutputs average_surface_elasticity(const PartialSolution& sol, double S0, double half_width, int n,
                                         double rel_step, double X_ref);

// Elasticity of the liquidation barrier in S, and its average over the same
// kind of window.
double barrier_elasticity(const LiquidationRule& rule, double S, double rel_step);
double average_barrier_elasticity(const LiquidationRule& rule, double S0, double half_width, int n,
                                  double rel_step);

}  // namespace scc
