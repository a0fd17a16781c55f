#pragma once

#include "sccontrol/params.hpp"

#include <vector>

namespace scc {

// The working value is written as
//   V(w, I, z) = K_bar^-gamma (w + I/r)^(1-gamma) e^((1-gamma) u(xi, z)) / (1-gamma)
// with xi = (I/r) / (w + I/r). Retiring gives u = ln B + ln(1 - xi).

struct MertonConstants {
    double theta = 0.0;
    double K_bar = 0.0;     // consumption-wealth ratio after retirement
    double G_coef = 0.0;    // G(w) = G_coef w^(1-gamma)
    double K_ez = 0.0;      // recursive-utility rate psi beta + (1-psi)(r + theta^2/(2 gamma)); K_bar without psi
};

MertonConstants merton_constants(const ValidRetireParams& p);

// Post-jump income fraction kappa: either fixed, or drawn from the density
// nu z^(nu-1) on [0,1] and integrated by Gauss-Legendre in kappa (1 <= nu <= n)
// or in t = kappa^nu otherwise.
struct IncomeJumpSpec {
    enum class Mode { Fixed, Power };
    Mode mode = Mode::Fixed;
    double nu = 0.0;
    std::vector<double> kappa;     // nodes
    std::vector<double> weight;    // sum to one

    static IncomeJumpSpec from(const ValidRetireParams& p, int n_nodes = 32);
};

struct RetireControls {
    double y = 0.0;         // stock holding per unit of w + I/r
    double c = 0.0;         // consumption per unit of w + I/r
    bool degenerate = false;   // h denominator not negative; best endpoint used
};

// Feedback controls from u and its derivatives at (xi, z).
RetireControls optimal_controls(double u, double u_xi, double u_xixi, double u_z, double u_xiz, double xi, double z,
                                const ValidRetireParams& p);

// Default mesh: xi in [0,1] with 201 nodes, z in z_bar +- 8 sigma_z with 161.
GridSpec default_retire_grid(const RetireParams& p);

struct RetireSolution {
    RetireParams params;
    bool recursive = false;
    double age = 0.0;                   // finite-horizon snapshots only
    std::vector<double> xi;
    std::vector<double> z;
    // Row-major by z: index j * nxi() + i.
    std::vector<double> u;
    std::vector<double> y;
    std::vector<double> c;
    std::vector<unsigned char> retired;
    std::vector<double> xi_star;        // retirement boundary per z (retire for xi <= xi_star)
    std::vector<double> threshold;      // w*/I per z; +inf if only xi = 0 retires
    std::vector<double> target;         // non-participation target w/I per z; NaN if none
    double residual = 0.0;
    double penalty = 0.0;
    int iterations = 0;
    int degenerate_nodes = 0;

    std::size_t nxi() const { return xi.size(); }
    std::size_t nz() const { return z.size(); }
    std::size_t idx(std::size_t i, std::size_t j) const { return j * xi.size() + i; }
    double obstacle(double x) const;
    double u_at(double x, double zz) const;             // bilinear
    RetireControls controls_at(double x, double zz) const;
    double xi_star_at(double zz) const;                 // linear in z
    int z_index(double zz) const;                       // nearest node
};

// Stationary problem, expected utility.
RetireSolution penalty_solve_retire(const ValidRetireParams& p, const GridSpec& grid);
RetireSolution penalty_solve_retire(const ValidRetireParams& p);

// Stationary problem with the recursive aggregator; needs eis_psi != 1.
RetireSolution epstein_zin_solve(const ValidRetireParams& p, const GridSpec& grid);
RetireSolution epstein_zin_solve(const ValidRetireParams& p);

struct FiniteHorizonConfig {
    double dt = 0.25;
    double snapshot_every = 5.0;   // years between stored surfaces
    int max_policy_iter = 30;
};

struct FiniteHorizonSolution {
    double T = 0.0;
    std::vector<double> z;
    std::vector<double> ages;               // one per time level, 0 .. T
    std::vector<double> threshold;          // [level * nz + j]
    std::vector<double> target;             // [level * nz + j]
    std::vector<RetireSolution> snapshots;  // ascending age, always includes age 0

    double threshold_at(std::size_t level, double zz) const;
};

// Backward march from forced retirement at horizon_T.
FiniteHorizonSolution finite_horizon_solve(const ValidRetireParams& p, const GridSpec& grid,
                                           const FiniteHorizonConfig& cfg = {});

// E_kappa[(1 + (kappa-1) xi)^(1-gamma) / (1-gamma) e^((1-gamma)(u(xi') - u(xi)))] at
// xi' = kappa xi / (1 + (kappa-1) xi), u interpolated linearly in xi.
double jump_expectation(const RetireSolution& sol, double xi, double z, const IncomeJumpSpec& spec);

// V_I / V_w at wealth w and income I.
double implicit_human_capital(const RetireSolution& sol, double w, double income, double z);

// w/I <-> xi.
double xi_of(double w_over_I, double r);
double w_over_I_of(double xi, double r);

// Consumption per unit income along the z-row nearest to zz, and its slope in
// w/I between neighbouring work-region nodes (ordered by increasing w/I).
struct MpcCurve {
    std::vector<double> w;     // midpoints
    std::vector<double> mpc;
};
MpcCurve mpc_curve(const RetireSolution& sol, double zz);

}  // namespace scc
