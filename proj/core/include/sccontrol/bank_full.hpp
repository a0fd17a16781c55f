#pragma once

#include "sccontrol/params.hpp"

#include <string>
#include <vector>

namespace scc {

struct Roots {
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
};

// Roots of sigma^2/2 l(l-1) + (alpha-mu) l - (delta-mu) = 0.
Roots lambda_roots(const ValidBankParams& p);

// Solution of the continuation ODE with V' = 1 and V'' = 0 at u2.
double candidate_value_f1(double X, double u2, const Roots& r);
double candidate_slope_f1(double X, double u2, const Roots& r);
double candidate_curvature_f1(double X, double u2, const Roots& r);
double candidate_value_f2(double X, double u2, const Roots& r);

// First passage of X below kappa_min for the uncontrolled ratio:
// P[tau <= t | X_0 = X], with its t- and X-derivatives.
double hitting_cdf(double X, double t, const ValidBankParams& p);
double hitting_cdf_dt(double X, double t, const ValidBankParams& p);
double hitting_cdf_dX(double X, double t, const ValidBankParams& p);

// Value of ordering new equity now, delivered after the delay, when the
// continuation value afterwards is f1/f2 with dividend barrier u2.
double delayed_value_H(double X, double u2, const ValidBankParams& p);
double delayed_slope_H(double X, double u2, const ValidBankParams& p);

// Dividend barrier of the problem without recapitalization:
// f1(kappa; u0) = omega kappa. Throws NoBracket when
// omega kappa >= (alpha-mu)/(delta-mu) (1+kappa).
double solve_u0(const ValidBankParams& p);

struct ConditionItem {
    std::string name;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;   // item passes when lhs > rhs (or >= where the check is weak)
};

struct ConditionsReport {
    std::vector<ConditionItem> items;
    bool all_pass() const;
};

ConditionsReport check_conditions(const ValidBankParams& p, double u0);

enum class ActionKind { OrderEquity, Wait, PayDividend };

struct Action {
    ActionKind kind = ActionKind::Wait;
    double amount = 0.0;   // dividend paid for PayDividend
};

struct FullSolution {
    explicit FullSolution(const ValidBankParams& p) : params(p) {}

    Roots roots;
    double u0 = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    bool recapitalizes = false;   // false: the no-issuance solution with u2 = u0
    int tangency_count = 0;       // number of (u1,u2) pairs found
    ValidBankParams params;
    ConditionsReport conditions;

    double value(double X) const;
    double slope(double X) const;
    Action action(double X) const;
    // Issuance amount when an order placed earlier completes at ratio X.
    double top_up(double X) const;
};

// Throws NoSolution when no tangency pair exists in (kappa, u0).
FullSolution solve_barriers(const ValidBankParams& p);

// solve_barriers, falling back to the dividend-only solution on NoSolution.
FullSolution solve_full(const ValidBankParams& p);

FullSolution no_recap_solution(const ValidBankParams& p);

inline double value_function(double X, const FullSolution& s) { return s.value(X); }
inline Action optimal_action(double X, const FullSolution& s) { return s.action(X); }

}  // namespace scc
