#pragma once

#include "sccontrol/bank_full.hpp"
#include "sccontrol/bank_partial.hpp"
#include "sccontrol/params.hpp"
#include "sccontrol/retire.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scc {

// Dividend and issuance barriers on the expected ratio X^ = E^/D as
// functions of the filter variance S.
struct BankPolicy {
    std::string label;
    std::vector<double> S;    // increasing; a single node means constant barriers
    std::vector<double> u1;   // order equity at or below; NaN: never
    std::vector<double> u2;   // pay dividends above

    static BankPolicy from(const FullSolution& s);
    static BankPolicy from(const PartialSolution& s);
    static BankPolicy none();   // never acts

    double order_barrier(double S_val) const;
    double dividend_barrier(double S_val) const;
};

struct BankSimConfig {
    double horizon = 20.0;
    int n_paths = 500;
    double dt = 1.0 / 64.0;
    double record_every = 0.25;     // one accounting report
    std::uint64_t seed = 1;
    double X0 = -1.0;               // < 0: start at the dividend barrier
    double S0 = -1.0;               // < 0: stationary variance
    bool keep_paths = true;
};

struct BankPath {
    std::vector<double> E;          // true equity at record times
    std::vector<double> E_hat;      // expected equity
    std::vector<double> D;
    std::vector<double> dividends;  // paid since the previous record
    std::vector<double> issued;     // delivered since the previous record
    std::vector<double> order_times;
    std::vector<double> delivery_times;
    std::vector<double> dividend_times;   // steps with a dividend
    double liquidation_time = -1.0;       // < 0: survived the horizon
};

struct PathBundle {
    std::vector<double> t;          // record times
    std::vector<double> S;          // filter variance at record times
    std::vector<BankPath> paths;    // empty unless keep_paths
    std::uint64_t seed = 0;
    double dt = 0.0;
    int n_paths = 0;
    int liquidated = 0;
    // cross-path sd of log((E^ + D)/(E + D)) at each record time, alive paths only
    std::vector<double> tracking_sd;
    double mean_dividends = 0.0;    // undiscounted, per path
    double mean_issued = 0.0;
};

// Needs dt <= Delta/8 when there is a delay.
PathBundle simulate_bank(const ValidBankParams& p, const BankPolicy& policy, const BankSimConfig& cfg);

// Fully observed figure with noisy reports: table-B frictions with the
// figure's drift, volatility and noise.
BankParams bank_book_equity_figure();

struct RetireStats {
    std::string label;
    double expected_time = 0.0;     // years, capped
    double time_se = 0.0;           // standard error of the mean
    double expected_share = 0.0;    // stock share of financial wealth before retirement
    int paths = 0;
    int capped = 0;                 // paths still working at the cap
    int immediate = 0;              // paths that retire at t = 0
};

struct RetireSimConfig {
    double w_over_I = 10.0;
    double z0 = 0.0;
    int n_paths = 10000;
    double dt = 1.0 / 12.0;
    double cap = 250.0;
    std::uint64_t seed = 1;
    bool antithetic = false;
};

// Simulates (W, I, Z) under the dynamics of p and applies one policy's
// feedback controls until its retirement boundary is reached.
RetireStats simulate_retirement_policy(const ValidRetireParams& p, const RetireSolution& policy,
                                       const RetireSimConfig& cfg, const std::string& label);

struct RetireComparison {
    RetireStats policy;
    RetireStats benchmark;
};

// Both policies face the same shocks (same seed).
RetireComparison simulate_retirement(const ValidRetireParams& p, const RetireSolution& policy,
                                     const RetireSolution& benchmark, const RetireSimConfig& cfg);

}  // namespace scc
