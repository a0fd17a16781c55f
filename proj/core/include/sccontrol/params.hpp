#pragma once

#include <limits>
#include <optional>
#include <vector>

namespace scc {

// Bank model constants. Rates are annual, X is equity per unit of debt.
struct BankParams {
    double mu = 0.0;             // debt growth
    double alpha = 0.0;          // expected asset return
    double sigma = 0.0;          // asset volatility
    double delta = 0.0;          // discount rate
    double omega = 0.0;          // liquidation recovery in [0,1]
    double kappa_min = 0.0;      // regulatory minimum equity-to-debt
    double issue_cost_K = 0.0;   // fixed issuance cost per unit debt
    double delay_Delta = 0.0;    // issuance delay (yr)
    double issue_cap_sbar = std::numeric_limits<double>::infinity();
    double noise_m = 0.0;        // accounting noise
    double rho = 0.0;            // noise/asset shock correlation
    double conf_a = 0.5;         // regulator confidence level
    double S_bar = 0.0;          // variance domain bound; <= 0 means default

    double stationary_variance() const { return noise_m * sigma * (1.0 - rho); }
};

// Only obtainable through validate(); solvers take this type so an
// unchecked record can never reach them.
class ValidBankParams {
public:
    static ValidBankParams validate(const BankParams& raw);
    static ValidBankParams validate(const ValidBankParams& p) { return p; }

    const BankParams& get() const { return p_; }
    const BankParams* operator->() const { return &p_; }

private:
    explicit ValidBankParams(const BankParams& p) : p_(p) {}
    BankParams p_;
};

inline ValidBankParams validate_bank_params(const BankParams& raw)
{
    return ValidBankParams::validate(raw);
}

// Life-cycle model constants.
struct RetireParams {
    double r = 0.0;
    double mu_stock = 0.0;
    double sigma_stock = 0.0;
    double gamma = 0.0;
    double B = 0.0;
    double beta = 0.0;
    double mu_income = 0.0;
    double sigma_income = 0.0;
    double recovery = 1.0;
    std::optional<double> power_nu;    // set: recovery ~ nu z^(nu-1) on [0,1]
    double jump_intensity = 0.0;
    double sigma_z = 0.0;
    double mean_reversion = 0.0;
    double z_bar = 0.0;
    std::optional<double> eis_psi;     // set: recursive utility
    std::optional<double> horizon_T;   // set: mandatory retirement age
};

class ValidRetireParams {
public:
    static ValidRetireParams validate(const RetireParams& raw);
    static ValidRetireParams validate(const ValidRetireParams& p) { return p; }

    const RetireParams& get() const { return p_; }
    const RetireParams* operator->() const { return &p_; }
    double theta() const { return theta_; }
    double K_bar() const { return K_bar_; }

private:
    ValidRetireParams(const RetireParams& p, double theta, double K_bar)
        : p_(p), theta_(theta), K_bar_(K_bar) {}
    RetireParams p_;
    double theta_;
    double K_bar_;
};

inline ValidRetireParams validate_retire_params(const RetireParams& raw)
{
    return ValidRetireParams::validate(raw);
}

enum class Stretch { Uniform, Geometric };

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 3;
    Stretch stretch = Stretch::Uniform;
    double ratio = 1.0;   // geometric: ratio between the last and first cell widths

    std::vector<double> nodes() const;
};

struct GridSpec {
    Axis x;
    Axis y;
    std::vector<double> penalty_schedule{1e3, 1e4, 1e5};
    double tol = 1e-8;
    int max_iter = 200;
};

void validate_grid(const GridSpec& g);

// Parameter sets used in the examples and acceptance checks.
BankParams bank_table_b();      // partially observed calibration
BankParams bank_table_a();      // fully observed calibration (sample mean)
BankParams bank_figure();       // fully observed figure parameters
RetireParams retire_baseline();

}  // namespace scc
