#pragma once

#include <string>
#include <vector>

namespace scc::cli {

struct PanelRow {
    std::string bank_id;
    std::string quarter;     // "1999-Q3"
    int quarter_index = 0;   // 4 * year + (q - 1)
    double total_assets = 0.0;
    double tier1_equity = 0.0;
    double dividends = 0.0;
    double equity_issuance = 0.0;
    double market_equity = 0.0;

    double debt() const { return total_assets - tier1_equity; }
};

// Moment estimates from one bank's quarterly series: mean and sample sd of
// simple total-asset returns, mean debt growth. Annual figures scale the
// mean by 4 and the sd by 2.
struct BankMoments {
    int n_returns = 0;
    double alpha_q = 0.0;
    double sigma_q = 0.0;
    double mu_q = 0.0;
    double alpha = 0.0;
    double sigma = 0.0;
    double mu = 0.0;
    double mean_equity_ratio = 0.0;   // tier 1 over debt
    double mean_dividends = 0.0;
    double mean_issuance = 0.0;
    double mean_market_equity = 0.0;
    bool degenerate = false;          // fewer than two returns or zero sd
};

struct BankPanel {
    std::string bank_id;
    std::vector<PanelRow> rows;
    std::vector<double> log_assets;
    std::vector<double> debt;
    BankMoments moments;
};

struct PanelDiagnostic {
    int line = 0;   // 1-based file line; the header is line 1
    std::string message;
};

struct Panel {
    std::vector<BankPanel> banks;   // in order of first appearance
    std::vector<PanelDiagnostic> diagnostics;
    int rows_read = 0;
    int rows_rejected = 0;
};

// Reads a comma-separated panel with a mandatory header naming the columns
// bank_id, quarter, total_assets, tier1_equity, dividends, equity_issuance,
// market_equity (any order). Bad rows are skipped and reported; with
// fail_fast the first one throws instead.
Panel ingest_panel(const std::string& path, bool fail_fast = false);

BankMoments panel_moments(const std::vector<PanelRow>& rows);

}  // namespace scc::cli
