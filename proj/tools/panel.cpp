#include "panel.hpp"

#include "sccontrol/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace scc::cli {

namespace {

constexpr std::array<const char*, 7> kColumns = {"bank_id",         "quarter",      "total_assets", "tier1_equity",
                                                 "dividends",       "equity_issuance", "market_equity"};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& v)
{
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && p == end && std::isfinite(v);
}

// "1999-Q3" -> 4 * 1999 + 2
bool parse_quarter(const std::string& s, int& index)
{
    if (s.size() != 7 || s[4] != '-' || s[5] != 'Q' || s[6] < '1' || s[6] > '4') return false;
    int year = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + 4, year);
    if (ec != std::errc() || p != s.data() + 4) return false;
    index = 4 * year + (s[6] - '1');
    return true;
}

double mean(const std::vector<double>& x)
{
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace

BankMoments panel_moments(const std::vector<PanelRow>& rows)
{
    BankMoments m;
    std::vector<double> ret, growth, ratio, div, iss, mkt;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        ratio.push_back(rows[k].tier1_equity / rows[k].debt());
        div.push_back(rows[k].dividends);
        iss.push_back(rows[k].equity_issuance);
        mkt.push_back(rows[k].market_equity);
        if (k == 0) continue;
        ret.push_back(rows[k].total_assets / rows[k - 1].total_assets - 1.0);
        growth.push_back(rows[k].debt() / rows[k - 1].debt() - 1.0);
    }
    m.n_returns = static_cast<int>(ret.size());
    m.alpha_q = mean(ret);
    m.mu_q = mean(growth);
    if (ret.size() >= 2) {
        double ss = 0.0;
        for (double r : ret) ss += (r - m.alpha_q) * (r - m.alpha_q);
        m.sigma_q = std::sqrt(ss / static_cast<double>(ret.size() - 1));
    }
    m.alpha = 4.0 * m.alpha_q;
    m.mu = 4.0 * m.mu_q;
    m.sigma = 2.0 * m.sigma_q;
    m.mean_equity_ratio = mean(ratio);
    m.mean_dividends = mean(div);
    m.mean_issuance = mean(iss);
    m.mean_market_equity = mean(mkt);
    m.degenerate = ret.size() < 2 || m.sigma_q == 0.0;
    return m;
}

Panel ingest_panel(const std::string& path, bool fail_fast)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidInput, "cannot open panel " + path);

    Panel panel;
    auto reject = [&](int line, const std::string& msg) {
        if (fail_fast) fail(ErrorCode::InvalidInput, path + ": line " + std::to_string(line) + ": " + msg);
        panel.diagnostics.push_back({line, msg});
        ++panel.rows_rejected;
    };

    std::string line;
    int line_no = 0;
    std::array<int, kColumns.size()> col{};
    col.fill(-1);
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) fail(ErrorCode::InvalidInput, path + ": missing header row");
    {
        auto head = split(line);
        if (!head.empty() && head[0].rfind("\xEF\xBB\xBF", 0) == 0) head[0] = head[0].substr(3);
        width = head.size();
        for (std::size_t c = 0; c < kColumns.size(); ++c)
            for (std::size_t h = 0; h < head.size(); ++h)
                if (head[h] == kColumns[c]) col[c] = static_cast<int>(h);
        for (std::size_t c = 0; c < kColumns.size(); ++c)
            if (col[c] < 0) fail(ErrorCode::InvalidInput, path + ": header lacks column '" + kColumns[c] + "'");
    }

    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++panel.rows_read;
        auto cells = split(line);
        if (cells.size() != width) {
            reject(line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(cells.size()));
            continue;
        }
        PanelRow r;
        r.bank_id = cells[col[0]];
        r.quarter = cells[col[1]];
        if (r.bank_id.empty()) {
            reject(line_no, "empty bank_id");
            continue;
        }
        if (!parse_quarter(r.quarter, r.quarter_index)) {
            reject(line_no, "bad quarter '" + r.quarter + "' (want yyyy-Qn)");
            continue;
        }
        double* fields[] = {&r.total_assets, &r.tier1_equity, &r.dividends, &r.equity_issuance, &r.market_equity};
        bool ok = true;
        for (int f = 0; f < 5 && ok; ++f)
            if (!parse_number(cells[col[2 + f]], *fields[f])) {
                reject(line_no, std::string("bad number in ") + kColumns[2 + f] + ": '" + cells[col[2 + f]] + "'");
                ok = false;
            }
        if (!ok) continue;
        if (r.total_assets <= 0.0) {
            reject(line_no, "total_assets must be positive");
            continue;
        }
        if (r.tier1_equity >= r.total_assets) {
            reject(line_no, "tier1_equity must be below total_assets");
            continue;
        }
        auto it = index.find(r.bank_id);
        if (it != index.end()) {
            const auto& prev = panel.banks[it->second].rows.back();
            if (r.quarter_index <= prev.quarter_index) {
                reject(line_no, "quarter " + r.quarter + " does not follow " + prev.quarter + " for bank " + r.bank_id);
                continue;
            }
            panel.banks[it->second].rows.push_back(r);
        } else {
            index.emplace(r.bank_id, panel.banks.size());
            BankPanel b;
            b.bank_id = r.bank_id;
            b.rows.push_back(r);
            panel.banks.push_back(std::move(b));
        }
    }
    if (panel.banks.empty()) fail(ErrorCode::InvalidInput, path + ": no valid rows");

    for (auto& b : panel.banks) {
        for (const auto& r : b.rows) {
            b.log_assets.push_back(std::log(r.total_assets));
            b.debt.push_back(r.debt());
        }
        b.moments = panel_moments(b.rows);
    }
    return panel;
}

}  // namespace scc::cli
