#include "commands.hpp"

#include "panel.hpp"

#include "sccontrol/bank_full.hpp"
#include "sccontrol/bank_partial.hpp"
#include "sccontrol/calibrate.hpp"
#include "sccontrol/config.hpp"
#include "sccontrol/errors.hpp"
#include "sccontrol/filter.hpp"
#include "sccontrol/liquidation.hpp"
#include "sccontrol/parallel.hpp"
#include "sccontrol/params.hpp"
#include "sccontrol/retire.hpp"
#include "sccontrol/rng.hpp"
#include "sccontrol/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifndef SCC_VERSION
#define SCC_VERSION "unknown"
#endif

namespace scc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bad configuration: reported with exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }

class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> cells)
    {
        if (cells.size() != header_.size()) throw std::logic_error("csv row width mismatch");
        rows_.push_back(std::move(cells));
    }
    std::string str() const
    {
        std::ostringstream o;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
            o << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return o.str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Ctx {
    fs::path out;
    bool strict = false;
    json result = json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;
    json inputs = json::array();

    void warn(const std::string& w) { warnings.push_back(w); }
    void write(const std::string& name, const std::string& content)
    {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) fail(ErrorCode::InvalidInput, "cannot write " + (out / name).string());
        f << content;
        outputs.push_back(name);
    }
    void csv(const std::string& name, const Table& t) { write(name, t.str()); }
    void input(const std::string& path)
    {
        std::error_code ec;
        const auto size = fs::file_size(path, ec);
        inputs.push_back({{"path", path}, {"bytes", ec ? json(nullptr) : json(size)}});
    }
};

// ---- config helpers

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object()) throw UsageError(where + " must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (const char* key : keys) ok = ok || k == key;
        if (!ok) throw UsageError("unknown key '" + k + "' in " + where);
    }
}

template <class T>
T opt(const json& j, const char* key, T def)
{
    if (!j.contains(key) || j.at(key).is_null()) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("bad value for '") + key + "'");
    }
}

bool has(const json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

json sub(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return json::object();
    return j.at(key);
}

BankParams bank_preset(const std::string& name)
{
    if (name == "table_b") return bank_table_b();
    if (name == "table_a") return bank_table_a();
    if (name == "figure") return bank_figure();
    if (name == "book_equity_figure") return bank_book_equity_figure();
    throw UsageError("unknown bank preset '" + name + "' (table_b, table_a, figure, book_equity_figure)");
}

RetireParams retire_preset(const std::string& name)
{
    if (name == "baseline") return retire_baseline();
    throw UsageError("unknown retire preset '" + name + "' (baseline)");
}

// A preset name, or an object with an optional "preset" base and overrides.
template <class P, class Preset>
json resolve_params(const json& raw, const char* key, const char* def, Preset preset)
{
    const json v = has(raw, key) ? raw.at(key) : json(def);
    P p;
    if (v.is_string()) {
        p = preset(v.get<std::string>());
    } else if (v.is_object()) {
        json o = v;
        std::string base = def;
        if (o.contains("preset")) {
            base = opt<std::string>(o, "preset", def);
            o.erase("preset");
        }
        p = preset(base);
        from_json(o, p);
    } else {
        throw UsageError(std::string("'") + key + "' must be a preset name or an object");
    }
    return json(p);
}

json resolve_bank(const json& raw, const char* def) { return resolve_params<BankParams>(raw, "bank", def, bank_preset); }
json resolve_retire(const json& raw, const char* def)
{
    return resolve_params<RetireParams>(raw, "retire", def, retire_preset);
}

json overlay_grid(const json& raw, GridSpec g)
{
    if (has(raw, "grid")) from_json(raw.at("grid"), g);
    return json(g);
}

GridSpec grid_of(const json& cfg) { return cfg.at("grid").get<GridSpec>(); }
BankParams bank_of(const json& cfg) { return cfg.at("bank").get<BankParams>(); }
RetireParams retire_of(const json& cfg) { return cfg.at("retire").get<RetireParams>(); }

json theta_json(const Theta& t) { return {{"alpha", t.alpha}, {"sigma", t.sigma}, {"m", t.m}, {"rho", t.rho}}; }

Theta theta_of(const json& j)
{
    allow_keys(j, {"alpha", "sigma", "m", "rho"}, "theta");
    Theta t;
    t.alpha = opt(j, "alpha", 0.0);
    t.sigma = opt(j, "sigma", 0.0);
    t.m = opt(j, "m", 0.0);
    t.rho = opt(j, "rho", 0.0);
    return t;
}

json pf_json(const PfConfig& c)
{
    auto box = [](const PriorBox& b) { return json::array({b.lo, b.hi}); };
    return {{"n_particles", c.n_particles},
            {"a_pf", c.a_pf},
            {"resample_threshold", c.resample_threshold},
            {"prior_alpha", box(c.alpha)},
            {"prior_sigma", box(c.sigma)},
            {"prior_m", box(c.m)},
            {"prior_rho", box(c.rho)},
            {"P0", c.P0},
            {"weights", c.weights == PfWeights::Exact ? "exact" : "printed"}};
}

PfConfig pf_of(const json& j)
{
    allow_keys(j,
               {"n_particles", "a_pf", "resample_threshold", "prior_alpha", "prior_sigma", "prior_m", "prior_rho",
                "P0", "weights"},
               "pf");
    PfConfig c;
    c.n_particles = opt(j, "n_particles", c.n_particles);
    c.a_pf = opt(j, "a_pf", c.a_pf);
    c.resample_threshold = opt(j, "resample_threshold", c.resample_threshold);
    auto box = [&](const char* k, PriorBox& b) {
        const auto v = opt(j, k, std::vector<double>{b.lo, b.hi});
        if (v.size() != 2) throw UsageError(std::string(k) + " must be [lo, hi]");
        b = {v[0], v[1]};
    };
    box("prior_alpha", c.alpha);
    box("prior_sigma", c.sigma);
    box("prior_m", c.m);
    box("prior_rho", c.rho);
    c.P0 = opt(j, "P0", c.P0);
    const auto w = opt<std::string>(j, "weights", "exact");
    if (w == "exact")
        c.weights = PfWeights::Exact;
    else if (w == "printed")
        c.weights = PfWeights::Printed;
    else
        throw UsageError("pf.weights must be 'exact' or 'printed'");
    return c;
}

std::string abs_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// ---- filter

json resolve_filter(const json& raw)
{
    allow_keys(raw, {"bank", "S0", "t_max", "n_t", "series", "panel", "bank_id", "theta", "a0", "P0", "seed"},
               "filter config");
    json c;
    c["bank"] = resolve_bank(raw, "table_b");
    const BankParams b = bank_of(c);
    c["S0"] = opt(raw, "S0", 2.0 * b.stationary_variance());
    c["t_max"] = opt(raw, "t_max", 10.0);
    c["n_t"] = opt(raw, "n_t", 201);
    if (has(raw, "series") && has(raw, "panel")) throw UsageError("give either series or panel, not both");
    c["series"] = has(raw, "series") ? json(opt<std::vector<double>>(raw, "series", {})) : json(nullptr);
    c["panel"] = has(raw, "panel") ? json(abs_path(opt<std::string>(raw, "panel", ""))) : json(nullptr);
    c["bank_id"] = has(raw, "bank_id") ? raw.at("bank_id") : json(nullptr);
    c["theta"] = has(raw, "theta") ? theta_json(theta_of(raw.at("theta")))
                                       : theta_json({b.alpha / 4.0, b.sigma / 2.0, b.noise_m / 2.0, b.rho});
    // null: first observation, and m^2
    c["a0"] = has(raw, "a0") ? json(opt(raw, "a0", 0.0)) : json(nullptr);
    c["P0"] = has(raw, "P0") ? json(opt(raw, "P0", 0.0)) : json(nullptr);
    return c;
}

std::vector<double> panel_series(const std::string& path, const json& bank_id, Ctx& ctx)
{
    ctx.input(path);
    const Panel panel = ingest_panel(path, ctx.strict);
    for (const auto& d : panel.diagnostics) ctx.warn("panel line " + std::to_string(d.line) + ": " + d.message);
    if (bank_id.is_null()) return panel.banks.front().log_assets;
    const std::string id = bank_id.is_string() ? bank_id.get<std::string>() : bank_id.dump();
    for (const auto& b : panel.banks)
        if (b.bank_id == id) return b.log_assets;
    fail(ErrorCode::InvalidInput, "bank " + id + " not in panel");
}

void exec_filter(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidBankParams::validate(bank_of(cfg));
    const double S_line = p->stationary_variance();
    const double S0 = cfg.at("S0").get<double>();
    const double t_max = cfg.at("t_max").get<double>();
    const int n_t = cfg.at("n_t").get<int>();
    if (n_t < 2 || !(t_max > 0.0) || S0 < 0.0) fail(ErrorCode::InvalidInput, "filter needs n_t >= 2, t_max > 0, S0 >= 0");
    const auto rule = LiquidationRule::from(p);

    Table t({"t", "S", "S_line", "I"});
    double S_end = S0;
    for (int k = 0; k < n_t; ++k) {
        const double tt = t_max * k / (n_t - 1);
        S_end = riccati_variance(p, S0, tt);
        t.add({num(tt), num(S_end), num(S_line), num(S_end > 0.0 ? rule.barrier(S_end) : p->kappa_min)});
    }
    ctx.csv("riccati.csv", t);
    ctx.result["S_line"] = S_line;
    ctx.result["I_line"] = S_line > 0.0 ? rule.barrier(S_line) : p->kappa_min;
    ctx.result["S0"] = S0;
    ctx.result["S_end"] = S_end;

    std::vector<double> series;
    if (cfg.at("series").is_array())
        series = cfg.at("series").get<std::vector<double>>();
    else if (cfg.at("panel").is_string())
        series = panel_series(cfg.at("panel").get<std::string>(), cfg.at("bank_id"), ctx);
    if (series.empty()) return;

    const Theta th = theta_of(cfg.at("theta"));
    const double a0 = cfg.at("a0").is_null() ? series.front() : cfg.at("a0").get<double>();
    const double P0 = cfg.at("P0").is_null() ? th.m * th.m : cfg.at("P0").get<double>();
    const auto run = run_discrete_filter(series, th, a0, P0);
    Table f({"k", "obs", "a_filt", "P_filt", "innovation", "innovation_var"});
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        const auto& s = run.steps[k];
        f.add({num(k), num(series[k]), num(s.a_filt), num(s.P_filt), num(s.v), num(s.F)});
    }
    ctx.csv("filter.csv", f);
    ctx.result["filter"] = {{"n", series.size()}, {"loglik", run.loglik}, {"a0", a0}, {"P0", P0}};
}

// ---- calibrate

json resolve_calibrate(const json& raw)
{
    allow_keys(raw, {"panel", "bank_ids", "simulate", "pf", "run_pf", "min_quarters_pf", "seed"}, "calibrate config");
    json c;
    if (has(raw, "panel") && has(raw, "simulate")) throw UsageError("give either panel or simulate, not both");
    if (has(raw, "panel")) {
        c["panel"] = abs_path(opt<std::string>(raw, "panel", ""));
        c["bank_ids"] = has(raw, "bank_ids") ? raw.at("bank_ids") : json(nullptr);
        c["simulate"] = nullptr;
    } else {
        const json s = sub(raw, "simulate");
        allow_keys(s, {"theta", "n"}, "simulate");
        c["panel"] = nullptr;
        c["bank_ids"] = nullptr;
        c["simulate"] = {{"theta", has(s, "theta") ? theta_json(theta_of(s.at("theta")))
                                                        : theta_json({0.04, 0.05, 0.03, -0.30})},
                         {"n", opt(s, "n", 400)}};
    }
    c["pf"] = pf_json(pf_of(sub(raw, "pf")));
    c["run_pf"] = opt(raw, "run_pf", true);
    c["min_quarters_pf"] = opt(raw, "min_quarters_pf", 8);
    return c;
}

void exec_calibrate(const json& cfg, std::uint64_t seed, Ctx& ctx)
{
    struct Item {
        std::string id;
        std::vector<double> series;
        const BankMoments* moments = nullptr;
    };
    std::vector<Item> items;
    Panel panel;
    SignalSeries simulated;
    if (cfg.at("panel").is_string()) {
        const std::string path = cfg.at("panel").get<std::string>();
        ctx.input(path);
        panel = ingest_panel(path, ctx.strict);
        for (const auto& d : panel.diagnostics) ctx.warn("panel line " + std::to_string(d.line) + ": " + d.message);
        ctx.result["panel"] = {{"rows_read", panel.rows_read},
                               {"rows_rejected", panel.rows_rejected},
                               {"banks", panel.banks.size()}};
        std::vector<std::string> wanted;
        if (cfg.at("bank_ids").is_array())
            for (const auto& v : cfg.at("bank_ids")) wanted.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        for (const auto& b : panel.banks) {
            bool keep = wanted.empty();
            for (const auto& w : wanted) keep = keep || w == b.bank_id;
            if (keep) items.push_back({b.bank_id, b.log_assets, &b.moments});
        }
        if (items.empty()) fail(ErrorCode::InvalidInput, "no requested bank in panel");
    } else {
        const Theta truth = theta_of(cfg.at("simulate").at("theta"));
        const int n = cfg.at("simulate").at("n").get<int>();
        simulated = simulate_signal_series(truth, n, seed);
        items.push_back({"simulated", simulated.Mac, nullptr});
        Table s({"k", "M", "M_ac"});
        for (std::size_t k = 0; k < simulated.M.size(); ++k) s.add({num(k), num(simulated.M[k]), num(simulated.Mac[k])});
        ctx.csv("signal.csv", s);
        ctx.result["truth"] = theta_json(truth);
    }

    const PfConfig base = pf_of(cfg.at("pf"));
    const bool run_pf = cfg.at("run_pf").get<bool>();
    const std::size_t min_q = cfg.at("min_quarters_pf").get<std::size_t>();
    Table est({"bank_id", "n_obs", "alpha_mom", "sigma_mom", "mu_mom", "moments_degenerate", "alpha", "sigma", "m", "rho",
               "loglik", "resamples", "final_ess"});
    Table hist({"bank_id", "step", "alpha", "sigma", "m", "rho"});
    json banks = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Item& it = items[i];
        json b{{"bank_id", it.id}, {"n_obs", it.series.size()}};
        std::vector<std::string> row{it.id, num(it.series.size())};
        if (it.moments) {
            const BankMoments& m = *it.moments;
            b["moments"] = {{"alpha", m.alpha},          {"sigma", m.sigma},
                            {"mu", m.mu},                {"alpha_q", m.alpha_q},
                            {"sigma_q", m.sigma_q},      {"mu_q", m.mu_q},
                            {"n_returns", m.n_returns},  {"mean_equity_ratio", m.mean_equity_ratio},
                            {"degenerate", m.degenerate}};
            if (m.degenerate) ctx.warn("bank " + it.id + ": degenerate return moments");
            row.insert(row.end(), {num(m.alpha), num(m.sigma), num(m.mu), m.degenerate ? "1" : "0"});
        } else {
            row.insert(row.end(), {"", "", "", ""});
        }
        if (run_pf && it.series.size() >= min_q) {
            PfConfig pc = base;
            pc.seed = derive_seed(seed, i + 1);
            const EstimateResult r = estimate_theta(it.series, pc);
            b["pf"] = {{"theta_quarterly", theta_json(r.theta_hat)},
                       {"theta_annual", theta_json(r.theta_annual)},
                       {"loglik", r.loglik},
                       {"resamples", r.resample_count},
                       {"final_ess", r.final_ess},
                       {"n_particles", pc.n_particles},
                       {"seed", pc.seed}};
            const Theta& a = r.theta_annual;
            row.insert(row.end(), {num(a.alpha), num(a.sigma), num(a.m), num(a.rho), num(r.loglik),
                                   num(r.resample_count), num(r.final_ess)});
            for (std::size_t k = 0; k < r.history.size(); ++k) {
                const Theta h = annualize(r.history[k]);
                hist.add({it.id, num(k), num(h.alpha), num(h.sigma), num(h.m), num(h.rho)});
            }
        } else {
            if (run_pf) ctx.warn("bank " + it.id + ": too few quarters for the particle filter");
            row.insert(row.end(), {"", "", "", "", "", "", ""});
        }
        est.add(std::move(row));
        banks.push_back(std::move(b));
    }
    ctx.result["banks"] = std::move(banks);
    ctx.csv("estimates.csv", est);
    if (run_pf) ctx.csv("pf_history.csv", hist);
}

// ---- bank, fully observed

json resolve_bank_full(const json& raw)
{
    allow_keys(raw, {"bank", "x_max", "n_x", "seed"}, "solve-bank-full config");
    json c;
    c["bank"] = resolve_bank(raw, "figure");
    c["x_max"] = opt(raw, "x_max", 0.3);
    c["n_x"] = opt(raw, "n_x", 301);
    return c;
}

const char* action_name(ActionKind k)
{
    switch (k) {
    case ActionKind::OrderEquity: return "order";
    case ActionKind::PayDividend: return "dividend";
    case ActionKind::Wait: break;
    }
    return "wait";
}

void exec_bank_full(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidBankParams::validate(bank_of(cfg));
    const FullSolution s = solve_full(p);
    if (!s.recapitalizes) ctx.warn("no recapitalization barrier pair; dividend-only solution");
    if (!s.conditions.all_pass()) ctx.warn("sufficient conditions do not all hold");
    json conds = json::array();
    for (const auto& c : s.conditions.items)
        conds.push_back({{"name", c.name}, {"pass", c.pass}, {"lhs", c.lhs}, {"rhs", c.rhs}});
    ctx.result = {{"u0", s.u0},
                  {"u1", s.recapitalizes ? json(s.u1) : json(nullptr)},
                  {"u2", s.u2},
                  {"recapitalizes", s.recapitalizes},
                  {"tangency_count", s.tangency_count},
                  {"lambda_minus", s.roots.lambda_minus},
                  {"lambda_plus", s.roots.lambda_plus},
                  {"conditions", conds},
                  {"conditions_pass", s.conditions.all_pass()}};

    const double lo = p->kappa_min;
    const double hi = cfg.at("x_max").get<double>();
    const int n = cfg.at("n_x").get<int>();
    if (n < 2 || !(hi > lo)) fail(ErrorCode::InvalidInput, "need n_x >= 2 and x_max above kappa_min");
    Table t({"X", "V", "V_slope", "action"});
    for (int k = 0; k < n; ++k) {
        const double X = lo + (hi - lo) * k / (n - 1);
        t.add({num(X), num(s.value(X)), num(s.slope(X)), action_name(s.action(X).kind)});
    }
    ctx.csv("value.csv", t);
}

// ---- bank, partially observed

json resolve_partial_common(const json& raw, json& c)
{
    c["bank"] = resolve_bank(raw, "table_b");
    const PartialConfig d = default_partial_config();
    c["grid"] = overlay_grid(raw, d.grid);
    c["aux_steps"] = opt(raw, "aux_steps", d.aux_steps);
    return c;
}

PartialConfig partial_config_of(const json& cfg)
{
    PartialConfig pc;
    pc.grid = grid_of(cfg);
    pc.aux_steps = cfg.at("aux_steps").get<int>();
    return pc;
}

json resolve_bank_partial(const json& raw)
{
    allow_keys(raw, {"bank", "grid", "aux_steps", "region_tol", "seed"}, "solve-bank-partial config");
    json c;
    resolve_partial_common(raw, c);
    c["region_tol"] = opt(raw, "region_tol", 1e-6);
    return c;
}

const char* region_name(Region r)
{
    switch (r) {
    case Region::Dividend: return "dividend";
    case Region::Recapitalization: return "recapitalize";
    case Region::Continuation: break;
    }
    return "continue";
}

void exec_bank_partial(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidBankParams::validate(bank_of(cfg));
    const PartialSolution sol = penalty_solve(p, partial_config_of(cfg));
    const BoundaryCurves bc = extract_regions(sol, cfg.at("region_tol").get<double>());
    const auto line = static_cast<std::size_t>(sol.line_index);

    Table b({"S", "I", "u1", "u2"});
    for (std::size_t j = 0; j < bc.S.size(); ++j) b.add({num(bc.S[j]), num(bc.I[j]), num(bc.u1[j]), num(bc.u2[j])});
    ctx.csv("boundaries.csv", b);
    Table s({"S", "X_hat", "V", "region"});
    for (std::size_t j = 0; j < sol.S.size(); ++j)
        for (std::size_t i = 0; i < sol.nz(); ++i)
            s.add({num(sol.S[j]), num(sol.X(static_cast<int>(j), static_cast<int>(i))),
                   num(sol.at(static_cast<int>(j), static_cast<int>(i))), region_name(sol.region[j * sol.nz() + i])});
    ctx.csv("surface.csv", s);

    auto nan_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    ctx.result = {{"S_line", sol.line.S_line},
                  {"kappa1", sol.line.kappa1},
                  {"omega1", sol.line.omega1},
                  {"residual", sol.residual},
                  {"penalty", sol.penalty},
                  {"iterations", sol.iterations},
                  {"n_S", sol.S.size()},
                  {"n_zeta", sol.nz()},
                  {"line", {{"I", bc.I[line]}, {"u1", nan_null(bc.u1[line])}, {"u2", nan_null(bc.u2[line])}}}};
}

// ---- elasticities

json resolve_elasticity(const json& raw)
{
    allow_keys(raw, {"bank", "grid", "aux_steps", "rel_step", "X_ref", "window", "surface", "seed"},
               "elasticity config");
    json c;
    resolve_partial_common(raw, c);
    c["rel_step"] = opt(raw, "rel_step", 0.01);
    c["X_ref"] = opt(raw, "X_ref", 0.125);
    const json w = sub(raw, "window");
    allow_keys(w, {"half_width", "n", "rel_step"}, "window");
    c["window"] = {{"half_width", opt(w, "half_width", 0.5)}, {"n", opt(w, "n", 11)}, {"rel_step", opt(w, "rel_step", 0.05)}};
    c["surface"] = opt(raw, "surface", true);
    return c;
}

void exec_elasticity(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidBankParams::validate(bank_of(cfg));
    const double rel = cfg.at("rel_step").get<double>();
    const double X_ref = cfg.at("X_ref").get<double>();
    const json& w = cfg.at("window");
    const double hw = w.at("half_width").get<double>();
    const int wn = w.at("n").get<int>();
    const double wrel = w.at("rel_step").get<double>();
    const double S_line = p->stationary_variance();

    struct Column {
        std::string name;
        PolicyOutputs e;
    };
    std::vector<Column> cols;
    if (cfg.at("surface").get<bool>()) {
        const PartialSolution sol = penalty_solve(p, partial_config_of(cfg));
        cols.push_back({"S", average_surface_elasticity(sol, S_line, hw, wn, wrel, X_ref)});
    }
    const std::pair<const char*, SensParam> params[] = {{"sigma", SensParam::Sigma}, {"m", SensParam::M},
                                                        {"omega", SensParam::Omega}, {"rho", SensParam::Rho},
                                                        {"Delta", SensParam::Delta}, {"K", SensParam::K}};
    for (const auto& [name, q] : params) cols.push_back({name, line_elasticity(p, q, rel, X_ref)});

    std::vector<std::string> header{"output"};
    for (const auto& c : cols) header.push_back(c.name);
    Table t(header);
    json table = json::object();
    const std::pair<const char*, double PolicyOutputs::*> outs[] = {
        {"V", &PolicyOutputs::V}, {"I", &PolicyOutputs::I}, {"u1", &PolicyOutputs::u1}, {"u2", &PolicyOutputs::u2}};
    for (const auto& [oname, field] : outs) {
        std::vector<std::string> row{oname};
        for (const auto& c : cols) {
            row.push_back(num(c.e.*field));
            table[oname][c.name] = std::isfinite(c.e.*field) ? json(c.e.*field) : json(nullptr);
        }
        t.add(std::move(row));
    }
    ctx.csv("elasticities.csv", t);
    const auto rule = LiquidationRule::from(p);
    ctx.result = {{"elasticities", table},
                  {"I_S_window_mean", average_barrier_elasticity(rule, S_line, hw, wn, wrel)},
                  {"I_S_at_line", barrier_elasticity(rule, S_line, wrel)},
                  {"S_line", S_line}};
}

// ---- retirement

json resolve_retire_common(const json& raw, json& c)
{
    c["retire"] = resolve_retire(raw, "baseline");
    c["grid"] = overlay_grid(raw, default_retire_grid(retire_of(c)));
    return c;
}

json resolve_solve_retire(const json& raw)
{
    allow_keys(raw, {"retire", "grid", "z_policy", "seed"}, "solve-retire config");
    json c;
    resolve_retire_common(raw, c);
    c["z_policy"] = opt(raw, "z_policy", retire_of(c).z_bar);
    return c;
}

json resolve_solve_retire_ez(const json& raw)
{
    json c = resolve_solve_retire(raw);
    if (!retire_of(c).eis_psi) throw UsageError("solve-retire-ez needs retire.eis_psi");
    return c;
}

void write_retire_outputs(const RetireSolution& s, double z_policy, Ctx& ctx)
{
    const double r = s.params.r;
    Table b({"z", "xi_star", "threshold", "target"});
    for (std::size_t j = 0; j < s.nz(); ++j) b.add({num(s.z[j]), num(s.xi_star[j]), num(s.threshold[j]), num(s.target[j])});
    ctx.csv("boundary.csv", b);

    const auto j = static_cast<std::size_t>(s.z_index(z_policy));
    const double zz = s.z[j];
    Table pol({"w_over_I", "xi", "retired", "stock_share", "consumption_over_income", "human_capital"});
    for (std::size_t i = s.nxi(); i-- > 0;) {
        const double xi = s.xi[i];
        if (xi <= 0.0) continue;
        const std::size_t k = s.idx(i, j);
        const double wI = w_over_I_of(xi, r);
        const double share = xi < 1.0 ? s.y[k] / (1.0 - xi) : kNaN;
        double hc = kNaN;
        if (!s.retired[k] && wI > 0.0) {
            try {
                hc = implicit_human_capital(s, wI, 1.0, zz);
            } catch (const Error&) {
            }
        }
        pol.add({num(wI), num(xi), s.retired[k] ? "1" : "0", num(share), num(s.c[k] / (r * xi)), num(hc)});
    }
    ctx.csv("policy.csv", pol);
    const MpcCurve m = mpc_curve(s, zz);
    Table mt({"w_over_I", "mpc"});
    for (std::size_t i = 0; i < m.w.size(); ++i) mt.add({num(m.w[i]), num(m.mpc[i])});
    ctx.csv("mpc.csv", mt);

    auto nan_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    if (s.degenerate_nodes > 0) ctx.warn(std::to_string(s.degenerate_nodes) + " nodes used endpoint controls");
    const MertonConstants mc = merton_constants(ValidRetireParams::validate(s.params));
    ctx.result = {{"theta", mc.theta},
                  {"K_bar", mc.K_bar},
                  {"residual", s.residual},
                  {"penalty", s.penalty},
                  {"iterations", s.iterations},
                  {"degenerate_nodes", s.degenerate_nodes},
                  {"recursive", s.recursive},
                  {"at_z", {{"z", zz},
                            {"xi_star", s.xi_star[j]},
                            {"threshold", nan_null(s.threshold[j])},
                            {"target", nan_null(s.target[j])}}}};
}

void exec_solve_retire(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidRetireParams::validate(retire_of(cfg));
    write_retire_outputs(penalty_solve_retire(p, grid_of(cfg)), cfg.at("z_policy").get<double>(), ctx);
}

void exec_solve_retire_ez(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidRetireParams::validate(retire_of(cfg));
    write_retire_outputs(epstein_zin_solve(p, grid_of(cfg)), cfg.at("z_policy").get<double>(), ctx);
}

json resolve_retire_finite(const json& raw)
{
    allow_keys(raw, {"retire", "grid", "finite", "seed"}, "solve-retire-finite config");
    json c;
    resolve_retire_common(raw, c);
    if (!retire_of(c).horizon_T) throw UsageError("solve-retire-finite needs retire.horizon_T");
    const json f = sub(raw, "finite");
    allow_keys(f, {"dt", "snapshot_every", "max_policy_iter"}, "finite");
    const FiniteHorizonConfig d;
    c["finite"] = {{"dt", opt(f, "dt", d.dt)},
                   {"snapshot_every", opt(f, "snapshot_every", d.snapshot_every)},
                   {"max_policy_iter", opt(f, "max_policy_iter", d.max_policy_iter)}};
    return c;
}

void exec_retire_finite(const json& cfg, std::uint64_t, Ctx& ctx)
{
    const auto p = ValidRetireParams::validate(retire_of(cfg));
    FiniteHorizonConfig fc;
    fc.dt = cfg.at("finite").at("dt").get<double>();
    fc.snapshot_every = cfg.at("finite").at("snapshot_every").get<double>();
    fc.max_policy_iter = cfg.at("finite").at("max_policy_iter").get<int>();
    const FiniteHorizonSolution s = finite_horizon_solve(p, grid_of(cfg), fc);
    const std::size_t nz = s.z.size();
    Table t({"age", "z", "threshold", "target"});
    for (std::size_t l = 0; l < s.ages.size(); ++l)
        for (std::size_t j = 0; j < nz; ++j)
            t.add({num(s.ages[l]), num(s.z[j]), num(s.threshold[l * nz + j]), num(s.target[l * nz + j])});
    ctx.csv("thresholds.csv", t);
    json snaps = json::array();
    for (const auto& r : s.snapshots) {
        const auto j = static_cast<std::size_t>(r.z_index(p->z_bar));
        snaps.push_back({{"age", r.age}, {"threshold", std::isfinite(r.threshold[j]) ? json(r.threshold[j]) : json(nullptr)}});
    }
    ctx.result = {{"T", s.T}, {"levels", s.ages.size()}, {"snapshots_at_z_bar", snaps}};
}

// ---- simulation

json resolve_simulate_bank(const json& raw)
{
    allow_keys(raw, {"bank", "grid", "aux_steps", "policy", "sim", "dump_paths", "seed"}, "simulate-bank config");
    json c;
    resolve_partial_common(raw, c);
    const auto pol = opt<std::string>(raw, "policy", "partial");
    if (pol != "partial" && pol != "full" && pol != "none") throw UsageError("policy must be partial, full or none");
    c["policy"] = pol;
    const json s = sub(raw, "sim");
    allow_keys(s, {"horizon", "n_paths", "dt", "record_every", "X0", "S0"}, "sim");
    const BankSimConfig d;
    c["sim"] = {{"horizon", opt(s, "horizon", d.horizon)},
                {"n_paths", opt(s, "n_paths", d.n_paths)},
                {"dt", opt(s, "dt", d.dt)},
                {"record_every", opt(s, "record_every", d.record_every)},
                {"X0", has(s, "X0") ? json(opt(s, "X0", 0.0)) : json(nullptr)},
                {"S0", has(s, "S0") ? json(opt(s, "S0", 0.0)) : json(nullptr)}};
    c["dump_paths"] = opt(raw, "dump_paths", false);
    return c;
}

void exec_simulate_bank(const json& cfg, std::uint64_t seed, Ctx& ctx)
{
    const auto p = ValidBankParams::validate(bank_of(cfg));
    const std::string kind = cfg.at("policy").get<std::string>();
    BankPolicy pol = BankPolicy::none();
    if (kind == "partial")
        pol = BankPolicy::from(penalty_solve(p, partial_config_of(cfg)));
    else if (kind == "full")
        pol = BankPolicy::from(solve_full(p->noise_m > 0.0 ? line_params(p) : p));

    const json& s = cfg.at("sim");
    BankSimConfig sc;
    sc.horizon = s.at("horizon").get<double>();
    sc.n_paths = s.at("n_paths").get<int>();
    sc.dt = s.at("dt").get<double>();
    sc.record_every = s.at("record_every").get<double>();
    sc.X0 = s.at("X0").is_null() ? -1.0 : s.at("X0").get<double>();
    sc.S0 = s.at("S0").is_null() ? -1.0 : s.at("S0").get<double>();
    sc.seed = seed;
    sc.keep_paths = true;
    const PathBundle b = simulate_bank(p, pol, sc);

    Table t({"t", "S", "alive", "mean_X", "mean_X_hat", "tracking_sd"});
    for (std::size_t k = 0; k < b.t.size(); ++k) {
        double sx = 0.0, sxh = 0.0;
        int alive = 0;
        for (const auto& path : b.paths) {
            if (path.liquidation_time >= 0.0 && path.liquidation_time <= b.t[k]) continue;
            sx += path.E[k] / path.D[k];
            sxh += path.E_hat[k] / path.D[k];
            ++alive;
        }
        t.add({num(b.t[k]), num(b.S[k]), num(alive), num(alive ? sx / alive : kNaN), num(alive ? sxh / alive : kNaN),
               num(b.tracking_sd[k])});
    }
    ctx.csv("series.csv", t);

    std::size_t orders = 0, deliveries = 0;
    for (const auto& path : b.paths) {
        orders += path.order_times.size();
        deliveries += path.delivery_times.size();
    }
    if (cfg.at("dump_paths").get<bool>()) {
        Table d({"path", "t", "E", "E_hat", "D", "dividends", "issued"});
        for (std::size_t n = 0; n < b.paths.size(); ++n) {
            const auto& path = b.paths[n];
            for (std::size_t k = 0; k < b.t.size(); ++k)
                d.add({num(n), num(b.t[k]), num(path.E[k]), num(path.E_hat[k]), num(path.D[k]), num(path.dividends[k]),
                       num(path.issued[k])});
        }
        ctx.csv("paths.csv", d);
    }
    const double S_line = p->stationary_variance();
    auto nan_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    ctx.result = {{"policy", pol.label},
                  {"paths", b.n_paths},
                  {"liquidated", b.liquidated},
                  {"liquidation_rate", static_cast<double>(b.liquidated) / b.n_paths},
                  {"mean_dividends", b.mean_dividends},
                  {"mean_issued", b.mean_issued},
                  {"orders", orders},
                  {"deliveries", deliveries},
                  {"barriers_at_S_line", {{"u1", nan_null(pol.order_barrier(S_line))}, {"u2", nan_null(pol.dividend_barrier(S_line))}}},
                  {"tracking_sd_last", nan_null(b.tracking_sd.back())}};
}

json resolve_simulate_retire(const json& raw)
{
    allow_keys(raw, {"retire", "grid", "sim", "seed"}, "simulate-retire config");
    json c;
    resolve_retire_common(raw, c);
    const json s = sub(raw, "sim");
    allow_keys(s, {"w_over_I", "z0", "n_paths", "dt", "cap", "antithetic"}, "sim");
    const RetireSimConfig d;
    std::vector<double> w{10.0, 30.0, 50.0};
    if (has(s, "w_over_I")) {
        if (s.at("w_over_I").is_number())
            w = {s.at("w_over_I").get<double>()};
        else
            w = opt<std::vector<double>>(s, "w_over_I", w);
    }
    c["sim"] = {{"w_over_I", w},
                {"z0", opt(s, "z0", d.z0)},
                {"n_paths", opt(s, "n_paths", d.n_paths)},
                {"dt", opt(s, "dt", d.dt)},
                {"cap", opt(s, "cap", d.cap)},
                {"antithetic", opt(s, "antithetic", d.antithetic)}};
    return c;
}

void exec_simulate_retire(const json& cfg, std::uint64_t seed, Ctx& ctx)
{
    const RetireParams raw = retire_of(cfg);
    RetireParams braw = raw;
    braw.mean_reversion = 0.0;
    const auto p = ValidRetireParams::validate(raw);
    const auto pb = ValidRetireParams::validate(braw);
    const GridSpec g = grid_of(cfg);
    const RetireSolution ours = penalty_solve_retire(p, g);
    const RetireSolution bench = penalty_solve_retire(pb, g);

    const json& s = cfg.at("sim");
    RetireSimConfig sc;
    sc.z0 = s.at("z0").get<double>();
    sc.n_paths = s.at("n_paths").get<int>();
    sc.dt = s.at("dt").get<double>();
    sc.cap = s.at("cap").get<double>();
    sc.antithetic = s.at("antithetic").get<bool>();
    sc.seed = seed;

    Table t({"w_over_I", "policy_time", "policy_se", "policy_share", "policy_capped", "benchmark_time", "benchmark_se",
             "benchmark_share", "benchmark_capped"});
    json rows = json::array();
    auto stats = [](const RetireStats& r) {
        return json{{"expected_time", r.expected_time}, {"time_se", r.time_se},   {"expected_share", r.expected_share},
                    {"paths", r.paths},                 {"capped", r.capped},     {"immediate", r.immediate}};
    };
    for (double w : s.at("w_over_I").get<std::vector<double>>()) {
        sc.w_over_I = w;
        const RetireComparison c = simulate_retirement(p, ours, bench, sc);
        if (c.policy.capped + c.benchmark.capped > 0)
            ctx.warn("w/I = " + num(w) + ": some paths reached the " + num(sc.cap) + "-year cap");
        t.add({num(w), num(c.policy.expected_time), num(c.policy.time_se), num(c.policy.expected_share),
               num(c.policy.capped), num(c.benchmark.expected_time), num(c.benchmark.time_se),
               num(c.benchmark.expected_share), num(c.benchmark.capped)});
        rows.push_back({{"w_over_I", w}, {"policy", stats(c.policy)}, {"benchmark", stats(c.benchmark)}});
    }
    ctx.csv("comparison.csv", t);
    ctx.result = {{"comparisons", rows}};
}

// ---- dispatch

struct Command {
    const char* name;
    const char* help;
    json (*resolve)(const json&);
    void (*execute)(const json&, std::uint64_t, Ctx&);
    bool seeded;
};

const std::vector<Command>& commands()
{
    static const std::vector<Command> c = {
        {"filter", "Riccati variance path and, given a series, the discrete Kalman filter", resolve_filter, exec_filter,
         false},
        {"calibrate", "Moment and particle-filter estimates from a panel or a simulated series", resolve_calibrate,
         exec_calibrate, true},
        {"solve-bank-full", "Barriers and value of the fully observed bank", resolve_bank_full, exec_bank_full, false},
        {"solve-bank-partial", "Value surface and region curves of the partially observed bank", resolve_bank_partial,
         exec_bank_partial, false},
        {"solve-retire", "Stationary retirement problem", resolve_solve_retire, exec_solve_retire, false},
        {"solve-retire-finite", "Retirement problem with a mandatory retirement age", resolve_retire_finite,
         exec_retire_finite, false},
        {"solve-retire-ez", "Retirement problem with recursive utility", resolve_solve_retire_ez, exec_solve_retire_ez,
         false},
        {"simulate-bank", "Monte Carlo of a bank policy with noisy reports", resolve_simulate_bank, exec_simulate_bank,
         true},
        {"simulate-retire", "Monte Carlo of retirement times, cointegrated policy vs benchmark",
         resolve_simulate_retire, exec_simulate_retire, true},
        {"elasticity", "Elasticities of barriers and value", resolve_elasticity, exec_elasticity, false},
    };
    return c;
}

json error_json(const std::string& code, const std::string& message, const std::string& subcommand)
{
    return {{"error", {{"code", code}, {"message", message}, {"subcommand", subcommand}}}};
}

}  // namespace

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& c : commands()) n.emplace_back(c.name);
        n.emplace_back("rerun");
        return n;
    }();
    return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Stochastic control solvers for bank capital and retirement", "sc_control"};
    std::string config_path;
    std::string out_dir = "sc_out";
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool strict = false;
    app.add_option("--config", config_path, "JSON configuration, or a manifest.json from an earlier run");
    app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (default: SC_CONTROL_THREADS, then all cores)");
    app.add_flag("--strict", strict, "Fail on the first bad panel row and on warnings");
    app.set_version_flag("--version", SCC_VERSION);
    app.require_subcommand(1, 1);
    for (const auto& c : commands()) app.add_subcommand(c.name, c.help)->fallthrough();
    app.add_subcommand("rerun", "Repeat the run recorded in a manifest given with --config")->fallthrough();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    std::string name = app.get_subcommands().front()->get_name();
    const bool seed_given = app.count("--seed") > 0;
    if (threads > 0) set_thread_count(threads);

    auto usage = [&](const std::string& msg) {
        err << error_json("Usage", msg, name).dump() << '\n';
        return kUsage;
    };

    json raw = json::object();
    if (!config_path.empty()) {
        try {
            raw = load_json_file(config_path);
        } catch (const Error& e) {
            return usage(e.what());
        }
    }
    if (raw.is_object() && raw.contains("subcommand") && raw.contains("config")) {
        const std::string recorded = raw.at("subcommand").get<std::string>();
        if (name == "rerun")
            name = recorded;
        else if (name != recorded)
            return usage("manifest is for " + recorded + ", not " + name);
        raw = raw.at("config");
    } else if (name == "rerun") {
        return usage("rerun needs --config <manifest.json>");
    }
    const Command* cmd = nullptr;
    for (const auto& c : commands())
        if (name == c.name) cmd = &c;
    if (!cmd) return usage("unknown subcommand " + name);

    json cfg;
    try {
        cfg = cmd->resolve(raw);
        if (cmd->seeded) cfg["seed"] = seed_given ? seed : opt<std::uint64_t>(raw, "seed", 1);
    } catch (const UsageError& e) {
        return usage(e.what());
    } catch (const Error& e) {
        return usage(e.what());
    } catch (const json::exception& e) {
        return usage(e.what());
    }

    Ctx ctx;
    ctx.out = out_dir;
    ctx.strict = strict;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) return usage("cannot create " + out_dir + ": " + ec.message());

    auto failure = [&](const std::string& code, const std::string& msg) {
        const json e = error_json(code, msg, name);
        err << e.dump() << '\n';
        std::ofstream(ctx.out / "error.json") << e.dump(2) << '\n';
        return kSolverFailure;
    };
    const std::uint64_t run_seed = cmd->seeded ? cfg.at("seed").get<std::uint64_t>() : 0;
    try {
        cmd->execute(cfg, run_seed, ctx);
    } catch (const Error& e) {
        return failure(std::string(error_name(e.code())), e.what());
    } catch (const std::exception& e) {
        return failure("Internal", e.what());
    }

    const json summary = {{"subcommand", name},
                          {"version", SCC_VERSION},
                          {"config", cfg},
                          {"result", ctx.result},
                          {"warnings", ctx.warnings}};
    ctx.write("summary.json", summary.dump(2) + "\n");
    const json manifest = {{"subcommand", name},
                           {"version", SCC_VERSION},
                           {"config_path", config_path.empty() ? json(nullptr) : json(abs_path(config_path))},
                           {"out", abs_path(out_dir)},
                           {"inputs", ctx.inputs},
                           {"outputs", ctx.outputs},
                           {"seed", cmd->seeded ? json(run_seed) : json(nullptr)},
                           {"threads", thread_count()},
                           {"strict", strict},
                           {"config", cfg}};
    std::ofstream((ctx.out / "manifest.json").string(), std::ios::binary) << manifest.dump(2) << '\n';
    out << summary.dump(2) << '\n';

    if (strict && !ctx.warnings.empty()) return failure("StrictWarning", ctx.warnings.front());
    return kOk;
}

}  // namespace scc::cli
