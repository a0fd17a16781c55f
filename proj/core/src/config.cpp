#include "sccontrol/config.hpp"

#include "sccontrol/errors.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace scc {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const char* what)
{
    if (!j.is_object()) fail(ErrorCode::InvalidInput, std::string(what) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) fail(ErrorCode::InvalidInput, std::string("unknown ") + what + " field '" + key + "'");
    }
}

template <class T>
void get_if(const json& j, const char* key, T& out)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidInput, std::string("field '") + key + "': " + e.what());
    }
}

void get_opt(const json& j, const char* key, std::optional<double>& out)
{
    if (!j.contains(key) || j.at(key).is_null()) return;
    double v = 0.0;
    get_if(j, key, v);
    out = v;
}

// JSON has no infinity; null stands for "unbounded".
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void to_json(json& j, const BankParams& p)
{
    j = json{{"mu", p.mu},
             {"alpha", p.alpha},
             {"sigma", p.sigma},
             {"delta", p.delta},
             {"omega", p.omega},
             {"kappa_min", p.kappa_min},
             {"issue_cost_K", p.issue_cost_K},
             {"delay_Delta", p.delay_Delta},
             {"issue_cap_sbar", finite_or_null(p.issue_cap_sbar)},
             {"noise_m", p.noise_m},
             {"rho", p.rho},
             {"conf_a", p.conf_a},
             {"S_bar", p.S_bar}};
}

void from_json(const json& j, BankParams& p)
{
    reject_unknown(j,
                   {"mu", "alpha", "sigma", "delta", "omega", "kappa_min", "issue_cost_K", "delay_Delta",
                    "issue_cap_sbar", "noise_m", "rho", "conf_a", "S_bar"},
                   "BankParams");
    get_if(j, "mu", p.mu);
    get_if(j, "alpha", p.alpha);
    get_if(j, "sigma", p.sigma);
    get_if(j, "delta", p.delta);
    get_if(j, "omega", p.omega);
    get_if(j, "kappa_min", p.kappa_min);
    get_if(j, "issue_cost_K", p.issue_cost_K);
    get_if(j, "delay_Delta", p.delay_Delta);
    if (j.contains("issue_cap_sbar")) {
        if (j.at("issue_cap_sbar").is_null())
            p.issue_cap_sbar = std::numeric_limits<double>::infinity();
        else
            get_if(j, "issue_cap_sbar", p.issue_cap_sbar);
    }
    get_if(j, "noise_m", p.noise_m);
    get_if(j, "rho", p.rho);
    get_if(j, "conf_a", p.conf_a);
    get_if(j, "S_bar", p.S_bar);
}

void to_json(json& j, const RetireParams& p)
{
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    j = json{{"r", p.r},
             {"mu_stock", p.mu_stock},
             {"sigma_stock", p.sigma_stock},
             {"gamma", p.gamma},
             {"B", p.B},
             {"beta", p.beta},
             {"mu_income", p.mu_income},
             {"sigma_income", p.sigma_income},
             {"recovery", p.recovery},
             {"power_nu", opt(p.power_nu)},
             {"jump_intensity", p.jump_intensity},
             {"sigma_z", p.sigma_z},
             {"mean_reversion", p.mean_reversion},
             {"z_bar", p.z_bar},
             {"eis_psi", opt(p.eis_psi)},
             {"horizon_T", opt(p.horizon_T)}};
}

void from_json(const json& j, RetireParams& p)
{
    reject_unknown(j,
                   {"r", "mu_stock", "sigma_stock", "gamma", "B", "beta", "mu_income", "sigma_income",
                    "recovery", "power_nu", "jump_intensity", "sigma_z", "mean_reversion", "z_bar", "eis_psi",
                    "horizon_T"},
                   "RetireParams");
    get_if(j, "r", p.r);
    get_if(j, "mu_stock", p.mu_stock);
    get_if(j, "sigma_stock", p.sigma_stock);
    get_if(j, "gamma", p.gamma);
    get_if(j, "B", p.B);
    get_if(j, "beta", p.beta);
    get_if(j, "mu_income", p.mu_income);
    get_if(j, "sigma_income", p.sigma_income);
    get_if(j, "recovery", p.recovery);
    get_opt(j, "power_nu", p.power_nu);
    get_if(j, "jump_intensity", p.jump_intensity);
    get_if(j, "sigma_z", p.sigma_z);
    get_if(j, "mean_reversion", p.mean_reversion);
    get_if(j, "z_bar", p.z_bar);
    get_opt(j, "eis_psi", p.eis_psi);
    get_opt(j, "horizon_T", p.horizon_T);
}

void to_json(json& j, const Axis& a)
{
    j = json{{"lo", a.lo},
             {"hi", a.hi},
             {"n", a.n},
             {"stretch", a.stretch == Stretch::Uniform ? "uniform" : "geometric"},
             {"ratio", a.ratio}};
}

void from_json(const json& j, Axis& a)
{
    reject_unknown(j, {"lo", "hi", "n", "stretch", "ratio"}, "axis");
    get_if(j, "lo", a.lo);
    get_if(j, "hi", a.hi);
    get_if(j, "n", a.n);
    get_if(j, "ratio", a.ratio);
    if (j.contains("stretch")) {
        std::string s;
        get_if(j, "stretch", s);
        if (s == "uniform")
            a.stretch = Stretch::Uniform;
        else if (s == "geometric")
            a.stretch = Stretch::Geometric;
        else
            fail(ErrorCode::InvalidInput, "stretch must be 'uniform' or 'geometric'");
    }
}

void to_json(json& j, const GridSpec& g)
{
    j = json{{"x", g.x},
             {"y", g.y},
             {"penalty_schedule", g.penalty_schedule},
             {"tol", g.tol},
             {"max_iter", g.max_iter}};
}

void from_json(const json& j, GridSpec& g)
{
    reject_unknown(j, {"x", "y", "penalty_schedule", "tol", "max_iter"}, "GridSpec");
    if (j.contains("x")) from_json(j.at("x"), g.x);
    if (j.contains("y")) from_json(j.at("y"), g.y);
    get_if(j, "penalty_schedule", g.penalty_schedule);
    get_if(j, "tol", g.tol);
    get_if(j, "max_iter", g.max_iter);
}

json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidInput, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::InvalidInput, path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const json& j)
{
    std::ofstream out(path);
    if (!out) fail(ErrorCode::InvalidInput, "cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace scc
