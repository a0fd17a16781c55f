#pragma once

#include "sccontrol/params.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace scc {

// JSON field names match the struct member names. Missing fields keep their
// defaults; unknown fields are rejected so typos do not pass silently.
void to_json(nlohmann::json& j, const BankParams& p);
void from_json(const nlohmann::json& j, BankParams& p);
void to_json(nlohmann::json& j, const RetireParams& p);
void from_json(const nlohmann::json& j, RetireParams& p);
void to_json(nlohmann::json& j, const Axis& a);
void from_json(const nlohmann::json& j, Axis& a);
void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace scc
