#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "logsew/scalar.hpp"

namespace logsew {

// malformed or unresolvable scenario input
struct ScenarioError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunOptions {
    std::optional<unsigned long> seed;
    std::optional<Mode> mode;
    std::string format = "csv";  // csv | json
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_deviation = 0;
    std::string detail;
};

struct RunReport {
    std::string name;
    std::string kind;
    unsigned long seed = 0;
    Mode mode = Mode::Exact;
    std::vector<CheckResult> checks;
    // file name ↦ contents
    std::map<std::string, std::string> artifacts;

    bool passed() const;
    nlohmann::json summary() const;
};

nlohmann::json toml_to_json(const std::string& text);
// JSON, or TOML when the extension is .toml
nlohmann::json load_scenario_file(const std::string& path);
nlohmann::json parse_scenario_text(const std::string& text, const std::string& format);

RunReport run_scenario(const nlohmann::json& scenario, const RunOptions& opt = {});
// summary.json plus every artifact, into dir
void write_report(const RunReport& r, const std::string& dir);

struct ScenarioTemplate {
    std::string name;
    std::string kind;
    std::string format;  // json | toml
    std::string description;
    std::string text;
};
const std::vector<ScenarioTemplate>& scenario_templates();

}  // namespace logsew
