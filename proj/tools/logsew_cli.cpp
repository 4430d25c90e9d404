#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "logsew/scenario.hpp"

using namespace logsew;

namespace {

int run(const std::string& path, const std::string& out, std::optional<unsigned long> seed, const std::string& mode,
        const std::string& format) {
    RunOptions opt;
    opt.seed = seed;
    if (!mode.empty()) opt.mode = mode == "float" ? Mode::Approx : Mode::Exact;
    opt.format = format;
    RunReport r;
    try {
        r = run_scenario(load_scenario_file(path), opt);
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        write_report(r, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    for (const auto& c : r.checks) {
        std::printf("%s %s max_deviation=%.6g", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.max_deviation);
        if (!c.detail.empty()) std::printf(" (%s)", c.detail.c_str());
        std::printf("\n");
    }
    std::printf("%s: %s, %zu checks, artifacts in %s\n", r.name.c_str(), r.passed() ? "pass" : "fail", r.checks.size(),
                out.c_str());
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sewing, pseudo-traces and transport of conformal blocks at desk scale", "logsew"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run a JSON or TOML scenario file");
    std::string path, out = "out", mode, format = "csv";
    std::optional<unsigned long> seed;
    run_cmd->add_option("path", path, "Scenario file")->required();
    run_cmd->add_option("--out", out, "Output directory")->capture_default_str();
    run_cmd->add_option("--seed", seed, "Seed for randomized suites");
    run_cmd->add_option("--mode", mode, "Arithmetic of reported tables")->check(CLI::IsMember({"exact", "float"}));
    run_cmd->add_option("--format", format, "Coefficient table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    auto* list_cmd = app.add_subcommand("list", "List bundled scenario templates");
    bool as_json = false;
    list_cmd->add_flag("--json", as_json, "Print a JSON array");

    auto* show_cmd = app.add_subcommand("show", "Print a bundled scenario template");
    std::string name;
    show_cmd->add_option("name", name, "Template name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (*run_cmd) return run(path, out, seed, mode, format);
    if (*list_cmd) {
        const auto& ts = scenario_templates();
        if (as_json) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& t : ts)
                a.push_back({{"name", t.name}, {"kind", t.kind}, {"format", t.format}, {"description", t.description}});
            std::cout << a.dump(2) << "\n";
        } else {
            for (const auto& t : ts) std::printf("%-22s %-15s %s\n", t.name.c_str(), t.kind.c_str(), t.description.c_str());
        }
        return 0;
    }
    for (const auto& t : scenario_templates())
        if (t.name == name) {
            std::cout << t.text;
            return 0;
        }
    std::cerr << "unknown template '" << name << "'\n";
    return 2;
}
