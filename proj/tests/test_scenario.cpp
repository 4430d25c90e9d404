#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "logsew/scenario.hpp"

using namespace logsew;
using nlohmann::json;

namespace {

const CheckResult* find_check(const RunReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("test_scenario: toml converts to json") {
    json j = toml_to_json("kind = \"flow\"\nx = [1, 2.5]\n[circle]\nradius = 1.0\nflag = true\n");
    CHECK(j.at("kind") == "flow");
    CHECK(j.at("x")[1].get<double>() == doctest::Approx(2.5));
    CHECK(j.at("circle").at("flag") == true);
    CHECK_THROWS_AS(toml_to_json("a = ["), ScenarioError);
    CHECK_THROWS_AS(toml_to_json("d = 1979-05-27\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("{", "json"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("{}", "yaml"), ScenarioError);
}

TEST_CASE("test_scenario: malformed scenarios are rejected") {
    CHECK_THROWS_AS(run_scenario(json::array()), ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "nothing"}}), ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "character"}}), ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "character"}, {"cutoff", -1}}), ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "character"}, {"cutoff", 3}, {"geometry", "genus two"}}), ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "character"}, {"cutoff", 3}, {"insertion", {{"parts", {1, 2}}}}}),
                    ScenarioError);
    CHECK_THROWS_AS(run_scenario(json{{"kind", "sew"}, {"blocks", json::array()}}), ScenarioError);
    RunOptions bad;
    bad.format = "xml";
    CHECK_THROWS_AS(run_scenario(json{{"kind", "character"}, {"cutoff", 3}}, bad), ScenarioError);
}

TEST_CASE("test_scenario: torus and two point characters agree") {
    json base{{"kind", "character"}, {"cutoff", 7}};
    auto a = run_scenario(base);
    base["geometry"] = "torus";
    auto b = run_scenario(base);
    REQUIRE(a.passed());
    REQUIRE(b.passed());
    CHECK(a.artifacts.at("coefficients.csv") == b.artifacts.at("coefficients.csv"));
    CHECK(find_check(a, "graded_dimension")->max_deviation == 0);
}

TEST_CASE("test_scenario: sew kind with a named module") {
    json s{{"kind", "sew"},
           {"modules", {{"M", {{"type", "heisenberg"}, {"mu", "1/2"}, {"cutoff", 5}}}}},
           {"blocks", {{{"type", "matrix_element"}, {"module", "M"}}}},
           {"pairs", {{2, 1}}},
           {"cutoff", 5},
           {"inputs", {"vacuum"}}};
    auto r = run_scenario(s);
    CHECK(r.passed());
    const auto& csv = r.artifacts.at("coefficients.csv");
    CHECK(csv.rfind("exp0_re,exp0_im,log0,coeff_re,coeff_im\n1/8,0,0,1,0\n", 0) == 0);
    s["inputs"] = json::array();
    CHECK_THROWS_AS(run_scenario(s), ScenarioError);
}

TEST_CASE("test_scenario: pseudo-sewing reports log terms") {
    json s{{"kind", "pseudo_sew"},
           {"module", {{"type", "epsilon_toy"}, {"mu", 1}, {"cutoff", 6}, {"window", 4}}},
           {"slf", {1, 1}},
           {"cutoff", 4}};
    auto r = run_scenario(s);
    CHECK(r.passed());
    REQUIRE(find_check(r, "vacuum_oracle"));
    CHECK(r.artifacts.at("coefficients.csv").find(",1,") != std::string::npos);
    s["algebra"] = "C";
    CHECK_THROWS_AS(run_scenario(s), ScenarioError);
}

TEST_CASE("test_scenario: runtime failures become a failing check") {
    json s{{"kind", "character"}, {"cutoff", 4}, {"voa_cutoff", 1}, {"insertion", {{"parts", {3}}}}};
    auto r = run_scenario(s);
    CHECK_FALSE(r.passed());
    REQUIRE(find_check(r, "run"));
    CHECK(r.summary().at("status") == "fail");
}

TEST_CASE("test_scenario: seeds make runs reproducible") {
    json s{{"kind", "identity_suite"}, {"tuples", 5}, {"fields", 3}};
    RunOptions o;
    o.seed = 11;
    auto a = run_scenario(s, o), b = run_scenario(s, o);
    CHECK(a.passed());
    CHECK(a.summary() == b.summary());
    CHECK(a.summary().at("seed") == 11);
}

TEST_CASE("test_scenario: float mode converts tables") {
    RunOptions o;
    o.mode = Mode::Approx;
    o.format = "json";
    auto r = run_scenario(json{{"kind", "character"}, {"cutoff", 3}}, o);
    json t = json::parse(r.artifacts.at("coefficients.json"));
    CHECK(t.at("mode") == "approx");
    CHECK(r.summary().at("mode") == "float");
}

TEST_CASE("test_scenario: bundled templates run and write reports") {
    const auto& ts = scenario_templates();
    CHECK(ts.size() >= 6);
    auto dir = std::filesystem::temp_directory_path() / "logsew_scenario_test";
    std::filesystem::remove_all(dir);
    for (const auto& t : ts) {
        if (t.kind == "identity_suite") continue;
        CAPTURE(t.name);
        auto r = run_scenario(parse_scenario_text(t.text, t.format));
        CHECK(r.passed());
        CHECK(r.name == t.name);
        write_report(r, (dir / t.name).string());
        json sum = json::parse(read_file(dir / t.name / "summary.json"));
        CHECK(sum.at("status") == "pass");
        for (const auto& a : sum.at("artifacts")) CHECK(std::filesystem::exists(dir / t.name / a.get<std::string>()));
    }
    std::filesystem::remove_all(dir);
}
