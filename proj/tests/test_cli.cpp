#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ndtsel/commands.hpp"
#include "ndtsel/error.hpp"
#include "ndtsel/manifest.hpp"

using namespace ndtsel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ndtsel_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunManifest small_manifest(const fs::path& out) {
    return manifest_from_json({{"simulate", true},
                               {"sim_n", 200},
                               {"iterations", 2},
                               {"gamma_grid", {900, 9, 0.5}},
                               {"depth", 3},
                               {"epochs", 10},
                               {"patience", 3},
                               {"seed", 4},
                               {"jobs", 1},
                               {"out", out.string()}});
}

}  // namespace

TEST_CASE("manifest validation names the offending key") {
    CHECK_THROWS_WITH_AS(manifest_from_json({{"iteratons", 3}}), "unknown manifest key 'iteratons'", Error);
    CHECK_THROWS_WITH_AS(manifest_from_json({{"iterations", "many"}}),
                         doctest::Contains("manifest key 'iterations' has an invalid value"), Error);
    CHECK_THROWS_AS(manifest_from_json({{"depth", -2}}), Error);
    CHECK_THROWS_AS(manifest_from_json({{"epochs", 2.5}}), Error);
    CHECK_THROWS_AS(manifest_from_json({{"categorical", "ordinal"}}), Error);
    CHECK_THROWS_AS(manifest_from_json({{"link", "cube"}}), Error);
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json::array()), Error);
    CHECK_THROWS_AS(apply_overrides(RunManifest{}, {{"bogus", 1}}), Error);
}

TEST_CASE("manifest round trip and overrides") {
    RunManifest m = small_manifest("somewhere");
    m.categorical = CategoricalPolicy::one_hot;
    m.link = LinkForm::g;
    const RunManifest back = manifest_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));

    const RunManifest over = apply_overrides(m, {{"iterations", 7}, {"gamma_grid", {5, 1}}});
    CHECK(over.iterations == 7);
    CHECK(*over.gamma_grid == std::vector<double>{5.0, 1.0});
    CHECK(over.seed == m.seed);

    const SelectionConfig cfg = to_selection_config(over);
    CHECK(cfg.iterations == 7);
    CHECK(cfg.master_seed == 4);
    CHECK(*cfg.depth == 3);
    CHECK(cfg.link == LinkForm::g);
    CHECK(to_selection_config(RunManifest{}).grid.size() == 36);
    CHECK(parse_categorical_policy("one_hot") == CategoricalPolicy::one_hot);
}

TEST_CASE("worker count resolution") {
    RunManifest m;
    m.jobs = 0;
    ::setenv("NDT_SELECT_JOBS", "3", 1);
    CHECK(resolve_jobs(m) == 3);
    m.jobs = 2;
    CHECK(resolve_jobs(m) == 2);
    m.jobs = 0;
    ::unsetenv("NDT_SELECT_JOBS");
    CHECK(resolve_jobs(m) >= 1);
}

TEST_CASE("select writes every artifact and is reproducible from its echo") {
    const fs::path dir = scratch("select");
    std::ostringstream console;
    const auto outcome = cmd_select(small_manifest(dir / "first"), console);
    for (const char* name : {"report.json", "curves.csv", "runs.csv", "verdict.txt", "manifest.json"}) {
        CHECK(fs::exists(dir / "first" / name));
    }
    CHECK(console.str().find("sim_200_3") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir / "first" / "report.json"));
    CHECK(report["schema"] == kReportSchema);
    CHECK(report.contains("manifest"));
    CHECK(slurp(dir / "first" / "verdict.txt").find(std::string(to_string(outcome.report.interpretation.verdict))) !=
          std::string::npos);

    const auto echoed = manifest_from_json(nlohmann::json::parse(slurp(dir / "first" / "manifest.json")));
    std::ostringstream quiet;
    cmd_select(apply_overrides(echoed, {{"out", (dir / "second").string()}, {"jobs", 2}}), quiet);
    CHECK(slurp(dir / "first" / "curves.csv") == slurp(dir / "second" / "curves.csv"));
    CHECK(slurp(dir / "first" / "runs.csv") == slurp(dir / "second" / "runs.csv"));
}

TEST_CASE("select from a csv file") {
    const fs::path dir = scratch("csv");
    cmd_simulate(200, 3, 8, SimParams{}.separation, dir / "data.csv");
    RunManifest m = small_manifest(dir / "out");
    m.simulate = false;
    m.data = (dir / "data.csv").string();
    m.label_col = "label";
    std::ostringstream console;
    const auto outcome = cmd_select(m, console);
    CHECK(outcome.report.dataset_name == "data");
    CHECK(outcome.report.samples == 200);

    m.data = (dir / "missing.csv").string();
    CHECK_THROWS_AS(cmd_select(m, console), Error);
}

TEST_CASE("simulate writes a loadable, deterministic file") {
    const fs::path dir = scratch("simulate");
    cmd_simulate(1000, 3, 0, SimParams{}.separation, dir / "a.csv");
    cmd_simulate(1000, 3, 0, SimParams{}.separation, dir / "b.csv");
    const std::string text = slurp(dir / "a.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1001);
    CHECK(text.substr(0, text.find('\n')) == "x0,x1,x2,label");
    CHECK(text == slurp(dir / "b.csv"));

    const Dataset loaded = load_csv(dir / "a.csv", -1L);
    const Dataset memory = make_sim_dataset(1000, 3, 0);
    CHECK(loaded.features == memory.features);
    CHECK(loaded.labels == memory.labels);
    CHECK_THROWS_AS(cmd_simulate(10, 3, 0, 4.0, dir / "no" / "such" / "dir" / "x.csv"), Error);
}

TEST_CASE("inspect") {
    const fs::path dir = scratch("inspect");
    std::ostringstream console;
    const auto outcome = cmd_select(small_manifest(dir / "run"), console);
    const std::string text = cmd_inspect(dir / "run" / "report.json");
    CHECK(text.find("gamma*: ") != std::string::npos);
    CHECK(text.find(std::string(to_string(outcome.report.interpretation.verdict))) != std::string::npos);

    const std::string full = slurp(dir / "run" / "report.json");
    std::ofstream(dir / "truncated.json") << full.substr(0, 101);
    CHECK_THROWS_WITH_AS(cmd_inspect(dir / "truncated.json"), doctest::Contains("parse error at byte"), Error);

    auto old = nlohmann::json::parse(full);
    old["schema"] = "ndt-select-report/0";
    std::ofstream(dir / "old.json") << old.dump();
    CHECK_THROWS_WITH_AS(cmd_inspect(dir / "old.json"), doctest::Contains("schema version mismatch"), Error);
    CHECK_THROWS_AS(cmd_inspect(dir / "absent.json"), Error);
}
