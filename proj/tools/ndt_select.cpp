// ndt-select: model family selection by progressive relaxation of decision
// trees into neural decision trees.
//
//   ndt-select select   --simulate --seed 0 --iterations 10 --out runs/sim
//   ndt-select select   --data mushroom.csv --label-col 0 --categorical one-hot --depth 5
//   ndt-select simulate --n 1000 --d 3 --seed 0 --out sim_1000_3.csv
//   ndt-select inspect  runs/sim/report.json

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ndtsel/commands.hpp"
#include "ndtsel/error.hpp"
#include "ndtsel/text.hpp"

namespace {

nlohmann::json parse_list(const std::string& text, const std::string& flag, bool integral) {
    nlohmann::json values = nlohmann::json::array();
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto value = ndtsel::parse_finite(item);
        if (!value) throw ndtsel::Error("invalid value '" + item + "' in " + flag);
        if (integral) {
            if (*value < 0 || *value != static_cast<double>(static_cast<std::size_t>(*value))) {
                throw ndtsel::Error("invalid integer '" + item + "' in " + flag);
            }
            values.push_back(static_cast<std::size_t>(*value));
        } else {
            values.push_back(*value);
        }
    }
    if (values.empty()) throw ndtsel::Error(flag + " is empty");
    return values;
}

nlohmann::json read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ndtsel::Error("cannot read manifest '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ndtsel::Error("malformed manifest: parse error at byte " + std::to_string(e.byte));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model family selection with neural decision trees"};
    app.require_subcommand(1);

    auto* select = app.add_subcommand("select", "Run the gamma sweep and write a selection report");
    std::string manifest_path, data, label_col, delimiter, categorical, depth_grid, gamma_grid, link, out;
    bool simulate = false, no_header = false, paper_literal = false;
    std::size_t depth = 0, iterations = 0, epochs = 0, batch_size = 0, patience = 0, jobs = 0;
    std::uint64_t seed = 0;
    auto* o_manifest = select->add_option("--manifest", manifest_path, "JSON manifest; flags override its keys");
    auto* o_data = select->add_option("--data", data, "Input CSV");
    auto* o_simulate = select->add_flag("--simulate", simulate, "Use the synthetic sim_1000_3 dataset");
    auto* o_label = select->add_option("--label-col", label_col, "Label column name or index (default: last)");
    auto* o_no_header = select->add_flag("--no-header", no_header, "CSV has no header row");
    auto* o_delim = select->add_option("--delimiter", delimiter, "CSV field delimiter");
    auto* o_cat = select->add_option("--categorical", categorical, "Categorical columns: drop|one-hot");
    auto* o_depth = select->add_option("--depth", depth, "Tree depth (skips cross-validation)");
    auto* o_depth_grid = select->add_option("--depth-grid", depth_grid, "Comma-separated depths for cross-validation");
    auto* o_gamma_grid = select->add_option("--gamma-grid", gamma_grid, "Comma-separated decreasing gamma values");
    auto* o_link = select->add_option("--link", link, "gamma2 link: identity|sqrt|g|h");
    auto* o_iter = select->add_option("--iterations", iterations, "Resampling iterations");
    auto* o_epochs = select->add_option("--epochs", epochs, "Training epochs");
    auto* o_batch = select->add_option("--batch-size", batch_size, "Mini-batch size (0 = size-dependent default)");
    auto* o_patience = select->add_option("--patience", patience, "Early-stopping patience in epochs");
    auto* o_seed = select->add_option("--seed", seed, "Master seed");
    auto* o_jobs = select->add_option("--jobs", jobs, "Worker threads (default: NDT_SELECT_JOBS or all cores)");
    auto* o_out = select->add_option("--out", out, "Output directory");
    auto* o_literal = select->add_flag("--paper-literal-output", paper_literal,
                                       "Output layer N_k/N on the majority class with zero bias");

    auto* simulate_cmd = app.add_subcommand("simulate", "Write the synthetic dataset as CSV");
    std::size_t sim_n = 1000, sim_d = 3;
    std::uint64_t sim_seed = 0;
    double separation = ndtsel::SimParams{}.separation;
    std::string sim_out;
    simulate_cmd->add_option("--n", sim_n, "Number of instances");
    simulate_cmd->add_option("--d", sim_d, "Number of features");
    simulate_cmd->add_option("--seed", sim_seed, "Random seed");
    simulate_cmd->add_option("--separation", separation, "Distance of the class-1 means from the origin");
    simulate_cmd->add_option("--out", sim_out, "Output CSV path")->required();

    auto* inspect = app.add_subcommand("inspect", "Summarize a report.json");
    std::string report_path;
    inspect->add_option("report", report_path, "Path to report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*select) {
            nlohmann::json base = o_manifest->count() ? read_manifest(manifest_path) : nlohmann::json::object();
            nlohmann::json overrides = nlohmann::json::object();
            if (o_data->count()) {
                overrides["data"] = data;
                overrides["simulate"] = false;
            }
            if (o_simulate->count()) {
                overrides["simulate"] = true;
                overrides["data"] = nullptr;
            }
            if (o_label->count()) overrides["label_col"] = label_col;
            if (o_no_header->count()) overrides["has_header"] = false;
            if (o_delim->count()) overrides["delimiter"] = delimiter;
            if (o_cat->count()) overrides["categorical"] = categorical;
            if (o_depth->count()) overrides["depth"] = depth;
            if (o_depth_grid->count()) overrides["depth_grid"] = parse_list(depth_grid, "--depth-grid", true);
            if (o_gamma_grid->count()) overrides["gamma_grid"] = parse_list(gamma_grid, "--gamma-grid", false);
            if (o_link->count()) overrides["link"] = link;
            if (o_iter->count()) overrides["iterations"] = iterations;
            if (o_epochs->count()) overrides["epochs"] = epochs;
            if (o_batch->count()) overrides["batch_size"] = batch_size;
            if (o_patience->count()) overrides["patience"] = patience;
            if (o_seed->count()) overrides["seed"] = seed;
            if (o_jobs->count()) overrides["jobs"] = jobs;
            if (o_out->count()) overrides["out"] = out;
            if (o_literal->count()) overrides["paper_literal_output"] = true;

            const ndtsel::RunManifest manifest =
                ndtsel::apply_overrides(ndtsel::manifest_from_json(base), overrides);
            ndtsel::cmd_select(manifest, std::cout);
        } else if (*simulate_cmd) {
            ndtsel::cmd_simulate(sim_n, sim_d, sim_seed, separation, sim_out);
        } else if (*inspect) {
            std::cout << ndtsel::cmd_inspect(report_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
