#include "ndtsel/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ndtsel/error.hpp"
#include "ndtsel/text.hpp"

namespace ndtsel {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file '" + path.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string verdict_text(const SelectionReport& report) {
    std::ostringstream out;
    const auto& interp = report.interpretation;
    const std::size_t s = report.gamma_star_index;
    out << "verdict: " << to_string(interp.verdict) << '\n'
        << interp.headline << '\n';
    if (!interp.note.empty()) out << "note: " << interp.note << '\n';
    out << "gamma*: " << format_double(report.gamma_star) << '\n'
        << "improvement: " << (report.improvement ? "yes" : "no") << '\n'
        << "mean DT performance: " << format_double(report.curves.dt_mean) << '\n'
        << "mean NDT(gamma*) performance: " << format_double(report.curves.mean_perf[s]) << '\n'
        << "mean agreement at gamma*: " << format_double(report.curves.mean_agreement[s]) << '\n';
    return out.str();
}

}  // namespace

SelectOutcome cmd_select(const RunManifest& manifest, std::ostream& console) {
    const Dataset dataset = load_dataset(manifest);
    const SelectionConfig config = to_selection_config(manifest);
    SelectOutcome outcome{run_selection(dataset, config), manifest.out};

    std::error_code ec;
    std::filesystem::create_directories(outcome.out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + manifest.out + "': " + ec.message());

    nlohmann::json report = to_json(outcome.report);
    report["manifest"] = to_json(manifest);
    write_text(outcome.out_dir / "report.json", report.dump(2) + "\n");
    write_text(outcome.out_dir / "curves.csv", curves_csv(outcome.report));
    write_text(outcome.out_dir / "runs.csv", runs_csv(outcome.report));
    write_text(outcome.out_dir / "verdict.txt", verdict_text(outcome.report));
    write_text(outcome.out_dir / "manifest.json", to_json(manifest).dump(2) + "\n");

    console << summary_table(outcome.report);
    if (outcome.report.failures > 0) console << "warning: " << outcome.report.failures << " run(s) failed and were excluded\n";
    return outcome;
}

void cmd_simulate(std::size_t n, std::size_t d, std::uint64_t seed, double separation,
                  const std::filesystem::path& out_path) {
    write_csv(make_sim_dataset(n, d, seed, SimParams{separation}), out_path);
}

std::string cmd_inspect(const std::filesystem::path& report_path) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw Error("cannot read report '" + report_path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();

    nlohmann::json report;
    try {
        report = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("malformed report: parse error at byte " + std::to_string(e.byte));
    }
    if (!report.is_object() || !report.contains("schema") || !report["schema"].is_string()) {
        throw Error("malformed report: missing schema version");
    }
    const std::string schema = report["schema"];
    if (schema != kReportSchema) {
        throw Error("report schema version mismatch: expected " + std::string(kReportSchema) + ", found " + schema);
    }

    try {
        std::ostringstream out;
        const auto& curves = report.at("curves");
        const auto gammas = curves.at("gamma").get<std::vector<double>>();
        const auto perf = curves.at("mean_performance").get<std::vector<double>>();
        const auto agree = curves.at("mean_agreement").get<std::vector<double>>();
        if (gammas.empty() || perf.size() != gammas.size() || agree.size() != gammas.size()) {
            throw Error("malformed report: inconsistent curves");
        }
        const auto [perf_lo, perf_hi] = std::minmax_element(perf.begin(), perf.end());
        const auto [agree_lo, agree_hi] = std::minmax_element(agree.begin(), agree.end());
        auto at = [&](auto it, const std::vector<double>& v) {
            return format_double(*it) + " at gamma=" + format_double(gammas[static_cast<std::size_t>(it - v.begin())]);
        };

        const auto& dataset = report.at("dataset");
        out << "dataset: " << dataset.at("name").get<std::string>() << " (N=" << dataset.at("samples") << ", d="
            << dataset.at("features") << ", C=" << dataset.at("classes") << ")\n"
            << "verdict: " << report.at("verdict").at("kind").get<std::string>() << '\n'
            << "  " << report.at("verdict").at("headline").get<std::string>() << '\n';
        if (const auto note = report.at("verdict").at("note").get<std::string>(); !note.empty()) {
            out << "  note: " << note << '\n';
        }
        out << "gamma*: " << format_double(report.at("gamma_star").get<double>()) << '\n'
            << "improvement: " << (report.at("improvement").get<bool>() ? "yes" : "no") << '\n'
            << "DT performance: " << format_double(report.at("dt").at("mean_performance").get<double>()) << '\n'
            << "NDT(gamma*) performance: " << format_double(report.at("ndt_star").at("mean_performance").get<double>())
            << '\n'
            << "performance curve: max " << at(perf_hi, perf) << ", min " << at(perf_lo, perf) << '\n'
            << "agreement curve: max " << at(agree_hi, agree) << ", min " << at(agree_lo, agree) << '\n'
            << "tree depth: " << report.at("depth") << (report.at("depth_from_cv").get<bool>() ? " (cross-validated)" : "")
            << '\n'
            << "failed runs: " << report.at("failures") << '\n'
            << "config: " << report.at("config").dump() << '\n';
        if (report.contains("manifest")) out << "manifest: " << report["manifest"].dump() << '\n';
        return out.str();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

}  // namespace ndtsel
