// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if anything fails. Criterion 6 needs NDT_MUSHROOM_CSV pointing at
// the UCI mushroom data (label column from NDT_MUSHROOM_LABEL, default 0).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "ndtsel/commands.hpp"
#include "ndtsel/metrics.hpp"
#include "ndtsel/selector.hpp"
#include "ndtsel/text.hpp"
#include "support.hpp"

using namespace ndtsel;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome crisp_limit() {
    Rng rng(1001);
    std::size_t trees = 0, checked = 0, mismatched = 0;
    while (trees < 50) {
        const Dataset ds = testing::structured_dataset(rng, 150 + rng.below(250), 1 + rng.below(6), 2 + rng.below(4));
        const DecisionTree tree = fit_tree(ds, TreeConfig{1 + rng.below(6), 1});
        if (tree.leaf_count() < 2) continue;
        ++trees;
        const NdtParams p = compile(tree, 1e4, 1e4);
        Matrix probes(ds.size() + 200, ds.dimension());
        for (std::size_t i = 0; i < ds.size(); ++i) std::ranges::copy(ds.features.row(i), probes.row(i).begin());
        for (std::size_t i = ds.size(); i < probes.rows(); ++i) {
            for (double& v : probes.row(i)) v = 2.0 * rng.normal();
        }
        for (std::size_t i = 0; i < probes.rows(); ++i) {
            const auto x = probes.row(i);
            if (testing::min_margin(tree, x) < 1e-3) continue;
            ++checked;
            mismatched += argmax(forward(p, x).probabilities) != predict_tree(tree, x).label;
        }
    }
    return verdict(mismatched == 0 && checked > 0, std::to_string(trees) + " trees, " + std::to_string(checked) +
                                                       " points, " + std::to_string(mismatched) + " mismatches");
}

Outcome gradient_check() {
    double worst = 0.0, worst_plain = 0.0;
    std::size_t instances = 0;
    for (double gamma : {0.5, 9.0, 900.0}) {
        Rng rng(static_cast<std::uint64_t>(gamma * 10) + 7);
        std::size_t done = 0;
        while (done < 20) {
            Dataset ds = testing::structured_dataset(rng, 20 + rng.below(30), 1 + rng.below(4), 2 + rng.below(3));
            const DecisionTree tree = fit_tree(ds, TreeConfig{1 + rng.below(4), 1});
            if (tree.leaf_count() < 2) continue;
            if (gamma > 100) {
                // Keep some first-layer units off their plateau.
                for (std::size_t i = 0; i < ds.size(); ++i) {
                    const SplitNode& node = tree.nodes[rng.below(tree.nodes.size())];
                    ds.features(i, node.feature) = node.threshold + (rng.uniform() - 0.5) * 4e-3;
                }
            }
            NdtParams p = compile(tree, gamma, gamma_link(gamma));
            for (double& v : p.w2.flat()) v += 0.2 * rng.normal();
            for (double& v : p.w3.flat()) v += 0.2 * rng.normal();
            for (double& v : p.b3) v += 0.2 * rng.normal();
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (rng.uniform() < 0.7) rows.push_back(i);
            }
            if (rows.empty()) rows.push_back(0);
            const Batch batch{ds.features, ds.labels, rows};
            const auto analytic = grad(p, batch).grads;
            const auto extrapolated = testing::richardson_gradient(p, batch, 1e-5);
            const auto plain = testing::finite_difference_gradient(p, batch, 1e-5);
            const auto a = arrays(analytic), e = arrays(extrapolated), c = arrays(plain);
            for (std::size_t k = 0; k < a.size(); ++k) {
                worst = std::max(worst, testing::relative_error(a[k], e[k]));
                worst_plain = std::max(worst_plain, testing::relative_error(a[k], c[k]));
            }
            ++done;
            ++instances;
        }
    }
    return verdict(worst < 1e-4, std::to_string(instances) + " instances, max rel err " + fmt(worst) +
                                     " (plain central difference: " + fmt(worst_plain) + ")");
}

Outcome kappa_suite() {
    bool ok = true;
    const std::vector<int> a = {0, 1, 2, 1, 0, 2};
    ok &= cohens_kappa(a, a) == 1.0;
    ok &= std::abs(cohens_kappa(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1})) < 1e-15;
    ok &= std::abs(cohens_kappa(std::vector<int>{0, 1, 0, 1}, std::vector<int>{1, 0, 1, 0}) + 1.0) < 1e-15;
    Rng rng(3);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t classes = 2 + rng.below(5), n = 2 + rng.below(60);
        std::vector<int> x(n), y(n), perm(classes);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<int>(rng.below(classes));
            y[i] = rng.uniform() < 0.5 ? x[i] : static_cast<int>(rng.below(classes));
        }
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<int>(perm));
        std::vector<int> px(n), py(n);
        for (std::size_t i = 0; i < n; ++i) {
            px[i] = perm[x[i]];
            py[i] = perm[y[i]];
        }
        violations += std::abs(cohens_kappa(x, y) - cohens_kappa(px, py)) > 1e-12;
    }
    ok &= violations == 0;
    return verdict(ok, "relabeling violations " + std::to_string(violations) + "/1000");
}

Outcome link_properties() {
    const auto grid = default_gamma_grid();
    bool ok = log_link(0.0) == 0.05 && grid.size() == 36;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ok &= gamma_link(grid[i]) < grid[i];
        if (i > 0) ok &= grid[i] < grid[i - 1];
    }
    return verdict(ok, "g(0)=" + format_double(log_link(0.0)) + ", h(900)=" + fmt(gamma_link(900.0)) + ", grid size " +
                           std::to_string(grid.size()));
}

SelectionReport sim_report() {
    SelectionConfig cfg;
    cfg.iterations = 10;
    cfg.jobs = worker_count();
    return run_selection(make_sim_dataset(1000, 3, 0), cfg);
}

Outcome sim_reproduction(const SelectionReport& r) {
    const std::size_t s = r.gamma_star_index;
    const double gap = r.curves.mean_perf[s] - r.curves.dt_mean;
    const double kappa = r.curves.mean_agreement[s];
    const bool ok = r.improvement && r.gamma_star <= 20.0 && gap >= 0.03 && kappa >= 0.6;
    return verdict(ok, "depth " + std::to_string(r.depth) + ", DT " + fmt(r.curves.dt_mean) + " -> NDT " +
                           fmt(r.curves.mean_perf[s]) + ", gamma* " + format_double(r.gamma_star) + ", gap " +
                           fmt(gap) + ", A " + fmt(kappa));
}

Outcome mushroom() {
    const char* path = std::getenv("NDT_MUSHROOM_CSV");
    if (path == nullptr || *path == '\0') return {Status::skip, "set NDT_MUSHROOM_CSV to run"};
    const char* label = std::getenv("NDT_MUSHROOM_LABEL");
    RunManifest m;
    m.data = path;
    m.label_col = label != nullptr ? label : "0";
    m.categorical = CategoricalPolicy::one_hot;
    m.depth = 5;
    m.iterations = 10;
    m.jobs = worker_count();
    SelectionConfig cfg = to_selection_config(m);
    cfg.jobs = worker_count();
    const SelectionReport r = run_selection(load_dataset(m), cfg);
    const double ndt = r.curves.mean_perf[r.gamma_star_index];
    const bool ok = std::abs(r.curves.dt_mean - 0.983) <= 0.01 && ndt >= 0.995 && r.improvement;
    return verdict(ok, "DT " + fmt(r.curves.dt_mean) + " -> NDT " + fmt(ndt) + ", gamma* " +
                           format_double(r.gamma_star) + ", A " + fmt(r.curves.mean_agreement[r.gamma_star_index]));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Outcome reproducibility() {
    const fs::path out = fs::temp_directory_path() / "ndtsel_acceptance_repro";
    fs::remove_all(out);
    RunManifest m;
    m.simulate = true;
    m.iterations = 2;
    m.gamma_grid = std::vector<double>{900, 90, 9, 0.9, 0.1};
    m.seed = 5;
    m.jobs = worker_count();
    m.out = out.string();
    std::ostringstream quiet;
    cmd_select(m, quiet);
    const std::string first = slurp(out / "curves.csv");
    cmd_select(m, quiet);
    const std::string second = slurp(out / "curves.csv");
    return verdict(!first.empty() && first == second, std::to_string(first.size()) + " bytes compared");
}

Outcome completeness() {
    SelectionConfig cfg;
    cfg.iterations = 3;
    cfg.jobs = worker_count();
    const SelectionReport r = run_selection(make_sim_dataset(1000, 3, 0), cfg);
    const std::size_t g = cfg.grid.size();
    bool ok = r.records.size() + r.failures == 3 * g && r.failures == 0;

    std::vector<testing::Welford> perf(g), agree(g);
    for (const auto& rec : r.records) {
        if (rec.failed) continue;
        perf[rec.gamma_index].add(rec.ndt_performance);
        agree[rec.gamma_index].add(rec.agreement);
    }
    testing::Welford dt;
    for (double v : r.dt_performance) dt.add(v);
    double worst = std::abs(dt.mean - r.curves.dt_mean);
    for (std::size_t j = 0; j < g; ++j) {
        worst = std::max(worst, std::abs(perf[j].mean - r.curves.mean_perf[j]));
        worst = std::max(worst, std::abs(agree[j].mean - r.curves.mean_agreement[j]));
    }
    ok &= worst <= 1e-12;
    return verdict(ok, std::to_string(r.records.size()) + " records, " + std::to_string(r.failures) +
                           " failures, max mean deviation " + fmt(worst));
}

Outcome high_gamma(const SelectionReport& r) {
    const double m900 = r.curves.mean_perf[0];
    const double pooled = std::sqrt((r.curves.sd_perf[0] * r.curves.sd_perf[0] + r.curves.dt_sd * r.curves.dt_sd) / 2.0);
    const double diff = std::abs(m900 - r.curves.dt_mean);
    return verdict(r.config.grid[0] == 900.0 && diff <= 3.0 * pooled,
                   "|M900 - MDT| = " + fmt(diff) + ", 3 pooled sd = " + fmt(3.0 * pooled));
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::optional<SelectionReport> sim;
    auto sim_once = [&]() -> const SelectionReport& {
        if (!sim) sim = sim_report();
        return *sim;
    };
    const std::vector<Criterion> criteria = {
        {1, "crisp-limit oracle", crisp_limit},
        {2, "gradient check", gradient_check},
        {3, "kappa suite", kappa_suite},
        {4, "gamma link properties", link_properties},
        {5, "sim reproduction", [&] { return sim_reproduction(sim_once()); }},
        {6, "mushroom", mushroom},
        {7, "reproducibility", reproducibility},
        {8, "sweep completeness", completeness},
        {9, "high-gamma sanity", [&] { return high_gamma(sim_once()); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
        failures += o.status == Status::fail;
        std::cout << tag << " criterion " << c.id << " (" << c.name << "): " << o.detail << " [" << fmt(secs) << " s]"
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
