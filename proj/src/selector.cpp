#include "ndtsel/selector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ndtsel/error.hpp"
#include "ndtsel/metrics.hpp"
#include "ndtsel/random.hpp"
#include "ndtsel/text.hpp"

namespace ndtsel {

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t { kStreamCv = 1, kStreamSplit = 2, kStreamShuffle = 3 };

double mean_of(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

std::vector<double> default_gamma_grid() {
    std::vector<double> grid;
    for (double scale : {100.0, 10.0, 1.0}) {
        for (int k = 9; k >= 1; --k) grid.push_back(k * scale);
    }
    for (int k = 9; k >= 1; --k) grid.push_back(k / 10.0);
    return grid;
}

void validate_gamma_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw Error("gamma grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw Error("gamma grid values must be positive");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw Error("gamma grid must be strictly decreasing");
    }
}

nlohmann::json to_json(const SelectionConfig& c) {
    nlohmann::json train{{"epochs", c.train.epochs},
                         {"batch_size", c.train.batch_size},
                         {"patience", c.train.patience},
                         {"learning_rate", c.train.adam.lr},
                         {"beta1", c.train.adam.beta1},
                         {"beta2", c.train.adam.beta2},
                         {"epsilon", c.train.adam.epsilon},
                         {"restore_best", c.train.restore_best},
                         {"clip_gradients", c.train.clip_gradients},
                         {"clip_norm", c.train.clip_norm}};
    return {{"gamma_grid", c.grid},
            {"link", std::string(to_string(c.link))},
            {"iterations", c.iterations},
            {"train", train},
            {"depth", c.depth ? nlohmann::json(*c.depth) : nlohmann::json(nullptr)},
            {"depth_grid", c.depth_grid},
            {"cv_folds", c.cv_folds},
            {"min_leaf", c.min_leaf},
            {"output_init", c.output == OutputInit::compensated ? "compensated" : "paper_literal"},
            {"split_ratios", {c.ratios.train, c.ratios.validation, c.ratios.test}},
            {"master_seed", c.master_seed},
            {"high_gamma_threshold", c.thresholds.high_gamma},
            {"high_agreement_threshold", c.thresholds.high_agreement}};
}

Aggregates aggregate(const std::vector<RunRecord>& records, const std::vector<double>& grid) {
    const std::size_t g = grid.size();
    std::vector<std::vector<double>> perf(g);
    std::vector<std::vector<double>> agree(g);
    std::vector<std::pair<std::size_t, double>> dt;
    std::set<std::size_t> seen;
    for (const RunRecord& r : records) {
        if (r.gamma_index >= g) throw Error("aggregate: record gamma index outside grid");
        if (seen.insert(r.iteration).second) dt.emplace_back(r.iteration, r.dt_performance);
        if (r.failed) continue;
        perf[r.gamma_index].push_back(r.ndt_performance);
        agree[r.gamma_index].push_back(r.agreement);
    }
    Aggregates out;
    for (std::size_t j = 0; j < g; ++j) {
        if (perf[j].empty()) throw Error("aggregate: no successful records for gamma " + format_double(grid[j]));
        const double mp = mean_of(perf[j]);
        const double ma = mean_of(agree[j]);
        out.mean_perf.push_back(mp);
        out.sd_perf.push_back(sample_sd(perf[j], mp));
        out.mean_agreement.push_back(ma);
        out.sd_agreement.push_back(sample_sd(agree[j], ma));
        out.counts.push_back(perf[j].size());
    }
    std::sort(dt.begin(), dt.end());
    std::vector<double> dt_values;
    for (const auto& [iteration, value] : dt) dt_values.push_back(value);
    out.iterations = dt_values.size();
    out.dt_mean = mean_of(dt_values);
    out.dt_sd = sample_sd(dt_values, out.dt_mean);
    out.single_iteration = out.iterations < 2;
    return out;
}

std::size_t argmax_gamma(const std::vector<double>& mean_perf, const std::vector<double>& grid) {
    if (mean_perf.size() != grid.size() || grid.empty()) throw Error("argmax_gamma: incomplete curve");
    std::size_t best = 0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        if (mean_perf[j] > mean_perf[best] || (mean_perf[j] == mean_perf[best] && grid[j] > grid[best])) best = j;
    }
    return best;
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::flexible_promising: return "flexible_promising";
        case Verdict::rigid_adequate: return "rigid_adequate";
        case Verdict::nearly_equivalent: return "nearly_equivalent";
    }
    return "?";
}

Interpretation interpret(double gamma_star, bool improvement, double agreement_at_star,
                         const InterpretThresholds& thresholds) {
    const bool high_gamma = gamma_star >= thresholds.high_gamma;
    const bool high_agreement = agreement_at_star >= thresholds.high_agreement;
    Interpretation out;
    if (improvement && !high_gamma) {
        out.verdict = Verdict::flexible_promising;
        out.headline = "flexible family (NN-like) promising: relaxing the tree boundaries improved performance";
        if (high_agreement) {
            out.note = "agreement with the seed trees is still high; the gain comes at a modest departure from the tree";
        }
    } else if (improvement || high_agreement) {
        out.verdict = Verdict::nearly_equivalent;
        out.headline = "families nearly equivalent: weigh interpretability against the small performance difference";
        if (improvement) out.note = "the best relaxed model stays close to the tree (high gamma*)";
    } else {
        out.verdict = Verdict::rigid_adequate;
        out.headline = "rigid family (DT-like) adequate: relaxing the tree boundaries did not improve performance";
    }
    return out;
}

Interpretation interpret(const SelectionReport& report) {
    return interpret(report.gamma_star, report.improvement, report.curves.mean_agreement[report.gamma_star_index],
                     report.config.thresholds);
}

namespace {

struct IterationContext {
    DataSplit split;
    DecisionTree tree;
    std::vector<int> tree_test_predictions;
    std::vector<int> test_truth;
    double dt_performance = 0.0;
};

RunRecord run_one(const Dataset& dataset, const SelectionConfig& config, const IterationContext& ctx,
                  std::size_t iteration, std::size_t gamma_index) {
    RunRecord rec;
    rec.iteration = iteration;
    rec.gamma_index = gamma_index;
    rec.gamma = config.grid[gamma_index];
    rec.dt_performance = ctx.dt_performance;
    try {
        rec.gamma2 = gamma_link(rec.gamma, config.link);
        NdtParams init = compile(ctx.tree, rec.gamma, rec.gamma2, config.output,
                                 "iteration-" + std::to_string(iteration));
        TrainConfig train = config.train;
        train.shuffle_seed = derive_seed(config.master_seed, kStreamShuffle, iteration, gamma_index);
        TrainResult fitted = train_ndt(std::move(init), dataset, ctx.split.train, ctx.split.validation, train);
        const auto pred = predict(fitted.params, dataset.features, ctx.split.test);
        rec.ndt_performance = accuracy(pred, ctx.test_truth);
        rec.agreement = cohens_kappa(pred, ctx.tree_test_predictions);
        rec.best_epoch = fitted.log.best_epoch;
        rec.stopped_epoch = fitted.log.stopped_epoch;
        rec.best_val_loss = fitted.log.val_loss.at(fitted.log.best_epoch - 1);
    } catch (const Error& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    return rec;
}

}  // namespace

SelectionReport run_selection(const Dataset& dataset, const SelectionConfig& config) {
    validate(dataset);
    validate_gamma_grid(config.grid);
    if (config.iterations < 1) throw Error("run_selection: iterations must be >= 1");

    SelectionReport report;
    report.dataset_name = dataset.name;
    report.samples = dataset.size();
    report.features = dataset.dimension();
    report.classes = dataset.class_count();
    report.config = config;
    if (config.depth) {
        report.depth = *config.depth;
    } else {
        report.depth = select_depth_cv(dataset, config.depth_grid, config.cv_folds,
                                       derive_seed(config.master_seed, kStreamCv), config.min_leaf);
        report.depth_from_cv = true;
    }

    std::vector<IterationContext> contexts(config.iterations);
    for (std::size_t i = 0; i < config.iterations; ++i) {
        IterationContext& ctx = contexts[i];
        ctx.split = stratified_split(dataset, config.ratios, derive_seed(config.master_seed, kStreamSplit, i));
        ctx.tree = fit_tree(dataset, ctx.split.train, TreeConfig{report.depth, config.min_leaf});
        ctx.tree_test_predictions = predict_tree(ctx.tree, dataset.features, ctx.split.test);
        for (std::size_t r : ctx.split.test) ctx.test_truth.push_back(dataset.labels[r]);
        ctx.dt_performance = accuracy(ctx.tree_test_predictions, ctx.test_truth);
        report.dt_performance.push_back(ctx.dt_performance);
        report.leaf_counts.push_back(ctx.tree.leaf_count());
    }

    const std::size_t n_grid = config.grid.size();
    const std::size_t n_tasks = config.iterations * n_grid;
    std::vector<RunRecord> records(n_tasks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t task = next++; task < n_tasks; task = next++) {
            try {
                const std::size_t i = task / n_grid;
                records[task] = run_one(dataset, config, contexts[i], i, task % n_grid);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next = n_tasks;
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(config.jobs, 1, n_tasks);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (auto& ctx : contexts) report.trees.push_back(std::move(ctx.tree));
    report.records = std::move(records);
    report.failures = static_cast<std::size_t>(
        std::count_if(report.records.begin(), report.records.end(), [](const RunRecord& r) { return r.failed; }));
    report.curves = aggregate(report.records, config.grid);
    report.gamma_star_index = argmax_gamma(report.curves.mean_perf, config.grid);
    report.gamma_star = config.grid[report.gamma_star_index];
    report.performance_diff = report.curves.dt_mean - report.curves.mean_perf[report.gamma_star_index];
    report.improvement = report.curves.mean_perf[report.gamma_star_index] > report.curves.dt_mean;

    std::vector<double> diffs;
    for (const RunRecord& r : report.records) {
        if (r.gamma_index == report.gamma_star_index && !r.failed) diffs.push_back(r.dt_performance - r.ndt_performance);
    }
    report.performance_diff_sd = sample_sd(diffs, mean_of(diffs));
    report.interpretation = interpret(report);
    return report;
}

nlohmann::json to_json(const SelectionReport& r) {
    nlohmann::json records = nlohmann::json::array();
    for (const RunRecord& rec : r.records) {
        nlohmann::json j{{"iteration", rec.iteration}, {"gamma_index", rec.gamma_index}, {"gamma", rec.gamma},
                         {"gamma2", rec.gamma2}, {"dt_performance", rec.dt_performance}, {"failed", rec.failed}};
        if (rec.failed) {
            j["failure"] = rec.failure;
        } else {
            j["ndt_performance"] = rec.ndt_performance;
            j["agreement"] = rec.agreement;
            j["best_epoch"] = rec.best_epoch;
            j["stopped_epoch"] = rec.stopped_epoch;
            j["best_val_loss"] = rec.best_val_loss;
        }
        records.push_back(std::move(j));
    }
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : r.trees) trees.push_back(to_json(tree));

    const auto& c = r.curves;
    std::vector<double> gamma2;
    for (double g : r.config.grid) gamma2.push_back(gamma_link(g, r.config.link));
    return {{"schema", kReportSchema},
            {"dataset", {{"name", r.dataset_name}, {"samples", r.samples}, {"features", r.features}, {"classes", r.classes}}},
            {"config", to_json(r.config)},
            {"depth", r.depth},
            {"depth_from_cv", r.depth_from_cv},
            {"curves",
             {{"gamma", r.config.grid},
              {"gamma2", gamma2},
              {"mean_performance", c.mean_perf},
              {"sd_performance", c.sd_perf},
              {"mean_agreement", c.mean_agreement},
              {"sd_agreement", c.sd_agreement},
              {"successful_runs", c.counts}}},
            {"dt", {{"mean_performance", c.dt_mean}, {"sd_performance", c.dt_sd}, {"per_iteration", r.dt_performance},
                    {"leaf_counts", r.leaf_counts}}},
            {"single_iteration", c.single_iteration},
            {"gamma_star", r.gamma_star},
            {"gamma_star_index", r.gamma_star_index},
            {"ndt_star", {{"mean_performance", c.mean_perf[r.gamma_star_index]},
                          {"sd_performance", c.sd_perf[r.gamma_star_index]},
                          {"mean_agreement", c.mean_agreement[r.gamma_star_index]},
                          {"sd_agreement", c.sd_agreement[r.gamma_star_index]}}},
            {"performance_diff", r.performance_diff},
            {"performance_diff_sd", r.performance_diff_sd},
            {"improvement", r.improvement},
            {"failures", r.failures},
            {"verdict", {{"kind", std::string(to_string(r.interpretation.verdict))},
                         {"headline", r.interpretation.headline},
                         {"note", r.interpretation.note}}},
            {"records", records},
            {"trees", trees}};
}

std::string curves_csv(const SelectionReport& r) {
    std::ostringstream out;
    out << "gamma,mean_perf,sd_perf,mean_agreement,sd_agreement\n";
    for (std::size_t j = 0; j < r.config.grid.size(); ++j) {
        out << format_double(r.config.grid[j]) << ',' << format_double(r.curves.mean_perf[j]) << ','
            << format_double(r.curves.sd_perf[j]) << ',' << format_double(r.curves.mean_agreement[j]) << ','
            << format_double(r.curves.sd_agreement[j]) << '\n';
    }
    return out.str();
}

std::string runs_csv(const SelectionReport& r) {
    std::ostringstream out;
    out << "iteration,gamma,perf,agreement,dt_perf\n";
    for (const RunRecord& rec : r.records) {
        out << rec.iteration << ',' << format_double(rec.gamma) << ',';
        if (!rec.failed) out << format_double(rec.ndt_performance) << ',' << format_double(rec.agreement);
        else out << ',';
        out << ',' << format_double(rec.dt_performance) << '\n';
    }
    return out.str();
}

std::string summary_table(const SelectionReport& r) {
    const std::size_t s = r.gamma_star_index;
    auto cell = [](double mean, double sd) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f (%.3f)", mean, sd);
        return std::string(buf);
    };
    char line[512];
    std::ostringstream out;
    std::snprintf(line, sizeof(line), "%-16s %9s %9s %6s %8s %-15s %-15s %-16s %-5s %-15s\n", "dataset", "#features",
                  "#samples", "depth", "gamma*", "P(DT)", "P(NDT(gamma*))", "P diff.", "Impr.", "A");
    out << line;
    std::snprintf(line, sizeof(line), "%-16s %9zu %9zu %6zu %8s %-15s %-15s %-16s %-5s %-15s\n", r.dataset_name.c_str(),
                  r.features, r.samples, r.depth, format_double(r.gamma_star).c_str(),
                  cell(r.curves.dt_mean, r.curves.dt_sd).c_str(),
                  cell(r.curves.mean_perf[s], r.curves.sd_perf[s]).c_str(),
                  cell(r.performance_diff, r.performance_diff_sd).c_str(), r.improvement ? "yes" : "no",
                  cell(r.curves.mean_agreement[s], r.curves.sd_agreement[s]).c_str());
    out << line;
    return out.str();
}

}  // namespace ndtsel
