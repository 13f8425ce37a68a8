#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndtsel/cart.hpp"
#include "ndtsel/datahub.hpp"
#include "ndtsel/ndt.hpp"
#include "ndtsel/trainer.hpp"

namespace ndtsel {

/// {900,...,100} u {90,...,10} u {9,...,1} u {0.9,...,0.1}, decreasing.
std::vector<double> default_gamma_grid();

/// Throws unless the grid is non-empty, positive and strictly decreasing.
void validate_gamma_grid(const std::vector<double>& grid);

struct InterpretThresholds {
    double high_gamma = 100.0;      // gamma* >= this counts as DT-like
    double high_agreement = 0.8;    // mean kappa at gamma* >= this counts as high
};

struct SelectionConfig {
    std::vector<double> grid = default_gamma_grid();
    LinkForm link = LinkForm::h;
    std::size_t iterations = 30;
    TrainConfig train;                       // shuffle_seed is derived per run
    std::optional<std::size_t> depth;        // skips cross-validation when set
    std::vector<std::size_t> depth_grid{1, 2, 3, 4, 5, 6, 7, 8};
    std::size_t cv_folds = 5;
    std::size_t min_leaf = 1;
    OutputInit output = OutputInit::compensated;
    SplitRatios ratios;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
    InterpretThresholds thresholds;
};

nlohmann::json to_json(const SelectionConfig& config);

/// Outcome of training and evaluating NDT_{i,gamma}.
struct RunRecord {
    std::size_t iteration = 0;
    std::size_t gamma_index = 0;
    double gamma = 0.0;
    double gamma2 = 0.0;
    double ndt_performance = 0.0;
    double agreement = 0.0;
    double dt_performance = 0.0;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
    double best_val_loss = 0.0;
    bool failed = false;
    std::string failure;
};

struct Aggregates {
    std::vector<double> mean_perf;
    std::vector<double> sd_perf;
    std::vector<double> mean_agreement;
    std::vector<double> sd_agreement;
    std::vector<std::size_t> counts;  // successful runs per gamma
    double dt_mean = 0.0;
    double dt_sd = 0.0;
    std::size_t iterations = 0;
    bool single_iteration = false;  // standard deviations reported as 0
};

/// Means and sample standard deviations per grid value, plus the mean DT
/// performance over distinct iterations. Failed records are skipped.
Aggregates aggregate(const std::vector<RunRecord>& records, const std::vector<double>& grid);

/// Index of the grid value with the highest mean; ties go to the largest gamma.
std::size_t argmax_gamma(const std::vector<double>& mean_perf, const std::vector<double>& grid);

enum class Verdict { flexible_promising, rigid_adequate, nearly_equivalent };
std::string_view to_string(Verdict verdict);

struct Interpretation {
    Verdict verdict = Verdict::nearly_equivalent;
    std::string headline;
    std::string note;
};

struct SelectionReport {
    std::string dataset_name;
    std::size_t samples = 0;
    std::size_t features = 0;
    std::size_t classes = 0;
    SelectionConfig config;
    std::size_t depth = 0;
    bool depth_from_cv = false;

    Aggregates curves;
    std::vector<double> dt_performance;  // per iteration
    std::vector<std::size_t> leaf_counts;
    std::vector<DecisionTree> trees;
    std::vector<RunRecord> records;
    std::size_t failures = 0;

    std::size_t gamma_star_index = 0;
    double gamma_star = 0.0;
    double performance_diff = 0.0;     // mean DT - mean NDT(gamma*)
    double performance_diff_sd = 0.0;  // over paired iterations
    bool improvement = false;
    Interpretation interpretation;
};

Interpretation interpret(double gamma_star, bool improvement, double agreement_at_star,
                         const InterpretThresholds& thresholds);
Interpretation interpret(const SelectionReport& report);

/// Runs the full sweep: depth selection, then for every iteration a fresh
/// stratified split and seed tree, and for every gamma a compiled, trained and
/// evaluated NDT. Runs execute on `config.jobs` threads; results do not depend
/// on the thread count.
SelectionReport run_selection(const Dataset& dataset, const SelectionConfig& config);

inline constexpr const char* kReportSchema = "ndt-select-report/1";

nlohmann::json to_json(const SelectionReport& report);
std::string curves_csv(const SelectionReport& report);
std::string runs_csv(const SelectionReport& report);

/// Header plus one summary row: gamma*, P(DT), P(NDT(gamma*)), diff, Impr., A.
std::string summary_table(const SelectionReport& report);

}  // namespace ndtsel
