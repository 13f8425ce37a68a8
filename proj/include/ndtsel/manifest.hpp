#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndtsel/datahub.hpp"
#include "ndtsel/selector.hpp"

namespace ndtsel {

/// Complete, serializable description of one `select` run. Command-line flags
/// are overrides of these keys; the resolved manifest is echoed next to the
/// report so the run can be repeated exactly.
struct RunManifest {
    std::optional<std::string> data;  // CSV path; empty means simulate
    bool simulate = false;
    std::size_t sim_n = 1000;
    std::size_t sim_d = 3;
    std::optional<std::uint64_t> sim_seed;  // defaults to seed
    double sim_separation = SimParams{}.separation;

    std::string label_col = "-1";  // header name or integer index (negative from the end)
    bool has_header = true;
    std::string delimiter = ",";
    CategoricalPolicy categorical = CategoricalPolicy::drop;

    std::optional<std::size_t> depth;
    std::vector<std::size_t> depth_grid{1, 2, 3, 4, 5, 6, 7, 8};
    std::size_t cv_folds = 5;
    std::size_t min_leaf = 1;

    std::optional<std::vector<double>> gamma_grid;  // default grid when unset
    LinkForm link = LinkForm::h;
    std::size_t iterations = 30;

    std::size_t epochs = 100;
    std::size_t batch_size = 0;  // 0 = size-dependent default
    std::size_t patience = 20;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool restore_best = true;
    bool clip_gradients = false;

    std::uint64_t seed = 0;
    std::size_t jobs = 0;  // 0 = NDT_SELECT_JOBS or hardware concurrency
    std::string out = "ndt-select-out";
    bool paper_literal_output = false;
    double high_gamma_threshold = 100.0;
    double high_agreement_threshold = 0.8;
};

/// Rejects unknown keys and ill-typed values, naming the offending key.
RunManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunManifest& manifest);

/// Applies `overrides` (same key space) on top of `base`.
RunManifest apply_overrides(const RunManifest& base, const nlohmann::json& overrides);

/// Worker count: manifest value, else NDT_SELECT_JOBS, else hardware concurrency.
std::size_t resolve_jobs(const RunManifest& manifest);

SelectionConfig to_selection_config(const RunManifest& manifest);

/// Loads the CSV or generates the synthetic dataset named by the manifest.
Dataset load_dataset(const RunManifest& manifest);

CategoricalPolicy parse_categorical_policy(std::string_view name);
std::string_view to_string(CategoricalPolicy policy);

}  // namespace ndtsel
