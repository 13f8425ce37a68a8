#include "ndtsel/manifest.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <thread>

#include "ndtsel/error.hpp"
#include "ndtsel/text.hpp"

namespace ndtsel {

CategoricalPolicy parse_categorical_policy(std::string_view name) {
    if (name == "drop") return CategoricalPolicy::drop;
    if (name == "one-hot" || name == "one_hot") return CategoricalPolicy::one_hot;
    throw Error("unknown categorical policy '" + std::string(name) + "' (expected drop|one-hot)");
}

std::string_view to_string(CategoricalPolicy policy) {
    return policy == CategoricalPolicy::drop ? "drop" : "one-hot";
}

namespace {

using Setter = std::function<void(RunManifest&, const nlohmann::json&)>;

template <typename T>
T as(const nlohmann::json& value, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!value.is_boolean()) throw Error("");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<long long>() < 0)) throw Error("");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!value.is_number()) throw Error("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!value.is_string()) throw Error("");
        }
        return value.get<T>();
    } catch (const std::exception&) {
        throw Error("manifest key '" + key + "' has an invalid value: " + value.dump());
    }
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data", [](RunManifest& m, const nlohmann::json& v) {
             if (v.is_null()) m.data.reset();
             else m.data = as<std::string>(v, "data");
         }},
        {"simulate", [](RunManifest& m, const nlohmann::json& v) { m.simulate = as<bool>(v, "simulate"); }},
        {"sim_n", [](RunManifest& m, const nlohmann::json& v) { m.sim_n = as<std::size_t>(v, "sim_n"); }},
        {"sim_d", [](RunManifest& m, const nlohmann::json& v) { m.sim_d = as<std::size_t>(v, "sim_d"); }},
        {"sim_seed", [](RunManifest& m, const nlohmann::json& v) {
             if (v.is_null()) m.sim_seed.reset();
             else m.sim_seed = as<std::uint64_t>(v, "sim_seed");
         }},
        {"sim_separation", [](RunManifest& m, const nlohmann::json& v) { m.sim_separation = as<double>(v, "sim_separation"); }},
        {"label_col", [](RunManifest& m, const nlohmann::json& v) {
             if (v.is_number_integer()) m.label_col = std::to_string(v.get<long>());
             else m.label_col = as<std::string>(v, "label_col");
         }},
        {"has_header", [](RunManifest& m, const nlohmann::json& v) { m.has_header = as<bool>(v, "has_header"); }},
        {"delimiter", [](RunManifest& m, const nlohmann::json& v) {
             m.delimiter = as<std::string>(v, "delimiter");
             if (m.delimiter.size() != 1) throw Error("manifest key 'delimiter' must be a single character");
         }},
        {"categorical", [](RunManifest& m, const nlohmann::json& v) {
             m.categorical = parse_categorical_policy(as<std::string>(v, "categorical"));
         }},
        {"depth", [](RunManifest& m, const nlohmann::json& v) {
             if (v.is_null()) m.depth.reset();
             else m.depth = as<std::size_t>(v, "depth");
         }},
        {"depth_grid", [](RunManifest& m, const nlohmann::json& v) {
             m.depth_grid = as<std::vector<std::size_t>>(v, "depth_grid");
         }},
        {"cv_folds", [](RunManifest& m, const nlohmann::json& v) { m.cv_folds = as<std::size_t>(v, "cv_folds"); }},
        {"min_leaf", [](RunManifest& m, const nlohmann::json& v) { m.min_leaf = as<std::size_t>(v, "min_leaf"); }},
        {"gamma_grid", [](RunManifest& m, const nlohmann::json& v) {
             if (v.is_null()) m.gamma_grid.reset();
             else m.gamma_grid = as<std::vector<double>>(v, "gamma_grid");
         }},
        {"link", [](RunManifest& m, const nlohmann::json& v) { m.link = parse_link_form(as<std::string>(v, "link")); }},
        {"iterations", [](RunManifest& m, const nlohmann::json& v) { m.iterations = as<std::size_t>(v, "iterations"); }},
        {"epochs", [](RunManifest& m, const nlohmann::json& v) { m.epochs = as<std::size_t>(v, "epochs"); }},
        {"batch_size", [](RunManifest& m, const nlohmann::json& v) { m.batch_size = as<std::size_t>(v, "batch_size"); }},
        {"patience", [](RunManifest& m, const nlohmann::json& v) { m.patience = as<std::size_t>(v, "patience"); }},
        {"learning_rate", [](RunManifest& m, const nlohmann::json& v) { m.learning_rate = as<double>(v, "learning_rate"); }},
        {"beta1", [](RunManifest& m, const nlohmann::json& v) { m.beta1 = as<double>(v, "beta1"); }},
        {"beta2", [](RunManifest& m, const nlohmann::json& v) { m.beta2 = as<double>(v, "beta2"); }},
        {"epsilon", [](RunManifest& m, const nlohmann::json& v) { m.epsilon = as<double>(v, "epsilon"); }},
        {"restore_best", [](RunManifest& m, const nlohmann::json& v) { m.restore_best = as<bool>(v, "restore_best"); }},
        {"clip_gradients", [](RunManifest& m, const nlohmann::json& v) { m.clip_gradients = as<bool>(v, "clip_gradients"); }},
        {"seed", [](RunManifest& m, const nlohmann::json& v) { m.seed = as<std::uint64_t>(v, "seed"); }},
        {"jobs", [](RunManifest& m, const nlohmann::json& v) { m.jobs = as<std::size_t>(v, "jobs"); }},
        {"out", [](RunManifest& m, const nlohmann::json& v) { m.out = as<std::string>(v, "out"); }},
        {"paper_literal_output", [](RunManifest& m, const nlohmann::json& v) {
             m.paper_literal_output = as<bool>(v, "paper_literal_output");
         }},
        {"high_gamma_threshold", [](RunManifest& m, const nlohmann::json& v) {
             m.high_gamma_threshold = as<double>(v, "high_gamma_threshold");
         }},
        {"high_agreement_threshold", [](RunManifest& m, const nlohmann::json& v) {
             m.high_agreement_threshold = as<double>(v, "high_agreement_threshold");
         }},
    };
    return table;
}

}  // namespace

RunManifest apply_overrides(const RunManifest& base, const nlohmann::json& overrides) {
    if (!overrides.is_object()) throw Error("manifest must be a JSON object");
    RunManifest m = base;
    const auto& table = setters();
    for (const auto& [key, value] : overrides.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw Error("unknown manifest key '" + key + "'");
        it->second(m, value);
    }
    return m;
}

RunManifest manifest_from_json(const nlohmann::json& j) { return apply_overrides(RunManifest{}, j); }

nlohmann::json to_json(const RunManifest& m) {
    return {{"data", m.data ? nlohmann::json(*m.data) : nlohmann::json(nullptr)},
            {"simulate", m.simulate},
            {"sim_n", m.sim_n},
            {"sim_d", m.sim_d},
            {"sim_seed", m.sim_seed ? nlohmann::json(*m.sim_seed) : nlohmann::json(nullptr)},
            {"sim_separation", m.sim_separation},
            {"label_col", m.label_col},
            {"has_header", m.has_header},
            {"delimiter", m.delimiter},
            {"categorical", std::string(to_string(m.categorical))},
            {"depth", m.depth ? nlohmann::json(*m.depth) : nlohmann::json(nullptr)},
            {"depth_grid", m.depth_grid},
            {"cv_folds", m.cv_folds},
            {"min_leaf", m.min_leaf},
            {"gamma_grid", m.gamma_grid ? nlohmann::json(*m.gamma_grid) : nlohmann::json(nullptr)},
            {"link", std::string(to_string(m.link))},
            {"iterations", m.iterations},
            {"epochs", m.epochs},
            {"batch_size", m.batch_size},
            {"patience", m.patience},
            {"learning_rate", m.learning_rate},
            {"beta1", m.beta1},
            {"beta2", m.beta2},
            {"epsilon", m.epsilon},
            {"restore_best", m.restore_best},
            {"clip_gradients", m.clip_gradients},
            {"seed", m.seed},
            {"jobs", m.jobs},
            {"out", m.out},
            {"paper_literal_output", m.paper_literal_output},
            {"high_gamma_threshold", m.high_gamma_threshold},
            {"high_agreement_threshold", m.high_agreement_threshold}};
}

std::size_t resolve_jobs(const RunManifest& manifest) {
    if (manifest.jobs > 0) return manifest.jobs;
    if (const char* env = std::getenv("NDT_SELECT_JOBS")) {
        const auto value = parse_finite(env);
        if (!value || *value < 1 || *value != static_cast<double>(static_cast<std::size_t>(*value))) {
            throw Error("NDT_SELECT_JOBS must be a positive integer");
        }
        return static_cast<std::size_t>(*value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SelectionConfig to_selection_config(const RunManifest& m) {
    SelectionConfig c;
    if (m.gamma_grid) c.grid = *m.gamma_grid;
    c.link = m.link;
    c.iterations = m.iterations;
    c.train.epochs = m.epochs;
    c.train.batch_size = m.batch_size;
    c.train.patience = m.patience;
    c.train.adam = AdamConfig{m.learning_rate, m.beta1, m.beta2, m.epsilon};
    c.train.restore_best = m.restore_best;
    c.train.clip_gradients = m.clip_gradients;
    c.depth = m.depth;
    c.depth_grid = m.depth_grid;
    c.cv_folds = m.cv_folds;
    c.min_leaf = m.min_leaf;
    c.output = m.paper_literal_output ? OutputInit::paper_literal : OutputInit::compensated;
    c.master_seed = m.seed;
    c.jobs = resolve_jobs(m);
    c.thresholds = InterpretThresholds{m.high_gamma_threshold, m.high_agreement_threshold};
    return c;
}

Dataset load_dataset(const RunManifest& m) {
    if (m.simulate && m.data) throw Error("manifest sets both 'data' and 'simulate'");
    if (m.simulate) {
        return make_sim_dataset(m.sim_n, m.sim_d, m.sim_seed.value_or(m.seed), SimParams{m.sim_separation});
    }
    if (!m.data) throw Error("no dataset: set 'data' or 'simulate'");
    LabelColumn label = m.label_col;
    if (const auto index = parse_finite(m.label_col);
        index && *index == static_cast<double>(static_cast<long>(*index))) {
        label = static_cast<long>(*index);
    }
    return load_csv(*m.data, label, CsvOptions{m.delimiter.at(0), m.has_header}, m.categorical);
}

}  // namespace ndtsel
