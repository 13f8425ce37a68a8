#include "ndtsel/ndt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ndtsel/error.hpp"
#include "ndtsel/kernels.hpp"

namespace ndtsel {

double log_link(double x) {
    // log10(10^0.05 + x) rewritten as 0.05 + log10(1 + x / 10^0.05) so that
    // the floor value at x = 0 is exactly 0.05.
    static const double inv_floor = std::pow(10.0, -0.05);
    return 0.05 + std::log1p(x * inv_floor) / std::numbers::ln10;
}

double gamma_link(double gamma1, LinkForm form) {
    if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) throw Error("gamma_link: gamma1 must be a positive finite number");
    auto g = [](double x) { return log_link(x); };
    switch (form) {
        case LinkForm::identity: return gamma1;
        case LinkForm::sqrt: return std::sqrt(gamma1);
        case LinkForm::g: return g(gamma1);
        case LinkForm::h: return g(g(gamma1));
    }
    throw Error("gamma_link: unknown form");
}

LinkForm parse_link_form(std::string_view name) {
    if (name == "identity") return LinkForm::identity;
    if (name == "sqrt") return LinkForm::sqrt;
    if (name == "g") return LinkForm::g;
    if (name == "h") return LinkForm::h;
    throw Error("unknown link form '" + std::string(name) + "' (expected identity|sqrt|g|h)");
}

std::string_view to_string(LinkForm form) {
    switch (form) {
        case LinkForm::identity: return "identity";
        case LinkForm::sqrt: return "sqrt";
        case LinkForm::g: return "g";
        case LinkForm::h: return "h";
    }
    return "?";
}

NdtParams compile(const DecisionTree& tree, double gamma1, double gamma2, OutputInit output,
                  std::string seed_tree_id) {
    const std::size_t leaves = tree.leaf_count();
    if (leaves < 2) throw Error("degenerate tree: nothing to relax");
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw Error("compile: gammas must be positive");
    const std::size_t splits = tree.internal_count();
    const std::size_t d = tree.dimension;
    const std::size_t classes = tree.class_count;

    NdtParams p;
    p.gamma1 = gamma1;
    p.gamma2 = gamma2;
    p.seed_tree_id = std::move(seed_tree_id);

    p.w1 = Matrix(d, splits);
    p.b1.resize(splits);
    for (std::size_t j = 0; j < splits; ++j) {
        p.w1(tree.nodes[j].feature, j) = 1.0;
        p.b1[j] = -tree.nodes[j].threshold;
    }

    p.w2 = Matrix(splits, leaves);
    p.b2.resize(leaves);
    for (const LeafPath& path : enumerate_paths(tree)) {
        for (const PathStep& step : path.steps) {
            p.w2(step.node, path.leaf) = step.direction == Direction::right ? 1.0 : -1.0;
        }
        p.b2[path.leaf] = -static_cast<double>(path.steps.size()) + 0.5;
    }

    const double n = static_cast<double>(tree.training_size);
    p.w3 = Matrix(leaves, classes);
    p.b3.assign(classes, 0.0);
    for (std::size_t k = 0; k < leaves; ++k) {
        const Leaf& leaf = tree.leaves[k];
        if (output == OutputInit::paper_literal) {
            p.w3(k, static_cast<std::size_t>(leaf.majority_class)) = static_cast<double>(leaf.total()) / n;
            continue;
        }
        for (std::size_t c = 0; c < classes; ++c) {
            p.w3(k, c) = static_cast<double>(leaf.class_counts[c]) / n;
            p.b3[c] += p.w3(k, c);
        }
    }
    return p;
}

void forward_into(const NdtParams& p, std::span<const double> x, ForwardTrace& t) {
    const auto& k = kernels::active();
    t.h1.assign(p.b1.begin(), p.b1.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) k.axpy(x[i], p.w1.row(i), t.h1);
    }
    for (double& v : t.h1) v = std::tanh(p.gamma1 * v);

    t.h2.assign(p.b2.begin(), p.b2.end());
    for (std::size_t j = 0; j < t.h1.size(); ++j) k.axpy(t.h1[j], p.w2.row(j), t.h2);
    for (double& v : t.h2) v = std::tanh(p.gamma2 * v);

    t.scores.assign(p.b3.begin(), p.b3.end());
    for (std::size_t j = 0; j < t.h2.size(); ++j) k.axpy(t.h2[j], p.w3.row(j), t.scores);

    t.probabilities.resize(t.scores.size());
    const double top = *std::max_element(t.scores.begin(), t.scores.end());
    double total = 0.0;
    for (std::size_t c = 0; c < t.scores.size(); ++c) {
        t.probabilities[c] = std::exp(t.scores[c] - top);
        total += t.probabilities[c];
    }
    for (double& v : t.probabilities) v /= total;
}

ForwardTrace forward(const NdtParams& params, std::span<const double> x) {
    if (x.size() != params.input_dim()) throw Error("forward: dimension mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw Error("forward: non-finite input");
    }
    ForwardTrace trace;
    forward_into(params, x, trace);
    return trace;
}

int argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        // Differences at rounding level are ties; a tied leaf vote otherwise
        // depends on summation order.
        const double slack = kTieTolerance * std::max(std::abs(values[i]), std::abs(values[best]));
        if (values[i] > values[best] + slack) best = i;
    }
    return static_cast<int>(best);
}

std::vector<int> predict(const NdtParams& params, const Matrix& x, std::span<const std::size_t> rows) {
    if (x.cols() != params.input_dim()) throw Error("predict: dimension mismatch");
    std::vector<int> out;
    out.reserve(rows.size());
    ForwardTrace trace;
    for (std::size_t r : rows) {
        forward_into(params, x.row(r), trace);
        out.push_back(argmax(trace.probabilities));
    }
    return out;
}

std::vector<int> predict(const NdtParams& params, const Matrix& x) {
    std::vector<std::size_t> rows(x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return predict(params, x, rows);
}

nlohmann::json to_json(const NdtParams& p) {
    auto matrix = [](const Matrix& m) {
        return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()},
                              {"data", std::vector<double>(m.flat().begin(), m.flat().end())}};
    };
    return {{"gamma1", p.gamma1}, {"gamma2", p.gamma2}, {"seed_tree_id", p.seed_tree_id},
            {"w1", matrix(p.w1)}, {"b1", p.b1}, {"w2", matrix(p.w2)}, {"b2", p.b2},
            {"w3", matrix(p.w3)}, {"b3", p.b3}};
}

}  // namespace ndtsel
