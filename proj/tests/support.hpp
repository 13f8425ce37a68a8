#pragma once

// Test-only helpers: random data generators and oracles that are written
// independently of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include "ndtsel/cart.hpp"
#include "ndtsel/datahub.hpp"
#include "ndtsel/ndt.hpp"
#include "ndtsel/random.hpp"
#include "ndtsel/trainer.hpp"

namespace testing {

using namespace ndtsel;

inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t classes) {
    Dataset ds;
    ds.name = "random";
    ds.features = Matrix(n, d);
    for (double& v : ds.features.flat()) v = rng.normal();
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i < classes ? i : rng.below(classes));
    return ds;
}

/// Labels depend on the features so fitted trees grow to full depth.
inline Dataset structured_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t classes) {
    Dataset ds = random_dataset(rng, n, d, classes);
    std::vector<double> w(d);
    for (double& v : w) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += w[j] * ds.features(i, j) + 0.5 * std::sin(3.0 * ds.features(i, j));
        const double u = s + 0.3 * rng.normal();
        ds.labels[i] = static_cast<int>(std::fmod(std::abs(std::floor(u * 1.5)), static_cast<double>(classes)));
    }
    for (std::size_t c = 0; c < classes; ++c) ds.labels[c] = static_cast<int>(c);
    return ds;
}

/// Tree routing by plain recursion over the node structure.
inline std::size_t recursive_leaf(const DecisionTree& tree, NodeRef at, std::span<const double> x) {
    if (at.is_leaf) return at.index;
    const SplitNode& node = tree.nodes[at.index];
    return recursive_leaf(tree, x[node.feature] > node.threshold ? node.right : node.left, x);
}

/// Smallest |x[f] - t| over every split of the tree.
inline double min_margin(const DecisionTree& tree, std::span<const double> x) {
    double m = INFINITY;
    for (const auto& node : tree.nodes) m = std::min(m, std::abs(x[node.feature] - node.threshold));
    return m;
}

/// Exhaustive Gini search over all (feature, midpoint) candidates, evaluating
/// each candidate directly from the class proportions of both sides.
struct BruteSplit {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = INFINITY;
};

inline BruteSplit brute_force_root_split(const Dataset& ds, const std::vector<std::size_t>& rows) {
    auto gini = [&](const std::vector<std::size_t>& part) {
        std::map<int, double> counts;
        for (std::size_t r : part) counts[ds.labels[r]] += 1.0;
        double g = 1.0;
        for (const auto& [label, count] : counts) g -= (count / part.size()) * (count / part.size());
        return g;
    };
    BruteSplit best;
    for (std::size_t f = 0; f < ds.dimension(); ++f) {
        std::vector<double> values;
        for (std::size_t r : rows) values.push_back(ds.features(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            const double t = (values[k] + values[k + 1]) / 2.0;
            std::vector<std::size_t> left, right;
            for (std::size_t r : rows) (ds.features(r, f) <= t ? left : right).push_back(r);
            const double n = static_cast<double>(rows.size());
            const double imp = left.size() / n * gini(left) + right.size() / n * gini(right);
            if (imp < best.impurity - 1e-12) best = {f, t, imp};
        }
    }
    return best;
}

/// Central finite differences of the batch loss for every entry of every
/// trainable array.
inline NdtGradients finite_difference_gradient(const NdtParams& params, const Batch& batch, double step) {
    NdtParams probe = params;
    NdtGradients out = NdtGradients::zeros_like(params);
    auto p = arrays(probe);
    auto g = arrays(out);
    for (std::size_t a = 0; a < p.size(); ++a) {
        for (std::size_t i = 0; i < p[a].size(); ++i) {
            const double saved = p[a][i];
            p[a][i] = saved + step;
            const double up = loss(probe, batch);
            p[a][i] = saved - step;
            const double down = loss(probe, batch);
            p[a][i] = saved;
            g[a][i] = (up - down) / (2.0 * step);
        }
    }
    return out;
}

/// Richardson extrapolation of two central differences (steps h and h/2),
/// which cancels the h^2 truncation term. Needed where tanh is steep.
inline NdtGradients richardson_gradient(const NdtParams& params, const Batch& batch, double step) {
    const NdtGradients coarse = finite_difference_gradient(params, batch, step);
    NdtGradients fine = finite_difference_gradient(params, batch, step / 2.0);
    auto f = arrays(fine);
    const auto c = arrays(coarse);
    for (std::size_t a = 0; a < f.size(); ++a) {
        for (std::size_t i = 0; i < f[a].size(); ++i) f[a][i] = (4.0 * f[a][i] - c[a][i]) / 3.0;
    }
    return fine;
}

/// ||a - b|| / max(||a||, ||b||, floor). The floor keeps arrays whose exact
/// gradient is ~0 (saturated units) from being judged on round-off noise.
inline double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

/// Welford running mean / sample standard deviation.
struct Welford {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double sd() const { return n < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(n - 1)); }
};

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace testing
