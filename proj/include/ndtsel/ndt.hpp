#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ndtsel/cart.hpp"
#include "ndtsel/matrix.hpp"

namespace ndtsel {

/// Weights of a neural decision tree with d inputs, K leaves and C classes.
///
///   h1 = tanh(gamma1 * (W1^T x  + b1))     W1: d x (K-1)
///   h2 = tanh(gamma2 * (W2^T h1 + b2))     W2: (K-1) x K
///   scores = W3^T h2 + b3                  W3: K x C
///   probabilities = softmax(scores)
///
/// gamma1 and gamma2 are fixed hyperparameters, never trained.
struct NdtParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    Matrix w3;
    std::vector<double> b3;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    std::string seed_tree_id;

    std::size_t input_dim() const { return w1.rows(); }
    std::size_t split_units() const { return w1.cols(); }
    std::size_t leaf_units() const { return w2.cols(); }
    std::size_t class_count() const { return w3.cols(); }
};

/// Candidate maps from gamma1 to gamma2. g(x) = log10(10^0.05 + x) and
/// h = g o g; g(0) = 0.05 is the floor that keeps the second layer from
/// flattening out.
enum class LinkForm { identity, sqrt, g, h };

/// g(x) = log10(10^0.05 + x) for x >= 0.
double log_link(double x);

double gamma_link(double gamma1, LinkForm form = LinkForm::h);
LinkForm parse_link_form(std::string_view name);
std::string_view to_string(LinkForm form);

enum class OutputInit {
    /// W3[k][c] = N_{k,c}/N and b3[c] = sum_k W3[k][c]; reproduces the leaf
    /// majority vote in the crisp limit where h2 is in {-1,+1}^K.
    compensated,
    /// W3[k][majority(k)] = N_k/N, zeros elsewhere, b3 = 0.
    paper_literal,
};

/// Builds the network from a tree with at least two leaves. Second-layer
/// weights are +1 where a leaf's path takes a node's right branch (where
/// x[f] - t > 0) and -1 for the left branch.
NdtParams compile(const DecisionTree& tree, double gamma1, double gamma2,
                  OutputInit output = OutputInit::compensated, std::string seed_tree_id = {});

struct ForwardTrace {
    std::vector<double> h1;
    std::vector<double> h2;
    std::vector<double> scores;
    std::vector<double> probabilities;
};

ForwardTrace forward(const NdtParams& params, std::span<const double> x);

/// Allocation-free variant used inside training loops. Skips input validation.
void forward_into(const NdtParams& params, std::span<const double> x, ForwardTrace& trace);

/// Relative gap below which two values count as tied in argmax.
inline constexpr double kTieTolerance = 1e-12;

/// Index of the largest value; ties (within kTieTolerance) go to the lowest index.
int argmax(std::span<const double> values);

std::vector<int> predict(const NdtParams& params, const Matrix& x);
std::vector<int> predict(const NdtParams& params, const Matrix& x, std::span<const std::size_t> rows);

nlohmann::json to_json(const NdtParams& params);

}  // namespace ndtsel
