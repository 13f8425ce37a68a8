#include "ndtsel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ndtsel/error.hpp"
#include "ndtsel/kernels.hpp"
#include "ndtsel/random.hpp"

namespace ndtsel {

std::size_t default_batch_size(std::size_t n_train) {
    const double target = static_cast<double>(n_train) / 16.0;
    std::size_t size = 16;
    if (target > 0.0) {
        const double rounded = std::exp2(std::round(std::log2(target)));
        size = static_cast<std::size_t>(std::clamp(rounded, 16.0, 256.0));
    }
    return std::max<std::size_t>(1, std::min(size, n_train));
}

NdtGradients NdtGradients::zeros_like(const NdtParams& p) {
    return {Matrix(p.w1.rows(), p.w1.cols()), std::vector<double>(p.b1.size()),
            Matrix(p.w2.rows(), p.w2.cols()), std::vector<double>(p.b2.size()),
            Matrix(p.w3.rows(), p.w3.cols()), std::vector<double>(p.b3.size())};
}

std::array<std::span<double>, 6> arrays(NdtParams& p) {
    return {p.w1.flat(), std::span<double>(p.b1), p.w2.flat(), std::span<double>(p.b2), p.w3.flat(),
            std::span<double>(p.b3)};
}
std::array<std::span<const double>, 6> arrays(const NdtParams& p) {
    return {p.w1.flat(), std::span<const double>(p.b1), p.w2.flat(), std::span<const double>(p.b2), p.w3.flat(),
            std::span<const double>(p.b3)};
}
std::array<std::span<double>, 6> arrays(NdtGradients& g) {
    return {g.w1.flat(), std::span<double>(g.b1), g.w2.flat(), std::span<double>(g.b2), g.w3.flat(),
            std::span<double>(g.b3)};
}
std::array<std::span<const double>, 6> arrays(const NdtGradients& g) {
    return {g.w1.flat(), std::span<const double>(g.b1), g.w2.flat(), std::span<const double>(g.b2), g.w3.flat(),
            std::span<const double>(g.b3)};
}

namespace {

void check_batch(const NdtParams& params, const Batch& batch) {
    if (batch.rows.empty()) throw Error("loss: empty batch");
    if (batch.features.cols() != params.input_dim()) throw Error("loss: dimension mismatch");
    for (std::size_t r : batch.rows) {
        if (r >= batch.features.rows() || r >= batch.labels.size()) throw Error("loss: row out of range");
        const int y = batch.labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= params.class_count()) throw Error("loss: label out of range");
    }
}

// -log softmax(scores)[label], computed in log space.
double neg_log_prob(std::span<const double> scores, int label) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - top);
    return -(scores[static_cast<std::size_t>(label)] - top - std::log(total));
}

}  // namespace

double loss(const NdtParams& params, const Batch& batch) {
    check_batch(params, batch);
    ForwardTrace trace;
    double total = 0.0;
    for (std::size_t r : batch.rows) {
        forward_into(params, batch.features.row(r), trace);
        total += neg_log_prob(trace.scores, batch.labels[r]);
    }
    const double mean = total / static_cast<double>(batch.rows.size());
    if (!std::isfinite(mean)) throw Error("non-finite loss");
    return mean;
}

LossAndGradient grad(const NdtParams& params, const Batch& batch) {
    check_batch(params, batch);
    const auto& k = kernels::active();
    LossAndGradient out{0.0, NdtGradients::zeros_like(params)};
    NdtGradients& g = out.grads;
    const double scale = 1.0 / static_cast<double>(batch.rows.size());

    ForwardTrace t;
    std::vector<double> d_scores(params.class_count());
    std::vector<double> d_h2(params.leaf_units());
    std::vector<double> d_z2(params.leaf_units());
    std::vector<double> d_h1(params.split_units());
    std::vector<double> d_z1(params.split_units());

    for (std::size_t r : batch.rows) {
        const auto x = batch.features.row(r);
        const int y = batch.labels[r];
        forward_into(params, x, t);
        out.loss += neg_log_prob(t.scores, y);

        for (std::size_t c = 0; c < d_scores.size(); ++c) {
            d_scores[c] = scale * (t.probabilities[c] - (static_cast<int>(c) == y ? 1.0 : 0.0));
        }
        k.axpy(1.0, d_scores, g.b3);
        for (std::size_t leaf = 0; leaf < d_h2.size(); ++leaf) {
            k.axpy(t.h2[leaf], d_scores, g.w3.row(leaf));
            d_h2[leaf] = k.dot(params.w3.row(leaf), d_scores);
        }

        k.tanh_backward(t.h2, d_h2, params.gamma2, d_z2);
        k.axpy(1.0, d_z2, g.b2);
        for (std::size_t j = 0; j < d_h1.size(); ++j) {
            k.axpy(t.h1[j], d_z2, g.w2.row(j));
            d_h1[j] = k.dot(params.w2.row(j), d_z2);
        }

        k.tanh_backward(t.h1, d_h1, params.gamma1, d_z1);
        k.axpy(1.0, d_z1, g.b1);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] != 0.0) k.axpy(x[i], d_z1, g.w1.row(i));
        }
    }
    out.loss *= scale;
    if (!std::isfinite(out.loss)) throw Error("non-finite loss");
    return out;
}

AdamState AdamState::zeros_like(const NdtParams& params) {
    return {NdtGradients::zeros_like(params), NdtGradients::zeros_like(params), 0};
}

void adam_step(NdtParams& params, const NdtGradients& grads, AdamState& state, const AdamConfig& config) {
    auto p = arrays(params);
    const auto g = arrays(grads);
    auto m = arrays(state.m);
    auto v = arrays(state.v);
    for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a].size() != g[a].size() || m[a].size() != g[a].size() || v[a].size() != g[a].size()) {
            throw Error(std::string("adam_step: shape mismatch in ") + kArrayNames[a]);
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const kernels::AdamCoefficients coeffs{config.lr, config.beta1, config.beta2, config.epsilon,
                                           1.0 - std::pow(config.beta1, t), 1.0 - std::pow(config.beta2, t)};
    const auto& k = kernels::active();
    for (std::size_t a = 0; a < p.size(); ++a) k.adam_update(p[a], g[a], m[a], v[a], coeffs);
}

bool EarlyStopping::observe(double val_loss) {
    ++epoch_;
    last_improved_ = val_loss < best_loss_;
    if (last_improved_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch_;
    }
    return epoch_ - best_epoch_ >= patience_;
}

namespace {

void clip(NdtGradients& grads, double max_norm) {
    const auto& k = kernels::active();
    for (auto array : arrays(grads)) {
        const double norm = std::sqrt(k.dot(array, array));
        if (norm > max_norm) {
            const double factor = max_norm / norm;
            for (double& v : array) v *= factor;
        }
    }
}

}  // namespace

TrainResult train_ndt(NdtParams params, const Dataset& data, std::span<const std::size_t> train_rows,
                      std::span<const std::size_t> val_rows, const TrainConfig& config) {
    if (train_rows.empty() || val_rows.empty()) throw Error("train_ndt: train and validation sets must be non-empty");
    if (config.epochs < 1) throw Error("train_ndt: epochs must be >= 1");
    if (config.patience < 1) throw Error("train_ndt: patience must be >= 1");
    const std::size_t batch_size = config.batch_size == 0 ? default_batch_size(train_rows.size()) : config.batch_size;
    if (batch_size > train_rows.size()) throw Error("train_ndt: batch size exceeds training set size");

    const Batch validation{data.features, data.labels, val_rows};
    std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
    Rng rng(config.shuffle_seed);
    AdamState state = AdamState::zeros_like(params);
    EarlyStopping stopper(config.patience);
    NdtParams best = params;
    TrainLog log;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t count = std::min(batch_size, order.size() - start);
            const std::span<const std::size_t> rows(order.data() + start, count);
            LossAndGradient step = grad(params, Batch{data.features, data.labels, rows});
            if (config.clip_gradients) clip(step.grads, config.clip_norm);
            adam_step(params, step.grads, state, config.adam);
            epoch_loss += step.loss * static_cast<double>(count);
        }
        log.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
        const double val = loss(params, validation);
        log.val_loss.push_back(val);
        const bool stop = stopper.observe(val);
        if (stopper.last_improved()) best = params;
        log.stopped_epoch = epoch;
        if (stop) break;
    }
    log.best_epoch = stopper.best_epoch();
    if (config.restore_best) {
        params = std::move(best);
        log.restored_best = true;
    }
    return {std::move(params), std::move(log)};
}

std::string to_jsonl(const TrainLog& log) {
    std::ostringstream out;
    for (std::size_t e = 0; e < log.val_loss.size(); ++e) {
        out << nlohmann::json{{"epoch", e + 1}, {"train_loss", log.train_loss[e]}, {"val_loss", log.val_loss[e]}}.dump()
            << '\n';
    }
    return out.str();
}

}  // namespace ndtsel
