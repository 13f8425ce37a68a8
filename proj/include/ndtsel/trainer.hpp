#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ndtsel/datahub.hpp"
#include "ndtsel/ndt.hpp"

namespace ndtsel {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 0;  // 0 = default_batch_size(|train|)
    std::size_t patience = 20;
    AdamConfig adam;
    std::uint64_t shuffle_seed = 0;
    bool restore_best = true;
    bool clip_gradients = false;
    double clip_norm = 1e3;  // per-array L2 cap when clip_gradients is set
};

/// clamp(2^round(log2(n_train / 16)), 16, 256), never above n_train.
std::size_t default_batch_size(std::size_t n_train);

/// Gradient buffers shaped like the six trainable arrays of NdtParams.
struct NdtGradients {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    Matrix w3;
    std::vector<double> b3;

    static NdtGradients zeros_like(const NdtParams& params);
};

inline constexpr std::array<const char*, 6> kArrayNames{"W1", "b1", "W2", "b2", "W3", "b3"};

std::array<std::span<double>, 6> arrays(NdtParams& params);
std::array<std::span<const double>, 6> arrays(const NdtParams& params);
std::array<std::span<double>, 6> arrays(NdtGradients& grads);
std::array<std::span<const double>, 6> arrays(const NdtGradients& grads);

/// A batch is a list of rows into a feature matrix and its label vector.
struct Batch {
    const Matrix& features;
    std::span<const int> labels;  // indexed by row, like features
    std::span<const std::size_t> rows;
};

/// Mean cross-entropy -(1/B) sum log p[y_i].
double loss(const NdtParams& params, const Batch& batch);

struct LossAndGradient {
    double loss = 0.0;
    NdtGradients grads;
};

/// Exact gradient of loss() with respect to W1, b1, W2, b2, W3, b3.
LossAndGradient grad(const NdtParams& params, const Batch& batch);

struct AdamState {
    NdtGradients m;
    NdtGradients v;
    std::size_t step = 0;

    static AdamState zeros_like(const NdtParams& params);
};

void adam_step(NdtParams& params, const NdtGradients& grads, AdamState& state, const AdamConfig& config);

/// Patience-based stopping rule on a sequence of validation losses. Epochs are
/// 1-based; an epoch improves when its loss is strictly below the best so far.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Records the loss of the next epoch; returns true when training should stop.
    bool observe(double val_loss);

    bool last_improved() const { return last_improved_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }
    std::size_t epochs_seen() const { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
    bool last_improved_ = false;
};

struct TrainLog {
    std::vector<double> train_loss;  // one per epoch run
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
    bool restored_best = false;
};

struct TrainResult {
    NdtParams params;
    TrainLog log;
};

/// Mini-batch Adam on `train_rows` with early stopping on `val_rows`. gamma1 and
/// gamma2 are left untouched. Deterministic for fixed inputs and shuffle_seed.
TrainResult train_ndt(NdtParams params, const Dataset& data, std::span<const std::size_t> train_rows,
                      std::span<const std::size_t> val_rows, const TrainConfig& config);

/// JSON-lines log: one {"epoch","train_loss","val_loss"} object per line.
std::string to_jsonl(const TrainLog& log);

}  // namespace ndtsel
