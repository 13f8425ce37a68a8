#pragma once

// Data-parallel inner loops of the NDT forward/backward passes and the Adam
// update. Every kernel has a scalar reference implementation; vector variants
// are selected once at runtime from the host CPU features and are tested for
// equivalence against the reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace ndtsel::kernels {

struct AdamCoefficients {
    double lr;
    double beta1;
    double beta2;
    double epsilon;
    double bias1;  // 1 - beta1^t
    double bias2;  // 1 - beta2^t
};

struct KernelSet {
    std::string_view name;

    double (*dot)(std::span<const double> a, std::span<const double> b);

    // y += alpha * x
    void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);

    // out[i] = upstream[i] * gamma * (1 - h[i]^2), the derivative of tanh(gamma*z)
    // expressed through its output h.
    void (*tanh_backward)(std::span<const double> h, std::span<const double> upstream, double gamma,
                          std::span<double> out);

    void (*adam_update)(std::span<double> param, std::span<const double> grad, std::span<double> m,
                        std::span<double> v, const AdamCoefficients& c);
};

const KernelSet& scalar();

/// Returns nullptr when the build or the host lacks AVX2+FMA.
const KernelSet* avx2();

/// The set used by the library. Chosen on first use: AVX2 when available,
/// unless the environment variable NDT_SELECT_KERNELS is set to "scalar".
const KernelSet& active();

}  // namespace ndtsel::kernels
