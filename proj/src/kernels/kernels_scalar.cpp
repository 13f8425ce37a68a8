#include "ndtsel/kernels.hpp"

#include <cassert>
#include <cmath>

namespace ndtsel::kernels {
namespace {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void tanh_backward_scalar(std::span<const double> h, std::span<const double> upstream, double gamma,
                          std::span<double> out) {
    assert(h.size() == upstream.size() && h.size() == out.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = upstream[i] * gamma * (1.0 - h[i] * h[i]);
}

void adam_update_scalar(std::span<double> param, std::span<const double> grad, std::span<double> m,
                        std::span<double> v, const AdamCoefficients& c) {
    assert(param.size() == grad.size() && m.size() == grad.size() && v.size() == grad.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = m[i] / c.bias1;
        const double v_hat = v[i] / c.bias2;
        param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

}  // namespace

const KernelSet& scalar() {
    static const KernelSet set{"scalar", dot_scalar, axpy_scalar, tanh_backward_scalar, adam_update_scalar};
    return set;
}

}  // namespace ndtsel::kernels
