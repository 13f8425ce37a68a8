#include "ndtsel/kernels.hpp"

#include <immintrin.h>

#include <cassert>
#include <cmath>

namespace ndtsel::kernels {
namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    const std::size_t n = x.size();
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]));
        _mm256_storeu_pd(&y[i], vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void tanh_backward_avx2(std::span<const double> h, std::span<const double> upstream, double gamma,
                        std::span<double> out) {
    assert(h.size() == upstream.size() && h.size() == out.size());
    const std::size_t n = h.size();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d vg = _mm256_set1_pd(gamma);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vh = _mm256_loadu_pd(&h[i]);
        const __m256d slope = _mm256_fnmadd_pd(vh, vh, one);
        const __m256d scaled = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(&upstream[i]), vg), slope);
        _mm256_storeu_pd(&out[i], scaled);
    }
    for (; i < n; ++i) out[i] = upstream[i] * gamma * (1.0 - h[i] * h[i]);
}

void adam_update_avx2(std::span<double> param, std::span<const double> grad, std::span<double> m,
                      std::span<double> v, const AdamCoefficients& c) {
    assert(param.size() == grad.size() && m.size() == grad.size() && v.size() == grad.size());
    const std::size_t n = param.size();
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d one_b1 = _mm256_set1_pd(1.0 - c.beta1);
    const __m256d one_b2 = _mm256_set1_pd(1.0 - c.beta2);
    const __m256d bias1 = _mm256_set1_pd(c.bias1);
    const __m256d bias2 = _mm256_set1_pd(c.bias2);
    const __m256d lr = _mm256_set1_pd(c.lr);
    const __m256d eps = _mm256_set1_pd(c.epsilon);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(&grad[i]);
        const __m256d vm = _mm256_fmadd_pd(b1, _mm256_loadu_pd(&m[i]), _mm256_mul_pd(one_b1, g));
        const __m256d vv =
            _mm256_fmadd_pd(b2, _mm256_loadu_pd(&v[i]), _mm256_mul_pd(one_b2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(&m[i], vm);
        _mm256_storeu_pd(&v[i], vv);
        const __m256d m_hat = _mm256_div_pd(vm, bias1);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vv, bias2)), eps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), denom);
        _mm256_storeu_pd(&param[i], _mm256_sub_pd(_mm256_loadu_pd(&param[i]), step));
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        param[i] -= c.lr * (m[i] / c.bias1) / (std::sqrt(v[i] / c.bias2) + c.epsilon);
    }
}

}  // namespace

const KernelSet& avx2_set() {
    static const KernelSet set{"avx2", dot_avx2, axpy_avx2, tanh_backward_avx2, adam_update_avx2};
    return set;
}

}  // namespace ndtsel::kernels
