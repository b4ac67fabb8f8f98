// NEON lane for aarch64. Mirrors the AVX2 lane structure with 2-wide f64
// vectors.

#include "ald/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace ald::kern::neon {

double reduce_sum(const double* x, size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    for (; i + 2 <= n; i += 2)
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double reduce_max(const double* x, size_t n) {
    size_t i = 0;
    double best = x[0];
    if (n >= 2) {
        float64x2_t vbest = vld1q_f64(x);
        i = 2;
        for (; i + 2 <= n; i += 2)
            vbest = vmaxq_f64(vbest, vld1q_f64(x + i));
        best = vmaxvq_f64(vbest);
    }
    for (; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

double dot(const double* a, const double* b, size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2)
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const double* x, double* y, size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void relu(const double* x, double* y, size_t n) {
    float64x2_t zero = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vmaxq_f64(zero, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, size_t n) {
    float64x2_t zero = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
        uint64x2_t v = vandq_u64(mask, vreinterpretq_u64_f64(vld1q_f64(dy + i)));
        vst1q_f64(dx + i, vreinterpretq_f64_u64(v));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

const KernelTable kTable = {
    &reduce_sum, &reduce_max, &dot, &axpy, &scale, &relu, &relu_backward,
};

} // namespace ald::kern::neon

#endif // aarch64
