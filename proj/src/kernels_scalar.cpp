#include "ald/kernels.hpp"

// Reference lane. Plain sequential loops; the SIMD lanes must agree with
// these up to reduction reassociation.

namespace ald::kern::scalar {

double reduce_sum(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double reduce_max(const double* x, size_t n) {
    double best = x[0];
    for (size_t i = 1; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

double dot(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void relu(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

const KernelTable kTable = {
    &reduce_sum, &reduce_max, &dot, &axpy, &scale, &relu, &relu_backward,
};

} // namespace ald::kern::scalar
