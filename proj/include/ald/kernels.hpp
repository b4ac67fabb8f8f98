#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ald::kern {

// Hot inner loops of the pipeline (convolution rows, SGD updates, score
// reductions) in double precision. A scalar reference implementation always
// exists; AVX2 and NEON variants are selected at runtime and are
// equivalence-tested against the scalar lane.
//
// The environment variable ALD_KERNELS (scalar|avx2|neon|auto) overrides the
// automatic pick. Results are deterministic per lane; different lanes may
// round differently in reductions.

enum class Lane { scalar, avx2, neon };

const char* lane_name(Lane lane);
bool lane_supported(Lane lane);
Lane active_lane();
// Throws ald::ConfigError when the lane is not supported on this host.
void set_lane(Lane lane);
void set_lane(std::string_view name); // "scalar", "avx2", "neon" or "auto"

double reduce_sum(const double* x, size_t n);
double reduce_max(const double* x, size_t n); // n >= 1
double dot(const double* a, const double* b, size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, size_t n);
// x *= a
void scale(double a, double* x, size_t n);
// y = max(x, 0)
void relu(const double* x, double* y, size_t n);
// dx = (x > 0) ? dy : 0
void relu_backward(const double* x, const double* dy, double* dx, size_t n);

// Per-lane entry points, exposed for equivalence tests.
struct KernelTable {
    double (*reduce_sum)(const double*, size_t);
    double (*reduce_max)(const double*, size_t);
    double (*dot)(const double*, const double*, size_t);
    void (*axpy)(double, const double*, double*, size_t);
    void (*scale)(double, double*, size_t);
    void (*relu)(const double*, double*, size_t);
    void (*relu_backward)(const double*, const double*, double*, size_t);
};

const KernelTable& table_for(Lane lane);

} // namespace ald::kern
