#include "ald/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>

#include "ald/errors.hpp"

namespace ald::kern {

namespace scalar {
extern const KernelTable kTable;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(__aarch64__)
namespace neon {
extern const KernelTable kTable;
}
#endif

const char* lane_name(Lane lane) {
    switch (lane) {
        case Lane::scalar: return "scalar";
        case Lane::avx2: return "avx2";
        case Lane::neon: return "neon";
    }
    return "?";
}

bool lane_supported(Lane lane) {
    switch (lane) {
        case Lane::scalar:
            return true;
        case Lane::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Lane::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table_for(Lane lane) {
    switch (lane) {
#if defined(__x86_64__) || defined(_M_X64)
        case Lane::avx2:
            if (lane_supported(Lane::avx2)) return avx2::kTable;
            break;
#endif
#if defined(__aarch64__)
        case Lane::neon:
            return neon::kTable;
#endif
        default:
            break;
    }
    return scalar::kTable;
}

namespace {

Lane pick_default() {
    if (lane_supported(Lane::avx2)) return Lane::avx2;
    if (lane_supported(Lane::neon)) return Lane::neon;
    return Lane::scalar;
}

struct Dispatch {
    std::atomic<const KernelTable*> table;
    std::atomic<Lane> lane;

    Dispatch() {
        Lane l = pick_default();
        if (const char* env = std::getenv("ALD_KERNELS")) {
            std::string_view v(env);
            if (v == "scalar") l = Lane::scalar;
            else if (v == "avx2" && lane_supported(Lane::avx2)) l = Lane::avx2;
            else if (v == "neon" && lane_supported(Lane::neon)) l = Lane::neon;
            // "auto" or anything unsupported keeps the default pick
        }
        lane = l;
        table = &table_for(l);
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

Lane active_lane() { return dispatch().lane.load(std::memory_order_relaxed); }

void set_lane(Lane lane) {
    if (!lane_supported(lane))
        throw ConfigError(std::string("kernel lane not supported on this host: ") + lane_name(lane));
    dispatch().lane.store(lane, std::memory_order_relaxed);
    dispatch().table.store(&table_for(lane), std::memory_order_relaxed);
}

void set_lane(std::string_view name) {
    if (name == "auto") {
        set_lane(pick_default());
        return;
    }
    if (name == "scalar") return set_lane(Lane::scalar);
    if (name == "avx2") return set_lane(Lane::avx2);
    if (name == "neon") return set_lane(Lane::neon);
    throw ConfigError(std::string("unknown kernel lane: ") + std::string(name));
}

namespace {
inline const KernelTable& t() { return *dispatch().table.load(std::memory_order_relaxed); }
} // namespace

double reduce_sum(const double* x, size_t n) { return t().reduce_sum(x, n); }
double reduce_max(const double* x, size_t n) { return t().reduce_max(x, n); }
double dot(const double* a, const double* b, size_t n) { return t().dot(a, b, n); }
void axpy(double a, const double* x, double* y, size_t n) { t().axpy(a, x, y, n); }
void scale(double a, double* x, size_t n) { t().scale(a, x, n); }
void relu(const double* x, double* y, size_t n) { t().relu(x, y, n); }
void relu_backward(const double* x, const double* dy, double* dx, size_t n) {
    t().relu_backward(x, dy, dx, n);
}

} // namespace ald::kern
