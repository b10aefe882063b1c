#include "textcascade/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace textcascade::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double max_scaled_dot_neon(const double* rows, const double* scale, std::size_t row_count,
                           const double* x, std::size_t width) {
    if (row_count == 0) {
        return 0.0;
    }
    double best = dot_neon(rows, x, width) * scale[0];
    for (std::size_t r = 1; r < row_count; ++r) {
        const double value = dot_neon(rows + r * width, x, width) * scale[r];
        if (value > best) {
            best = value;
        }
    }
    return best;
}

}  // namespace

const KernelTable* neon_table() {
    static const KernelTable table{dot_neon, axpy_neon, max_scaled_dot_neon};
    return &table;
}

}  // namespace textcascade::simd

#else

namespace textcascade::simd {
const KernelTable* neon_table() { return nullptr; }
}  // namespace textcascade::simd

#endif
