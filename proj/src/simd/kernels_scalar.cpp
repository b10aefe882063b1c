#include "textcascade/simd/kernels.hpp"

namespace textcascade::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double max_scaled_dot_scalar(const double* rows, const double* scale, std::size_t row_count,
                             const double* x, std::size_t width) {
    if (row_count == 0) {
        return 0.0;
    }
    double best = dot_scalar(rows, x, width) * scale[0];
    for (std::size_t r = 1; r < row_count; ++r) {
        const double value = dot_scalar(rows + r * width, x, width) * scale[r];
        if (value > best) {
            best = value;
        }
    }
    return best;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot_scalar, axpy_scalar, max_scaled_dot_scalar};
    return table;
}

}  // namespace textcascade::simd
