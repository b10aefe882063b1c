#include "textcascade/simd/kernels.hpp"

#if defined(TEXTCASCADE_HAVE_AVX2)
#include <immintrin.h>

namespace textcascade::simd {
namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double max_scaled_dot_avx2(const double* rows, const double* scale, std::size_t row_count,
                           const double* x, std::size_t width) {
    if (row_count == 0) {
        return 0.0;
    }
    double best = dot_avx2(rows, x, width) * scale[0];
    for (std::size_t r = 1; r < row_count; ++r) {
        const double value = dot_avx2(rows + r * width, x, width) * scale[r];
        if (value > best) {
            best = value;
        }
    }
    return best;
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{dot_avx2, axpy_avx2, max_scaled_dot_avx2};
    return &table;
}

}  // namespace textcascade::simd

#else

namespace textcascade::simd {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace textcascade::simd

#endif
