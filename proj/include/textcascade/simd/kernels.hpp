#pragma once

// Data-parallel inner loops shared by every scorer. Each kernel has a scalar
// reference and vectorized variants; the active variant is chosen once at
// startup from the CPU features and can be pinned for reproducibility runs.

#include <cstddef>
#include <span>
#include <string_view>

namespace textcascade::simd {

enum class Level { scalar, avx2, neon };

std::string_view level_name(Level level);

/// Parses "scalar", "avx2", "neon" or "auto". Throws std::invalid_argument.
Level parse_level(std::string_view name);

bool level_supported(Level level);

/// Best level the running CPU supports.
Level detected_level();

Level active_level();

/// Throws std::invalid_argument if the CPU does not support `level`.
void set_level(Level level);

/// Function table for one instruction-set variant.
struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // max over rows r of dot(rows[r], x) * scale[r]; rows is row-major.
    double (*max_scaled_dot)(const double* rows, const double* scale, std::size_t row_count,
                             const double* x, std::size_t width);
};

const KernelTable& scalar_table();
// Null when the variant was not compiled in.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable& table(Level level);

// Dispatched front ends. Lengths are checked by the callers that own the
// shapes; these only assert in debug builds.

double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Largest `dot(row_r, x) * scale[r]` over the rows of a row-major block.
/// Returns 0 for an empty block.
double max_scaled_dot(std::span<const double> rows, std::span<const double> scale,
                      std::span<const double> x);

/// out[r] = dot(row_r, x) for a row-major matrix with x.size() columns.
void matvec(std::span<const double> rows, std::span<const double> x, std::span<double> out);

/// out += M^T x, where M is row-major with out.size() columns and x.size() rows.
void matvec_transposed_add(std::span<const double> rows, std::span<const double> x,
                           std::span<double> out);

/// M += alpha * a b^T for row-major M of shape a.size() x b.size().
void rank1_update(std::span<double> rows, double alpha, std::span<const double> a,
                  std::span<const double> b);

}  // namespace textcascade::simd
