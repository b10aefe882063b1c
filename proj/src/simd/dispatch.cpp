#include "textcascade/simd/kernels.hpp"

#include <atomic>
#include <cassert>
#include <stdexcept>
#include <string>

namespace textcascade::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{&table(detected_level())};
    return slot;
}

std::atomic<Level>& active_level_slot() {
    static std::atomic<Level> slot{detected_level()};
    return slot;
}

const KernelTable& current() { return *active_slot().load(std::memory_order_relaxed); }

}  // namespace

std::string_view level_name(Level level) {
    switch (level) {
        case Level::scalar: return "scalar";
        case Level::avx2: return "avx2";
        case Level::neon: return "neon";
    }
    return "unknown";
}

Level parse_level(std::string_view name) {
    if (name == "scalar") return Level::scalar;
    if (name == "avx2") return Level::avx2;
    if (name == "neon") return Level::neon;
    if (name == "auto") return detected_level();
    throw std::invalid_argument("unknown kernel level '" + std::string(name) + "'");
}

bool level_supported(Level level) {
    switch (level) {
        case Level::scalar: return true;
        case Level::avx2: return avx2_table() != nullptr && cpu_has_avx2();
        case Level::neon: return neon_table() != nullptr;
    }
    return false;
}

Level detected_level() {
    if (level_supported(Level::avx2)) return Level::avx2;
    if (level_supported(Level::neon)) return Level::neon;
    return Level::scalar;
}

const KernelTable& table(Level level) {
    if (!level_supported(level)) {
        throw std::invalid_argument("kernel level '" + std::string(level_name(level)) +
                                    "' is not available on this CPU");
    }
    switch (level) {
        case Level::avx2: return *avx2_table();
        case Level::neon: return *neon_table();
        case Level::scalar: break;
    }
    return scalar_table();
}

Level active_level() { return active_level_slot().load(std::memory_order_relaxed); }

void set_level(Level level) {
    const KernelTable& selected = table(level);
    active_slot().store(&selected, std::memory_order_relaxed);
    active_level_slot().store(level, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return current().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    current().axpy(alpha, x.data(), y.data(), x.size());
}

double max_scaled_dot(std::span<const double> rows, std::span<const double> scale,
                      std::span<const double> x) {
    assert(rows.size() == scale.size() * x.size());
    return current().max_scaled_dot(rows.data(), scale.data(), scale.size(), x.data(), x.size());
}

void matvec(std::span<const double> rows, std::span<const double> x, std::span<double> out) {
    assert(rows.size() == out.size() * x.size());
    const KernelTable& k = current();
    const std::size_t width = x.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r] = k.dot(rows.data() + r * width, x.data(), width);
    }
}

void matvec_transposed_add(std::span<const double> rows, std::span<const double> x,
                           std::span<double> out) {
    assert(rows.size() == out.size() * x.size());
    const KernelTable& k = current();
    const std::size_t width = out.size();
    for (std::size_t r = 0; r < x.size(); ++r) {
        if (x[r] != 0.0) {
            k.axpy(x[r], rows.data() + r * width, out.data(), width);
        }
    }
}

void rank1_update(std::span<double> rows, double alpha, std::span<const double> a,
                  std::span<const double> b) {
    assert(rows.size() == a.size() * b.size());
    const KernelTable& k = current();
    const std::size_t width = b.size();
    for (std::size_t r = 0; r < a.size(); ++r) {
        const double coef = alpha * a[r];
        if (coef != 0.0) {
            k.axpy(coef, b.data(), rows.data() + r * width, width);
        }
    }
}

}  // namespace textcascade::simd
