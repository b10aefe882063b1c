#pragma once

#include <cstddef>
#include <functional>
#include <cstdint>
#include <limits>
#include <numbers>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace textcascade {

/// Dense class index. Ids follow ascending label order, so comparing ids
/// is the same as comparing labels lexicographically.
using ClassId = std::uint32_t;

inline constexpr ClassId kNoClass = std::numeric_limits<ClassId>::max();

/// Transparent hash so string-keyed maps accept string_view lookups.
struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file content.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seeded generator with portable draws. std::normal_distribution and
/// friends are implementation-defined, so the engine derives its own
/// uniforms and normals from the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        // Lemire's multiply-shift; the tiny bias is irrelevant at these bounds.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// FNV-1a, used for cache keys and report fingerprints.
class Digest {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            value_ ^= c;
            value_ *= 0x100000001b3ULL;
        }
    }
    void update(const void* data, std::size_t size) {
        update(std::string_view(static_cast<const char*>(data), size));
    }
    template <typename T>
    void update_pod(const T& value) {
        update(&value, sizeof(T));
    }
    std::uint64_t value() const { return value_; }

private:
    std::uint64_t value_ = 0xcbf29ce484222325ULL;
};

}  // namespace textcascade
