#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "textcascade/neighbor.hpp"

namespace textcascade {

using HashCode = std::uint64_t;

/// P random hyperplanes with i.i.d. standard normal entries. Plane i depends
/// only on the seed and i, so the family with P bits is a prefix of the one
/// with P + 1 bits.
class HyperplaneFamily {
public:
    static constexpr std::size_t kMaxBits = 64;

    /// Throws ContractViolation unless 1 <= bits <= 64 and width >= 1.
    HyperplaneFamily(std::size_t bits, std::size_t width, std::uint64_t seed);

    std::size_t bits() const { return bits_; }
    std::size_t width() const { return width_; }
    std::uint64_t seed() const { return seed_; }
    std::span<const double> plane(std::size_t i) const { return {planes_.data() + i * width_, width_}; }

    /// Explicit planes, row-major with `width` columns; the seed is recorded as 0.
    static HyperplaneFamily from_planes(std::span<const double> planes, std::size_t width);

    /// The same family cut down to its first `bits` planes.
    HyperplaneFamily prefix(std::size_t bits) const;

    /// Bit i is set iff plane_i . v > 0. Throws ContractViolation on a length mismatch.
    HashCode hash(std::span<const double> v) const;

private:
    HyperplaneFamily() = default;

    std::size_t bits_ = 0;
    std::size_t width_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> planes_;
};

/// Hash-code -> sorted class ids, and hash-code -> sorted global sample
/// positions ("text ids") within TrainingIndex::all_samples().
struct HashTables {
    std::unordered_map<HashCode, std::vector<ClassId>> by_class;
    std::unordered_map<HashCode, std::vector<std::uint32_t>> by_text;
};

HashTables build_tables(const TrainingIndex& index, const HyperplaneFamily& family);

/// Classes present under every query code. Throws ContractViolation on an
/// empty query bag.
std::vector<ClassId> candidates_class_based(const FeatureBag& query_bag, const HashTables& tables,
                                            const HyperplaneFamily& family);

/// Classes owning at least one text present under every query code.
std::vector<ClassId> candidates_text_based(const FeatureBag& query_bag, const HashTables& tables,
                                           const HyperplaneFamily& family, const TrainingIndex& index);

enum class LshVariant { class_based, text_based };

struct LshResult {
    ScoredClasses classes;
    std::size_t candidate_count = 0;
};

/// Candidate generation followed by the second stage restricted to the
/// candidates. No candidates (or an empty query bag) gives an empty result.
LshResult lsh_classify(const Query& query, const HashTables& tables, const HyperplaneFamily& family,
                       const TrainingIndex& index, std::size_t n, LshVariant variant);

}  // namespace textcascade
