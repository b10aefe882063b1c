#include "textcascade/lsh.hpp"

#include <algorithm>
#include <iterator>

#include "textcascade/simd/kernels.hpp"

namespace textcascade {

HyperplaneFamily::HyperplaneFamily(std::size_t bits, std::size_t width, std::uint64_t seed)
    : bits_(bits), width_(width), seed_(seed) {
    if (bits == 0 || bits > kMaxBits) {
        throw ContractViolation("hash code bit count must be in 1..64, got " + std::to_string(bits));
    }
    if (width == 0) throw ContractViolation("hyperplane width must be positive");
    planes_.resize(bits * width);
    for (std::size_t i = 0; i < bits; ++i) {
        // One stream per plane keeps families nested across bit counts.
        Rng rng(seed * 0x100000001b3ULL + i + 1);
        for (std::size_t k = 0; k < width; ++k) planes_[i * width + k] = rng.normal();
    }
}

HyperplaneFamily HyperplaneFamily::from_planes(std::span<const double> planes, std::size_t width) {
    if (width == 0 || planes.empty() || planes.size() % width != 0) {
        throw ContractViolation("planes must form a nonempty matrix with the given width");
    }
    const auto bits = planes.size() / width;
    if (bits > kMaxBits) throw ContractViolation("more than 64 hyperplanes");
    HyperplaneFamily f;
    f.bits_ = bits;
    f.width_ = width;
    f.planes_.assign(planes.begin(), planes.end());
    return f;
}

HyperplaneFamily HyperplaneFamily::prefix(std::size_t bits) const {
    if (bits == 0 || bits > bits_) throw ContractViolation("prefix longer than the family");
    HyperplaneFamily f;
    f.bits_ = bits;
    f.width_ = width_;
    f.seed_ = seed_;
    f.planes_.assign(planes_.begin(), planes_.begin() + static_cast<std::ptrdiff_t>(bits * width_));
    return f;
}

HashCode HyperplaneFamily::hash(std::span<const double> v) const {
    if (v.size() != width_) {
        throw ContractViolation("hashing a vector of length " + std::to_string(v.size()) +
                                " with planes of width " + std::to_string(width_));
    }
    HashCode code = 0;
    for (std::size_t i = 0; i < bits_; ++i) {
        if (simd::dot(plane(i), v) > 0.0) code |= HashCode{1} << i;
    }
    return code;
}

namespace {

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<HashCode> query_codes(const FeatureBag& bag, const HyperplaneFamily& family) {
    if (bag.empty()) throw ContractViolation("LSH candidates for an empty query bag");
    std::vector<HashCode> codes;
    codes.reserve(bag.size());
    for (std::size_t i = 0; i < bag.size(); ++i) codes.push_back(family.hash(bag.row(i)));
    sort_unique(codes);
    return codes;
}

template <typename T>
std::vector<T> intersect_all(const std::unordered_map<HashCode, std::vector<T>>& table,
                             std::span<const HashCode> codes) {
    std::vector<T> result;
    bool first = true;
    for (HashCode c : codes) {
        auto it = table.find(c);
        if (it == table.end()) return {};
        if (first) {
            result = it->second;
            first = false;
        } else {
            std::vector<T> next;
            std::set_intersection(result.begin(), result.end(), it->second.begin(), it->second.end(),
                                  std::back_inserter(next));
            result.swap(next);
        }
        if (result.empty()) return result;
    }
    return result;
}

}  // namespace

HashTables build_tables(const TrainingIndex& index, const HyperplaneFamily& family) {
    HashTables tables;
    const auto samples = index.all_samples();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& sample = samples[s];
        for (std::size_t r = 0; r < sample.bag.size(); ++r) {
            const HashCode code = family.hash(sample.bag.row(r));
            tables.by_class[code].push_back(sample.class_id);
            tables.by_text[code].push_back(static_cast<std::uint32_t>(s));
        }
    }
    for (auto& [code, ids] : tables.by_class) sort_unique(ids);
    for (auto& [code, ids] : tables.by_text) sort_unique(ids);
    return tables;
}

std::vector<ClassId> candidates_class_based(const FeatureBag& query_bag, const HashTables& tables,
                                            const HyperplaneFamily& family) {
    const auto codes = query_codes(query_bag, family);
    return intersect_all(tables.by_class, codes);
}

std::vector<ClassId> candidates_text_based(const FeatureBag& query_bag, const HashTables& tables,
                                           const HyperplaneFamily& family, const TrainingIndex& index) {
    const auto codes = query_codes(query_bag, family);
    const auto texts = intersect_all(tables.by_text, codes);
    const auto samples = index.all_samples();
    std::vector<ClassId> classes;
    classes.reserve(texts.size());
    for (auto s : texts) classes.push_back(samples[s].class_id);
    sort_unique(classes);
    return classes;
}

LshResult lsh_classify(const Query& query, const HashTables& tables, const HyperplaneFamily& family,
                       const TrainingIndex& index, std::size_t n, LshVariant variant) {
    LshResult result;
    if (query.bag.empty()) return result;
    const auto candidates = variant == LshVariant::class_based
                                ? candidates_class_based(query.bag, tables, family)
                                : candidates_text_based(query.bag, tables, family, index);
    result.candidate_count = candidates.size();
    if (candidates.empty()) return result;
    result.classes = top_n(query, index, n, std::span<const ClassId>(candidates));
    return result;
}

}  // namespace textcascade
