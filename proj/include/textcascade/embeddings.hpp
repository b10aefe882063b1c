#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textcascade/common.hpp"

namespace textcascade {

struct VectorLoadOptions {
    /// Lowercase words at load time and at lookup time.
    bool fold_case = false;
};

/// Word -> d-dimensional vector store. Immutable once built; concurrent
/// lookups are safe.
class WordVectorTable {
public:
    explicit WordVectorTable(std::size_t dim, bool fold_case = false);

    /// Reads the word2vec text format: a `<count> <dim>` header, then one
    /// `word v1 ... v_dim` line per word. Later duplicates replace earlier
    /// ones. Throws FormatError with the offending line number.
    static WordVectorTable load(std::istream& in, const VectorLoadOptions& options = {});
    static WordVectorTable load_file(const std::string& path, const VectorLoadOptions& options = {});

    /// Writes the word2vec text format, words in ascending order.
    void save(std::ostream& out) const;

    /// Adds or replaces a word. Throws ContractViolation on a length mismatch.
    void insert(std::string_view word, std::span<const double> vector);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return index_.size(); }
    bool fold_case() const { return fold_case_; }
    bool contains(std::string_view word) const;

    /// Stored vector, or the zero vector for out-of-vocabulary words.
    std::span<const double> lookup(std::string_view word) const;

    /// Stable fingerprint of the table contents.
    std::uint64_t digest() const;

private:
    std::string normalize(std::string_view word) const;

    std::size_t dim_;
    bool fold_case_;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
    std::vector<double> storage_;
    std::vector<double> zeros_;
};

/// u.v / (|u||v|), clamped to [-1, 1]; 0 when either norm is 0.
/// Throws ContractViolation when the lengths differ.
double cosine(std::span<const double> u, std::span<const double> v);

}  // namespace textcascade
