#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "textcascade/common.hpp"
#include "textcascade/embeddings.hpp"
#include "textcascade/syntax.hpp"

namespace textcascade {

/// Sparse term-frequency vector, sorted by term.
struct TermVector {
    std::vector<std::pair<std::string, std::uint32_t>> counts;
    double norm = 0.0;

    static TermVector from_tokens(std::span<const std::string> tokens);
};

/// Cosine between two term-frequency vectors; 0 if either is empty.
double term_cosine(const TermVector& a, const TermVector& b);

/// Sorted, deduplicated (lemma(head), lemma(dependent)) pairs, one per edge.
std::vector<std::string> lemma_bigrams(const DependencyTree& tree);

/// Size of the intersection of two sorted, deduplicated string sets.
std::size_t sorted_intersection_size(std::span<const std::string> a, std::span<const std::string> b);

struct TrainingRecord {
    std::string text_id;
    std::string label;
    std::string text;
    std::optional<DependencyTree> tree;  // adjacency fallback when absent
};

struct Sample {
    std::string text_id;
    std::string text;
    ClassId class_id = kNoClass;
    std::size_t record_ordinal = 0;  // position in the records the index was built from
    DependencyTree tree;
    FeatureBag bag;
    std::vector<double> inverse_norms;  // per bag row; 0 for zero rows
    std::vector<std::string> bigrams;
    TermVector terms;
};

/// Class label -> training samples, with everything the second-stage scorers
/// need precomputed. Immutable after construction.
class TrainingIndex {
public:
    /// Builds bags with `table` and `policy`. When `cached_bags` is given it
    /// must hold one bag per record, in record order.
    TrainingIndex(std::vector<TrainingRecord> records, std::shared_ptr<const WordVectorTable> table,
                  WeightPolicy policy, std::optional<std::vector<FeatureBag>> cached_bags = std::nullopt);

    std::size_t class_count() const { return labels_.size(); }
    std::size_t sample_count() const { return samples_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(ClassId id) const { return labels_.at(id); }
    std::optional<ClassId> find(std::string_view label) const;
    /// Throws ContractViolation for unknown labels.
    ClassId require(std::string_view label) const;

    std::span<const Sample> samples(ClassId id) const;
    std::span<const Sample> all_samples() const { return samples_; }
    std::size_t sample_offset(ClassId id) const { return offsets_.at(id); }

    const WordVectorTable& table() const { return *table_; }
    std::shared_ptr<const WordVectorTable> shared_table() const { return table_; }
    const WeightPolicy& policy() const { return policy_; }

    /// Fingerprint of the records the index was built from.
    std::uint64_t corpus_digest() const { return corpus_digest_; }

private:
    std::shared_ptr<const WordVectorTable> table_;
    WeightPolicy policy_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, ClassId, StringHash, std::equal_to<>> ids_;
    std::vector<Sample> samples_;
    std::vector<std::size_t> offsets_;  // class_count + 1 entries
    std::uint64_t corpus_digest_ = 0;
};

/// Digest of training records in their given order, as used for bag caches.
std::uint64_t records_digest(std::span<const TrainingRecord> records);

/// A query with every representation precomputed once, outside the timed
/// scoring path.
struct Query {
    std::string id;
    std::vector<std::string> tokens;
    DependencyTree tree;
    FeatureBag bag;
    std::vector<double> unit_rows;  // bag rows scaled to unit length
    std::vector<std::string> bigrams;
    TermVector terms;
};

/// Prepares a query. Without a tree the adjacency fallback over the tokens
/// is used.
Query make_query(std::string id, std::string_view text, std::optional<DependencyTree> tree,
                 const WordVectorTable& table, const WeightPolicy& policy);

struct ScoredClass {
    ClassId id = kNoClass;
    double score = 0.0;

    friend bool operator==(const ScoredClass&, const ScoredClass&) = default;
};

/// Descending score, ties by ascending label (= ascending id).
using ScoredClasses = std::vector<ScoredClass>;

inline bool ranks_before(const ScoredClass& a, const ScoredClass& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
}

/// Best-matching-text similarity: max over the class's samples of
/// sum over query rows u of max over sample rows v of cosine(u, v).
double sim(const Query& query, ClassId id, const TrainingIndex& index);

/// Same, from a raw bag and a label. Throws ContractViolation for unknown labels.
double sim(const FeatureBag& query_bag, std::string_view label, const TrainingIndex& index);

/// Top-n classes by `sim`, over all classes or over `restrict_to`.
/// Throws ContractViolation when n == 0, when restrict_to is empty, or when
/// it names an unknown class.
ScoredClasses top_n(const Query& query, const TrainingIndex& index, std::size_t n,
                    std::optional<std::span<const ClassId>> restrict_to = std::nullopt);

/// Bag-of-words baseline: best term-frequency cosine among the class's texts.
double score_bow(const TermVector& query_terms, ClassId id, const TrainingIndex& index);
/// Syntactic-bigram baseline: most shared lemma bigrams among the class's texts.
double score_snbigram(const DependencyTree& query_tree, ClassId id, const TrainingIndex& index);

ScoredClasses top_n_bow(const Query& query, const TrainingIndex& index, std::size_t n);
ScoredClasses top_n_snbigram(const Query& query, const TrainingIndex& index, std::size_t n);

/// Keeps the best n entries of `scored` in ranking order.
void keep_top(ScoredClasses& scored, std::size_t n);

/// Binary cache of training bags keyed by the corpus, embedding and policy
/// digests.
struct BagCacheKey {
    std::uint64_t corpus = 0;
    std::uint64_t embeddings = 0;
    std::uint64_t policy = 0;

    friend bool operator==(const BagCacheKey&, const BagCacheKey&) = default;
};

BagCacheKey cache_key(const TrainingIndex& index);
void write_bag_cache(std::ostream& out, const TrainingIndex& index);
/// Returns the bags if the stored key equals `expected`, nullopt otherwise.
/// Throws FormatError on a corrupt file.
std::optional<std::vector<FeatureBag>> read_bag_cache(std::istream& in, const BagCacheKey& expected);

}  // namespace textcascade
