#include "textcascade/neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "textcascade/simd/kernels.hpp"

namespace textcascade {

TermVector TermVector::from_tokens(std::span<const std::string> tokens) {
    std::map<std::string, std::uint32_t, std::less<>> counts;
    for (const auto& t : tokens) ++counts[t];
    TermVector tv;
    tv.counts.assign(counts.begin(), counts.end());
    double sq = 0.0;
    for (const auto& [term, c] : tv.counts) sq += static_cast<double>(c) * c;
    tv.norm = std::sqrt(sq);
    return tv;
}

double term_cosine(const TermVector& a, const TermVector& b) {
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    auto ia = a.counts.begin();
    auto ib = b.counts.begin();
    while (ia != a.counts.end() && ib != b.counts.end()) {
        const int cmp = ia->first.compare(ib->first);
        if (cmp < 0) {
            ++ia;
        } else if (cmp > 0) {
            ++ib;
        } else {
            dot += static_cast<double>(ia->second) * ib->second;
            ++ia;
            ++ib;
        }
    }
    return std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
}

namespace {

const std::string& lemma_or_word(const DepNode& node) {
    return node.lemma.empty() || node.lemma == "_" ? node.word : node.lemma;
}

std::vector<double> inverse_row_norms(const FeatureBag& bag) {
    std::vector<double> inv(bag.size());
    for (std::size_t i = 0; i < bag.size(); ++i) {
        const double sq = simd::dot(bag.row(i), bag.row(i));
        inv[i] = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    }
    return inv;
}

DependencyTree tree_for(const TrainingRecord& record) {
    if (record.tree) return *record.tree;
    const auto tokens = tokenize(record.text);
    return fallback_edges(tokens);
}

}  // namespace

std::vector<std::string> lemma_bigrams(const DependencyTree& tree) {
    std::vector<std::string> out;
    out.reserve(tree.edges().size());
    for (const auto& e : tree.edges()) {
        std::string key = lemma_or_word(tree.head_of(e));
        key.push_back('\x1f');
        key += lemma_or_word(tree.dependent_of(e));
        out.push_back(std::move(key));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t sorted_intersection_size(std::span<const std::string> a, std::span<const std::string> b) {
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

std::uint64_t records_digest(std::span<const TrainingRecord> records) {
    Digest digest;
    for (const auto& r : records) {
        digest.update(r.text_id);
        digest.update("\t");
        digest.update(r.label);
        digest.update("\t");
        digest.update(r.text);
        digest.update("\n");
        if (r.tree) {
            for (const auto& n : r.tree->nodes()) {
                digest.update(n.word);
                digest.update(n.pos);
            }
            for (const auto& e : r.tree->edges()) {
                digest.update_pod(e.head);
                digest.update_pod(e.dependent);
            }
        }
        digest.update("\x1e");
    }
    return digest.value();
}

TrainingIndex::TrainingIndex(std::vector<TrainingRecord> records,
                             std::shared_ptr<const WordVectorTable> table, WeightPolicy policy,
                             std::optional<std::vector<FeatureBag>> cached_bags)
    : table_(std::move(table)), policy_(std::move(policy)) {
    if (!table_) throw ContractViolation("training index needs a word vector table");
    if (cached_bags && cached_bags->size() != records.size()) {
        throw ContractViolation("bag cache holds " + std::to_string(cached_bags->size()) +
                                " bags for " + std::to_string(records.size()) + " records");
    }
    corpus_digest_ = records_digest(records);

    for (const auto& r : records) labels_.push_back(r.label);
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
    for (std::size_t i = 0; i < labels_.size(); ++i) ids_.emplace(labels_[i], static_cast<ClassId>(i));

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].label < records[b].label; });

    samples_.reserve(records.size());
    for (std::size_t ordinal : order) {
        auto& record = records[ordinal];
        Sample s;
        s.text_id = record.text_id;
        s.class_id = ids_.find(record.label)->second;
        s.record_ordinal = ordinal;
        s.tree = tree_for(record);
        s.text = std::move(record.text);
        if (cached_bags) {
            s.bag = std::move((*cached_bags)[ordinal]);
            if (s.bag.size() != s.tree.edges().size() ||
                (!s.bag.empty() && s.bag.width() != 2 * table_->dim())) {
                throw ContractViolation("cached bag for '" + s.text_id + "' does not match its tree");
            }
        } else {
            s.bag = generate_bag(s.tree, *table_, policy_);
        }
        s.inverse_norms = inverse_row_norms(s.bag);
        s.bigrams = lemma_bigrams(s.tree);
        s.terms = TermVector::from_tokens(tokenize(s.text));
        samples_.push_back(std::move(s));
    }

    offsets_.assign(labels_.size() + 1, 0);
    for (const auto& s : samples_) ++offsets_[s.class_id + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::optional<ClassId> TrainingIndex::find(std::string_view label) const {
    auto it = ids_.find(label);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

ClassId TrainingIndex::require(std::string_view label) const {
    auto id = find(label);
    if (!id) throw ContractViolation("unknown class '" + std::string(label) + "'");
    return *id;
}

std::span<const Sample> TrainingIndex::samples(ClassId id) const {
    if (id >= labels_.size()) {
        throw ContractViolation("class id " + std::to_string(id) + " out of range");
    }
    return std::span<const Sample>(samples_).subspan(offsets_[id], offsets_[id + 1] - offsets_[id]);
}

Query make_query(std::string id, std::string_view text, std::optional<DependencyTree> tree,
                 const WordVectorTable& table, const WeightPolicy& policy) {
    Query q;
    q.id = std::move(id);
    q.tokens = tokenize(text);
    q.tree = tree ? std::move(*tree) : fallback_edges(q.tokens);
    q.bag = generate_bag(q.tree, table, policy);
    const auto inv = inverse_row_norms(q.bag);
    q.unit_rows.assign(q.bag.data().begin(), q.bag.data().end());
    const std::size_t width = q.bag.width();
    for (std::size_t r = 0; r < inv.size(); ++r) {
        for (std::size_t i = 0; i < width; ++i) q.unit_rows[r * width + i] *= inv[r];
    }
    q.bigrams = lemma_bigrams(q.tree);
    q.terms = TermVector::from_tokens(q.tokens);
    return q;
}

namespace {

double sample_score(std::span<const double> unit_rows, std::size_t width, const Sample& sample) {
    if (sample.bag.empty()) return 0.0;
    double total = 0.0;
    const auto rows = sample.bag.data();
    for (std::size_t off = 0; off < unit_rows.size(); off += width) {
        total += simd::max_scaled_dot(rows, sample.inverse_norms, unit_rows.subspan(off, width));
    }
    return total;
}

double class_score(std::span<const double> unit_rows, std::size_t width, ClassId id,
                   const TrainingIndex& index) {
    if (unit_rows.empty()) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& sample : index.samples(id)) {
        best = std::max(best, sample_score(unit_rows, width, sample));
    }
    return best;
}

void check_width(std::size_t width, const TrainingIndex& index) {
    if (width != 0 && width != 2 * index.table().dim()) {
        throw ContractViolation("query features have width " + std::to_string(width) +
                                ", index expects " + std::to_string(2 * index.table().dim()));
    }
}

template <typename Scorer>
ScoredClasses rank_all(const TrainingIndex& index, std::size_t n, Scorer&& score) {
    if (n == 0) throw ContractViolation("top-n needs n >= 1");
    ScoredClasses scored;
    scored.reserve(index.class_count());
    for (ClassId id = 0; id < index.class_count(); ++id) {
        scored.push_back({id, score(id)});
    }
    keep_top(scored, n);
    return scored;
}

}  // namespace

void keep_top(ScoredClasses& scored, std::size_t n) {
    const std::size_t keep = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      ranks_before);
    scored.resize(keep);
}

double sim(const Query& query, ClassId id, const TrainingIndex& index) {
    if (id >= index.class_count()) {
        throw ContractViolation("class id " + std::to_string(id) + " out of range");
    }
    check_width(query.bag.width(), index);
    return class_score(query.unit_rows, query.bag.width(), id, index);
}

double sim(const FeatureBag& query_bag, std::string_view label, const TrainingIndex& index) {
    const ClassId id = index.require(label);
    Query q;
    q.bag = query_bag;
    q.unit_rows.assign(query_bag.data().begin(), query_bag.data().end());
    const std::size_t width = query_bag.width();
    for (std::size_t r = 0; r < query_bag.size(); ++r) {
        const double sq = simd::dot(query_bag.row(r), query_bag.row(r));
        const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
        for (std::size_t i = 0; i < width; ++i) q.unit_rows[r * width + i] *= inv;
    }
    return sim(q, id, index);
}

ScoredClasses top_n(const Query& query, const TrainingIndex& index, std::size_t n,
                    std::optional<std::span<const ClassId>> restrict_to) {
    if (n == 0) throw ContractViolation("top-n needs n >= 1");
    check_width(query.bag.width(), index);
    const std::span<const double> rows(query.unit_rows);
    const std::size_t width = query.bag.width();
    if (!restrict_to) {
        return rank_all(index, n, [&](ClassId id) { return class_score(rows, width, id, index); });
    }
    if (restrict_to->empty()) {
        throw ContractViolation("top-n restricted to an empty class set");
    }
    std::vector<ClassId> scope(restrict_to->begin(), restrict_to->end());
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    if (scope.back() >= index.class_count()) {
        throw ContractViolation("restricted scope names class id " + std::to_string(scope.back()) +
                                " outside the index");
    }
    ScoredClasses scored;
    scored.reserve(scope.size());
    for (ClassId id : scope) {
        scored.push_back({id, class_score(rows, width, id, index)});
    }
    keep_top(scored, n);
    return scored;
}

double score_bow(const TermVector& query_terms, ClassId id, const TrainingIndex& index) {
    double best = 0.0;
    for (const auto& sample : index.samples(id)) {
        best = std::max(best, term_cosine(query_terms, sample.terms));
    }
    return best;
}

double score_snbigram(const DependencyTree& query_tree, ClassId id, const TrainingIndex& index) {
    const auto bigrams = lemma_bigrams(query_tree);
    std::size_t best = 0;
    for (const auto& sample : index.samples(id)) {
        best = std::max(best, sorted_intersection_size(bigrams, sample.bigrams));
    }
    return static_cast<double>(best);
}

ScoredClasses top_n_bow(const Query& query, const TrainingIndex& index, std::size_t n) {
    return rank_all(index, n, [&](ClassId id) { return score_bow(query.terms, id, index); });
}

ScoredClasses top_n_snbigram(const Query& query, const TrainingIndex& index, std::size_t n) {
    return rank_all(index, n, [&](ClassId id) {
        std::size_t best = 0;
        for (const auto& sample : index.samples(id)) {
            best = std::max(best, sorted_intersection_size(query.bigrams, sample.bigrams));
        }
        return static_cast<double>(best);
    });
}

// Cache layout: magic, version, key, record count, then per record (in
// record order) row count, width and the rows as native doubles.
namespace {
constexpr char kCacheMagic[8] = {'T', 'C', 'B', 'A', 'G', 'S', '\0', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw FormatError("bag cache truncated");
    }
    return value;
}
}  // namespace

BagCacheKey cache_key(const TrainingIndex& index) {
    return {index.corpus_digest(), index.table().digest(), index.policy().digest()};
}

void write_bag_cache(std::ostream& out, const TrainingIndex& index) {
    const auto key = cache_key(index);
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, kCacheVersion);
    put(out, key.corpus);
    put(out, key.embeddings);
    put(out, key.policy);
    const auto samples = index.all_samples();
    std::vector<const Sample*> by_record(samples.size());
    for (const auto& s : samples) by_record.at(s.record_ordinal) = &s;
    put(out, static_cast<std::uint64_t>(by_record.size()));
    for (const Sample* s : by_record) {
        put(out, static_cast<std::uint64_t>(s->bag.size()));
        put(out, static_cast<std::uint64_t>(s->bag.width()));
        out.write(reinterpret_cast<const char*>(s->bag.data().data()),
                  static_cast<std::streamsize>(s->bag.data().size_bytes()));
    }
}

std::optional<std::vector<FeatureBag>> read_bag_cache(std::istream& in, const BagCacheKey& expected) {
    char magic[sizeof kCacheMagic];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kCacheMagic)) {
        throw FormatError("not a bag cache file");
    }
    if (get<std::uint32_t>(in) != kCacheVersion) throw FormatError("unsupported bag cache version");
    BagCacheKey key;
    key.corpus = get<std::uint64_t>(in);
    key.embeddings = get<std::uint64_t>(in);
    key.policy = get<std::uint64_t>(in);
    if (!(key == expected)) return std::nullopt;
    const auto count = get<std::uint64_t>(in);
    std::vector<FeatureBag> bags;
    bags.reserve(count);
    std::vector<double> row;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto rows = get<std::uint64_t>(in);
        const auto width = get<std::uint64_t>(in);
        FeatureBag bag(width);
        row.resize(width);
        for (std::uint64_t r = 0; r < rows; ++r) {
            if (!in.read(reinterpret_cast<char*>(row.data()),
                         static_cast<std::streamsize>(width * sizeof(double)))) {
                throw FormatError("bag cache truncated");
            }
            bag.add(row);
        }
        bags.push_back(std::move(bag));
    }
    return bags;
}

}  // namespace textcascade
