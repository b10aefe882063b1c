#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "textcascade/harness.hpp"

namespace textcascade {

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "valid") return Split::valid;
    if (name == "test") return Split::test;
    throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
    Digest digest;
    digest.update_pod(root);
    digest.update(purpose);
    return Rng(digest.value()).next();
}

std::vector<const CorpusRecord*> Corpus::in_split(Split split) const {
    std::vector<const CorpusRecord*> out;
    for (const auto& r : records) {
        if (r.split == split) out.push_back(&r);
    }
    return out;
}

std::vector<TrainingRecord> Corpus::training_records() const {
    std::vector<TrainingRecord> out;
    for (const auto& r : records) {
        if (r.split == Split::train) out.push_back({r.text_id, r.label, r.text, r.tree});
    }
    return out;
}

std::uint64_t Corpus::digest() const {
    Digest digest;
    for (const auto& r : records) {
        digest.update(r.text_id);
        digest.update("\t");
        digest.update(r.label);
        digest.update("\t");
        digest.update(r.text);
        digest.update("\t");
        digest.update(split_name(r.split));
        digest.update("\n");
    }
    return digest.value();
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cols.push_back(line.substr(start));
            return cols;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

void assign_splits(Corpus& corpus, const std::vector<std::size_t>& unsplit, const SplitConfig& config) {
    if (unsplit.empty()) return;
    if (config.train_fraction <= 0.0 || config.train_fraction > 1.0 || config.valid_share < 0.0 ||
        config.valid_share > 1.0) {
        throw ContractViolation("split fractions must lie in (0, 1] and [0, 1]");
    }
    std::vector<std::size_t> order = unsplit;
    Rng rng(derive_seed(config.seed, "split"));
    rng.shuffle(order.begin(), order.end());
    const auto n = order.size();
    const auto train_count = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n)));
    const auto held = n - train_count;
    const auto valid_count = static_cast<std::size_t>(std::llround(config.valid_share * static_cast<double>(held)));
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = corpus.records[order[i]];
        r.split = i < train_count ? Split::train : (i < train_count + valid_count ? Split::valid : Split::test);
    }
    // every class seen in valid/test keeps at least one training text
    std::set<std::string, std::less<>> trained;
    for (const auto& r : corpus.records) {
        if (r.split == Split::train) trained.insert(r.label);
    }
    for (std::size_t idx : unsplit) {
        auto& r = corpus.records[idx];
        if (r.split != Split::train && !trained.count(r.label)) {
            r.split = Split::train;
            trained.insert(r.label);
        }
    }
}

}  // namespace

Corpus read_corpus(std::istream& in, const SplitConfig& splits,
                   const std::optional<std::vector<std::string>>& catalog) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> first_line;
    std::set<std::string, std::less<>> allowed;
    if (catalog) allowed.insert(catalog->begin(), catalog->end());
    std::vector<std::size_t> unsplit;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split_tabs(line);
        if (cols.size() < 3 || cols.size() > 4 || cols[0].empty() || cols[1].empty()) {
            throw IngestError("corpus line " + std::to_string(line_no) +
                              ": expected 'text-id<TAB>class-label<TAB>text[<TAB>split]'");
        }
        CorpusRecord record;
        record.text_id = std::string(cols[0]);
        record.label = std::string(cols[1]);
        record.text = std::string(cols[2]);
        record.line = line_no;
        if (auto [it, inserted] = first_line.emplace(record.text_id, line_no); !inserted) {
            throw IngestError("duplicate text id '" + record.text_id + "' on lines " +
                              std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        if (catalog && !allowed.count(record.label)) {
            throw IngestError("corpus line " + std::to_string(line_no) + ": dangling class label '" +
                              record.label + "' not in the class catalog");
        }
        if (cols.size() == 4) {
            try {
                record.split = parse_split(cols[3]);
            } catch (const std::invalid_argument&) {
                throw IngestError("corpus line " + std::to_string(line_no) + ": unknown split '" +
                                  std::string(cols[3]) + "'");
            }
        } else {
            unsplit.push_back(corpus.records.size());
        }
        corpus.records.push_back(std::move(record));
    }
    if (corpus.records.empty()) throw IngestError("corpus is empty");
    assign_splits(corpus, unsplit, splits);

    if (catalog) {
        corpus.catalog.assign(allowed.begin(), allowed.end());
    } else {
        std::set<std::string> labels;
        for (const auto& r : corpus.records) labels.insert(r.label);
        corpus.catalog.assign(labels.begin(), labels.end());
    }
    return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus.records) {
        out << r.text_id << '\t' << r.label << '\t' << r.text << '\t' << split_name(r.split) << '\n';
    }
}

std::vector<std::string> read_catalog(std::istream& in) {
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) labels.push_back(line);
    }
    return labels;
}

std::size_t attach_parses(Corpus& corpus, std::span<const DependencyTree> trees) {
    std::unordered_map<std::string_view, CorpusRecord*> by_id;
    for (auto& r : corpus.records) by_id.emplace(r.text_id, &r);
    std::size_t attached = 0;
    for (const auto& tree : trees) {
        auto it = by_id.find(tree.id());
        if (it == by_id.end()) continue;
        auto& record = *it->second;
        if (!record.tree) {
            record.tree = tree;
            ++attached;
        } else {
            record.tree->append(tree);
        }
    }
    return attached;
}

Workspace make_workspace(Corpus corpus, std::shared_ptr<const WordVectorTable> table,
                         const WeightPolicy& policy, std::optional<std::vector<FeatureBag>> cached_bags) {
    Workspace ws;
    ws.bags_from_cache = cached_bags.has_value();
    ws.table = std::move(table);
    auto records = corpus.training_records();
    if (records.empty()) throw IngestError("the train split is empty");
    ws.index = std::make_unique<TrainingIndex>(std::move(records), ws.table, policy, std::move(cached_bags));
    ws.corpus = std::move(corpus);
    return ws;
}

Workspace ingest(const IngestPaths& paths, const IngestConfig& config) {
    auto table = std::make_shared<WordVectorTable>(
        WordVectorTable::load_file(paths.vectors, VectorLoadOptions{config.fold_case}));

    std::optional<std::vector<std::string>> catalog;
    if (paths.catalog) {
        std::ifstream in(*paths.catalog);
        if (!in) throw IngestError("cannot open class catalog '" + *paths.catalog + "'");
        catalog = read_catalog(in);
    }
    std::ifstream corpus_in(paths.corpus);
    if (!corpus_in) throw IngestError("cannot open corpus '" + paths.corpus + "'");
    Corpus corpus = read_corpus(corpus_in, config.splits, catalog);

    if (paths.parses) {
        std::ifstream parse_in(*paths.parses);
        if (!parse_in) throw IngestError("cannot open parse file '" + *paths.parses + "'");
        const auto trees = read_conllu(parse_in);
        attach_parses(corpus, trees);
    }

    std::optional<std::vector<FeatureBag>> cached;
    if (paths.bag_cache) {
        std::ifstream cache_in(*paths.bag_cache, std::ios::binary);
        if (cache_in) {
            const auto records = corpus.training_records();
            const BagCacheKey key{records_digest(records), table->digest(), config.policy.digest()};
            cached = read_bag_cache(cache_in, key);
        }
    }
    return make_workspace(std::move(corpus), std::move(table), config.policy, std::move(cached));
}

std::vector<LabeledQuery> make_queries(const Workspace& ws, Split split) {
    std::vector<LabeledQuery> out;
    for (const auto* r : ws.corpus.in_split(split)) {
        LabeledQuery lq;
        lq.query = make_query(r->text_id, r->text, r->tree, *ws.table, ws.index->policy());
        lq.gold_label = r->label;
        lq.gold = ws.index->find(r->label).value_or(kNoClass);
        out.push_back(std::move(lq));
    }
    return out;
}

std::vector<TrainingExample> training_examples(const Workspace& ws) {
    std::vector<TrainingExample> out;
    for (const auto& s : ws.index->all_samples()) {
        out.push_back({tokenize(s.text), s.class_id});
    }
    return out;
}

}  // namespace textcascade
