#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textcascade/cascade.hpp"
#include "textcascade/embeddings.hpp"
#include "textcascade/evaluation.hpp"
#include "textcascade/lsh.hpp"
#include "textcascade/neighbor.hpp"
#include "textcascade/recurrent.hpp"
#include "textcascade/syntax.hpp"

namespace textcascade {

enum class Split { train, valid, test };

std::string_view split_name(Split split);
/// Throws std::invalid_argument for unknown names.
Split parse_split(std::string_view name);

/// Independent stream for a named consumer of the root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose);

struct CorpusRecord {
    std::string text_id;
    std::string label;
    std::string text;
    std::optional<DependencyTree> tree;
    Split split = Split::train;
    std::size_t line = 0;  // 1-based source line, 0 if generated
};

struct Corpus {
    std::vector<CorpusRecord> records;
    std::vector<std::string> catalog;  // sorted class labels

    std::vector<const CorpusRecord*> in_split(Split split) const;
    std::vector<TrainingRecord> training_records() const;
    std::uint64_t digest() const;
};

class IngestError : public FormatError {
public:
    using FormatError::FormatError;
};

struct SplitConfig {
    double train_fraction = 0.9;
    double valid_share = 0.5;  // of the held-out part
    std::uint64_t seed = 1;
};

/// Reads `text-id <TAB> class-label <TAB> text [<TAB> train|valid|test]`.
/// Records without a split column are assigned by `splits`, after which any
/// class with no training record gets one moved into train. With a catalog,
/// labels outside it are errors. Throws IngestError with line numbers for
/// malformed lines, duplicate text ids (both lines named) and dangling labels.
Corpus read_corpus(std::istream& in, const SplitConfig& splits,
                   const std::optional<std::vector<std::string>>& catalog = std::nullopt);

/// Writes the corpus with its split column.
void write_corpus(std::ostream& out, const Corpus& corpus);

/// One label per line.
std::vector<std::string> read_catalog(std::istream& in);

/// Attaches trees by id; sentences sharing a text id are merged in order.
/// Returns how many records received a parse.
std::size_t attach_parses(Corpus& corpus, std::span<const DependencyTree> trees);

struct IngestPaths {
    std::string corpus;
    std::string vectors;
    std::optional<std::string> parses;
    std::optional<std::string> catalog;
    std::optional<std::string> bag_cache;  // read if present and matching
};

struct IngestConfig {
    SplitConfig splits;
    bool fold_case = false;
    WeightPolicy policy;
};

struct Workspace {
    Corpus corpus;
    std::shared_ptr<const WordVectorTable> table;
    std::unique_ptr<TrainingIndex> index;
    bool bags_from_cache = false;
};

/// Loads everything and builds the index from the train split.
Workspace ingest(const IngestPaths& paths, const IngestConfig& config);
Workspace make_workspace(Corpus corpus, std::shared_ptr<const WordVectorTable> table,
                         const WeightPolicy& policy = {},
                         std::optional<std::vector<FeatureBag>> cached_bags = std::nullopt);

/// Prepared queries for one split; unseen classes get gold = kNoClass.
std::vector<LabeledQuery> make_queries(const Workspace& ws, Split split);

/// Tokenized training texts for the recurrent models.
std::vector<TrainingExample> training_examples(const Workspace& ws);

struct SynthConfig {
    std::size_t classes = 200;
    std::size_t samples_per_class = 3;
    std::size_t vocab = 2000;  // shared filler words
    std::size_t dim = 50;
    double noise = 0.2;        // chance a query's class word is swapped for a random word
    std::uint64_t seed = 1;
    std::size_t signature_size = 6;
    std::size_t signature_per_text = 4;
    std::size_t filler_per_text = 3;
    double spread = 0.6;       // how far class words scatter around their class direction
    std::size_t valid_queries = 100;
    std::size_t test_queries = 100;
};

struct SynthCorpus {
    Corpus corpus;  // texts carry their trees
    std::shared_ptr<WordVectorTable> table;
};

/// Deterministic per seed. Each class owns a set of signature words placed
/// around a random class direction; training texts draw signature words plus
/// filler, valid/test texts are noisy paraphrases of random classes. Every
/// text gets a random dependency tree over its words.
SynthCorpus synth_corpus(const SynthConfig& config);

/// corpus.tsv, parses.conllu, vectors.txt and classes.txt in `dir`.
void write_synth(const SynthCorpus& synth, const std::string& dir);

struct SweepSpec {
    std::size_t n = 10;
    /// Any of: gru, lstm, sn-vectors, sn-bigrams, bow, lsh-class, lsh-text,
    /// cascade-gru, cascade-lstm.
    std::vector<std::string> models = {"gru", "lstm", "sn-vectors", "sn-bigrams", "bow",
                                       "lsh-class", "lsh-text", "cascade-gru", "cascade-lstm"};
    std::vector<std::size_t> lsh_bits = {1, 3, 5, 10, 15, 20};
    std::uint64_t seed = 1;
    std::size_t repetitions = 1;
    std::size_t workers = 1;
    Split profile_split = Split::valid;
    Split eval_split = Split::test;
    // recurrent training
    std::size_t hidden_dim = 32;
    std::size_t epochs = 10;
    double learning_rate = 0.1;
    double clip_norm = 0.0;
    // cascade t policy: evaluate every candidate t on the eval split, or only
    // the one selected on the profile split
    bool all_candidate_ts = true;
    bool usefulness_cut = false;
    std::optional<std::size_t> max_t;
    std::vector<std::size_t> extra_ts;
};

struct SweepResult {
    std::vector<EvaluationReport> reports;
    std::map<std::string, ProfileCurve> profiles;  // by cell name
    std::map<std::string, std::size_t> selected_t;
};

/// Trains or reuses first-stage models keyed by cell name ("gru", "lstm").
using ModelCache = std::map<std::string, RecurrentModel>;

RecurrentModel train_first_stage(const Workspace& ws, CellKind cell, const SweepSpec& spec);

/// Runs the roster. Timing covers query scoring only.
SweepResult run_sweep(const Workspace& ws, const SweepSpec& spec, ModelCache& models);

/// Per-query-set verification of the cascade theory over every t in 1..C.
struct VerifyOutcome {
    std::string model;
    ProfileCurve curve;
    std::vector<EvaluationReport> reports;  // t = 1..C
    std::vector<BoundCheck> bounds;
    PlateauCheck plateaus;
    bool profile_sane = false;
    bool cascade_matches_m2_at_full_t = false;

    std::size_t bound_failures() const;
    std::size_t query_failures() const;
    bool passed() const;
};

VerifyOutcome verify_cascade(const Workspace& ws, const RecurrentModel& model, std::string model_name,
                             std::span<const LabeledQuery> queries, std::size_t n, std::size_t workers);

/// Checks monotonicity and the endpoint values of a curve.
bool profile_is_sane(const ProfileCurve& curve);

/// t, alpha, rho, is_change_point
void write_profile_csv(std::ostream& out, const ProfileCurve& curve);

/// Command-line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace textcascade
