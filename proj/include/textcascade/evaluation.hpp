#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textcascade/neighbor.hpp"

namespace textcascade {

/// A prepared query with its correct class. `gold` is kNoClass when the
/// label never occurs in training; such queries are automatic misses.
struct LabeledQuery {
    Query query;
    std::string gold_label;
    ClassId gold = kNoClass;
};

struct QueryRecord {
    std::string query_id;
    bool hit = false;
    double seconds = 0.0;                   // mean over repetitions
    std::optional<std::size_t> candidates;  // candidate-set size, when a filter ran
};

struct TimingStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// One (model, configuration) evaluation over a query set.
struct EvaluationReport {
    std::string model;
    std::size_t n = 0;
    std::optional<std::size_t> t;
    std::optional<std::size_t> lsh_bits;
    std::optional<std::uint64_t> lsh_seed;
    std::uint64_t seed = 0;
    std::string split;
    std::size_t hits = 0;
    std::size_t total = 0;
    TimingStats timing;
    std::vector<QueryRecord> queries;
    std::vector<std::string> unseen;  // query ids whose class has no training text

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total); }
    std::optional<double> mean_candidates() const;
};

struct EvalOptions {
    std::size_t repetitions = 1;
    std::size_t workers = 1;
};

struct RankResult {
    ScoredClasses classes;
    std::optional<std::size_t> candidates;  // size of the filtered scope, if any
};

using Ranker = std::function<RankResult(const Query&)>;

/// Runs `rank` on every query, timing only the call itself. A query counts as
/// a hit when its gold class is among the returned entries.
EvaluationReport evaluate_ranker(std::string model, std::span<const LabeledQuery> queries,
                                 std::size_t n, const Ranker& rank, const EvalOptions& options);

TimingStats summarize_timing(std::span<const QueryRecord> records);

/// One JSON object per line. Timing lives under the "timing" key and in each
/// per-query "seconds" field; everything else is deterministic.
void write_report_json(std::ostream& out, const EvaluationReport& report);
/// Fixed-width table: model, t, accuracy %, mean/min/max seconds.
void write_report_table(std::ostream& out, std::span<const EvaluationReport> reports);

}  // namespace textcascade
