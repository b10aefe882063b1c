#include "textcascade/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "textcascade/parallel.hpp"

namespace textcascade {

std::size_t default_workers() {
    if (const char* env = std::getenv("TEXTCASCADE_WORKERS")) {
        char* end = nullptr;
        const long value = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<double> EvaluationReport::mean_candidates() const {
    std::size_t count = 0;
    double sum = 0.0;
    for (const auto& q : queries) {
        if (q.candidates) {
            sum += static_cast<double>(*q.candidates);
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

TimingStats summarize_timing(std::span<const QueryRecord> records) {
    TimingStats stats;
    if (records.empty()) return stats;
    stats.min = records.front().seconds;
    stats.max = records.front().seconds;
    double sum = 0.0;
    for (const auto& r : records) {
        sum += r.seconds;
        stats.min = std::min(stats.min, r.seconds);
        stats.max = std::max(stats.max, r.seconds);
    }
    stats.mean = sum / static_cast<double>(records.size());
    return stats;
}

EvaluationReport evaluate_ranker(std::string model, std::span<const LabeledQuery> queries,
                                 std::size_t n, const Ranker& rank, const EvalOptions& options) {
    if (n == 0) throw ContractViolation("evaluation needs N >= 1");
    const std::size_t reps = std::max<std::size_t>(1, options.repetitions);
    EvaluationReport report;
    report.model = std::move(model);
    report.n = n;
    report.total = queries.size();
    report.queries.resize(queries.size());

    parallel_for(queries.size(), options.workers, [&](std::size_t i) {
        const auto& lq = queries[i];
        auto& record = report.queries[i];
        record.query_id = lq.query.id;
        RankResult result;
        double elapsed = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto start = std::chrono::steady_clock::now();
            auto out = rank(lq.query);
            const auto stop = std::chrono::steady_clock::now();
            elapsed += std::chrono::duration<double>(stop - start).count();
            if (r == 0) result = std::move(out);
        }
        record.seconds = elapsed / static_cast<double>(reps);
        record.candidates = result.candidates;
        record.hit = lq.gold != kNoClass &&
                     std::any_of(result.classes.begin(), result.classes.end(),
                                 [&](const ScoredClass& s) { return s.id == lq.gold; });
    });

    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (report.queries[i].hit) ++report.hits;
        if (queries[i].gold == kNoClass) report.unseen.push_back(queries[i].query.id);
    }
    report.timing = summarize_timing(report.queries);
    return report;
}

void write_report_json(std::ostream& out, const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["model"] = report.model;
    j["N"] = report.n;
    j["t"] = report.t ? nlohmann::ordered_json(*report.t) : nlohmann::ordered_json(nullptr);
    if (report.lsh_bits) j["lsh_bits"] = *report.lsh_bits;
    if (report.lsh_seed) j["lsh_seed"] = *report.lsh_seed;
    j["seed"] = report.seed;
    j["split"] = report.split;
    j["hits"] = report.hits;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy();
    if (auto mc = report.mean_candidates()) j["mean_candidates"] = *mc;
    j["unseen"] = report.unseen;
    j["timing"] = {{"mean_s", report.timing.mean}, {"min_s", report.timing.min}, {"max_s", report.timing.max}};
    auto& records = j["queries"] = nlohmann::ordered_json::array();
    for (const auto& q : report.queries) {
        nlohmann::ordered_json r;
        r["id"] = q.query_id;
        r["hit"] = q.hit;
        if (q.candidates) r["candidates"] = *q.candidates;
        r["seconds"] = q.seconds;
        records.push_back(std::move(r));
    }
    out << j.dump() << '\n';
}

void write_report_table(std::ostream& out, std::span<const EvaluationReport> reports) {
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %6s %6s %10s %12s %12s %12s\n", "model", "P", "t",
                  "accuracy", "mean_s", "min_s", "max_s");
    out << line;
    for (const auto& r : reports) {
        const std::string bits = r.lsh_bits ? std::to_string(*r.lsh_bits) : "-";
        const std::string t = r.t ? std::to_string(*r.t) : "-";
        std::snprintf(line, sizeof line, "%-16s %6s %6s %9.2f%% %12.6f %12.6f %12.6f\n",
                      r.model.c_str(), bits.c_str(), t.c_str(), 100.0 * r.accuracy(), r.timing.mean,
                      r.timing.min, r.timing.max);
        out << line;
    }
}

}  // namespace textcascade
