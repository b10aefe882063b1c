#include <charconv>
#include <ostream>

#include "textcascade/harness.hpp"
#include "textcascade/parallel.hpp"

namespace textcascade {

namespace {

ScoredClasses first_stage_top(const RecurrentModel& model, const WordVectorTable& table, const Query& q,
                              std::size_t n) {
    const auto dist = classify(model, embed_tokens(q.tokens, table));
    ScoredClasses out;
    for (ClassId id : top_t(dist, n)) out.push_back({id, dist.probs[id]});
    return out;
}

void stamp(EvaluationReport& report, const SweepSpec& spec) {
    report.seed = spec.seed;
    report.split = std::string(split_name(spec.eval_split));
}

const RecurrentModel& cached_model(const Workspace& ws, CellKind cell, const SweepSpec& spec,
                                   ModelCache& models) {
    const std::string key(cell_name(cell));
    auto it = models.find(key);
    if (it == models.end()) it = models.emplace(key, train_first_stage(ws, cell, spec)).first;
    if (class_count(it->second) != ws.index->class_count()) {
        throw ContractViolation("first-stage model for " + key + " has the wrong class count");
    }
    return it->second;
}

}  // namespace

RecurrentModel train_first_stage(const Workspace& ws, CellKind cell, const SweepSpec& spec) {
    TrainConfig config;
    config.cell = cell;
    config.hidden_dim = spec.hidden_dim;
    config.epochs = spec.epochs;
    config.learning_rate = spec.learning_rate;
    config.clip_norm = spec.clip_norm;
    config.seed = derive_seed(spec.seed, "rnn-" + std::string(cell_name(cell)));
    config.class_count = ws.index->class_count();
    const auto examples = training_examples(ws);
    return train(examples, *ws.table, config);
}

SweepResult run_sweep(const Workspace& ws, const SweepSpec& spec, ModelCache& models) {
    if (spec.n == 0) throw ContractViolation("N must be at least 1");
    if (spec.models.empty()) throw ContractViolation("the model roster is empty");
    const auto& index = *ws.index;
    const auto eval_queries = make_queries(ws, spec.eval_split);
    if (eval_queries.empty()) throw ContractViolation("the evaluation split has no queries");
    const EvalOptions eval{spec.repetitions, spec.workers};

    SweepResult result;
    const auto emit = [&](EvaluationReport report) {
        stamp(report, spec);
        result.reports.push_back(std::move(report));
    };

    for (const auto& name : spec.models) {
        if (name == "gru" || name == "lstm") {
            const auto& model = cached_model(ws, parse_cell(name), spec, models);
            emit(evaluate_ranker(
                name, eval_queries, spec.n,
                [&](const Query& q) { return RankResult{first_stage_top(model, *ws.table, q, spec.n), {}}; },
                eval));
        } else if (name == "sn-vectors") {
            emit(evaluate_ranker(
                name, eval_queries, spec.n,
                [&](const Query& q) { return RankResult{top_n(q, index, spec.n), {}}; }, eval));
        } else if (name == "sn-bigrams") {
            emit(evaluate_ranker(
                name, eval_queries, spec.n,
                [&](const Query& q) { return RankResult{top_n_snbigram(q, index, spec.n), {}}; }, eval));
        } else if (name == "bow") {
            emit(evaluate_ranker(
                name, eval_queries, spec.n,
                [&](const Query& q) { return RankResult{top_n_bow(q, index, spec.n), {}}; }, eval));
        } else if (name == "lsh-class" || name == "lsh-text") {
            const auto variant = name == "lsh-class" ? LshVariant::class_based : LshVariant::text_based;
            const auto lsh_seed = derive_seed(spec.seed, "lsh");
            for (std::size_t bits : spec.lsh_bits) {
                const HyperplaneFamily family(bits, 2 * ws.table->dim(), lsh_seed);
                const auto tables = build_tables(index, family);
                auto report = evaluate_ranker(
                    name, eval_queries, spec.n,
                    [&](const Query& q) {
                        auto r = lsh_classify(q, tables, family, index, spec.n, variant);
                        return RankResult{std::move(r.classes), r.candidate_count};
                    },
                    eval);
                report.lsh_bits = bits;
                report.lsh_seed = lsh_seed;
                emit(std::move(report));
            }
        } else if (name == "cascade-gru" || name == "cascade-lstm") {
            const auto cell_key = name.substr(std::string_view("cascade-").size());
            const auto& model = cached_model(ws, parse_cell(cell_key), spec, models);
            const auto profile_queries = make_queries(ws, spec.profile_split);
            const auto curve = estimate_profiles(profile_queries, model, index, spec.n, spec.workers);

            SelectOptions options;
            options.upper_cut = spec.max_t;
            options.extra_ts = spec.extra_ts;
            options.eval = eval;
            options.model_name = name;
            if (spec.usefulness_cut) {
                const double count = static_cast<double>(curve.query_count());
                const double acc1 = static_cast<double>(curve.alpha_hits(spec.n)) / count;
                const double acc2 = static_cast<double>(curve.m2_hits()) / count;
                options.lower_cut = min_t_for_usefulness(curve, acc1, acc2);
            }
            const auto selection = select_t(profile_queries, model, index, spec.n, curve, options);
            result.selected_t[cell_key] = selection.best_t;
            result.profiles.emplace(cell_key, curve);

            const auto ts = spec.all_candidate_ts ? selection_ts(curve, options)
                                                  : std::vector<std::size_t>{selection.best_t};
            for (std::size_t t : ts) {
                emit(evaluate_cascade(eval_queries, model, index, CascadeConfig::make(t, spec.n), eval, name));
            }
        } else {
            throw std::invalid_argument("unknown model '" + name + "'");
        }
    }
    return result;
}

std::size_t VerifyOutcome::bound_failures() const {
    std::size_t count = 0;
    for (const auto& b : bounds) count += b.holds ? 0 : 1;
    return count;
}

std::size_t VerifyOutcome::query_failures() const {
    std::size_t count = 0;
    for (const auto& b : bounds) count += b.query_violations.size();
    return count;
}

bool VerifyOutcome::passed() const {
    return bound_failures() == 0 && query_failures() == 0 && plateaus.holds() && profile_sane &&
           cascade_matches_m2_at_full_t;
}

VerifyOutcome verify_cascade(const Workspace& ws, const RecurrentModel& model, std::string model_name,
                             std::span<const LabeledQuery> queries, std::size_t n, std::size_t workers) {
    const auto& index = *ws.index;
    VerifyOutcome out{std::move(model_name), estimate_profiles(queries, model, index, n, workers), {}, {}, {}};
    const auto classes = index.class_count();
    const EvalOptions eval{1, workers};
    for (std::size_t t = 1; t <= classes; ++t) {
        out.reports.push_back(evaluate_cascade(queries, model, index, CascadeConfig::make(t, n), eval, out.model));
    }
    out.bounds = verify_lower_bound(out.curve, out.reports);
    out.plateaus = verify_plateaus(out.curve, out.reports);
    out.profile_sane = profile_is_sane(out.curve);

    std::vector<char> same(queries.size(), 0);
    const auto full = CascadeConfig::make(classes, n);
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        const auto& q = queries[i].query;
        same[i] = run_cascade(q, model, index, full) == top_n(q, index, n);
    });
    out.cascade_matches_m2_at_full_t = std::all_of(same.begin(), same.end(), [](char c) { return c != 0; });
    return out;
}

bool profile_is_sane(const ProfileCurve& curve) {
    const auto classes = curve.class_count();
    for (std::size_t t = 2; t <= classes; ++t) {
        if (curve.alpha_hits(t) < curve.alpha_hits(t - 1)) return false;
        if (curve.rho_hits(t) < curve.rho_hits(t - 1)) return false;
    }
    if (curve.alpha_hits(classes) != curve.query_count() || curve.alpha(classes) != 1.0) return false;
    if (curve.rho_defined() && (curve.rho_hits(classes) != curve.m2_hits() || curve.rho(classes) != 1.0)) {
        return false;
    }
    return true;
}

void write_profile_csv(std::ostream& out, const ProfileCurve& curve) {
    const auto& points = curve.change_points();
    const auto number = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    out << "t,alpha,rho,is_change_point\n";
    std::size_t next = 0;
    for (std::size_t t = 1; t <= curve.class_count(); ++t) {
        const bool change = next < points.size() && points[next] == t;
        if (change) ++next;
        out << t << ',' << number(curve.alpha(t)) << ',' << (curve.rho_defined() ? number(curve.rho(t)) : "")
            << ',' << (change ? 1 : 0) << '\n';
    }
}

}  // namespace textcascade
