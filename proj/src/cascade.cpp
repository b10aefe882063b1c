#include "textcascade/cascade.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "textcascade/parallel.hpp"

namespace textcascade {

CascadeConfig CascadeConfig::make(std::size_t t, std::size_t n) {
    if (t == 0) throw ContractViolation("cascade needs t >= 1");
    if (n == 0) throw ContractViolation("cascade needs N >= 1");
    return CascadeConfig{t, n};
}

namespace {

void check_alignment(const RecurrentModel& model, const TrainingIndex& index) {
    if (class_count(model) != index.class_count()) {
        throw ContractViolation("first stage scores " + std::to_string(class_count(model)) +
                                " classes, index holds " + std::to_string(index.class_count()));
    }
}

ClassDistribution first_stage(const Query& query, const RecurrentModel& model, const TrainingIndex& index) {
    return classify(model, embed_tokens(query.tokens, index.table()));
}

}  // namespace

ScoredClasses run_cascade(const Query& query, const RecurrentModel& model, const TrainingIndex& index,
                          const CascadeConfig& config) {
    if (config.t == 0 || config.n == 0) throw ContractViolation("invalid cascade configuration");
    check_alignment(model, index);
    const auto candidates = top_t(first_stage(query, model, index), config.t);
    return top_n(query, index, config.n, std::span<const ClassId>(candidates));
}

ProfileCurve::ProfileCurve(std::size_t class_count, std::size_t n, std::vector<std::string> query_ids,
                           std::vector<std::size_t> ranks, std::vector<bool> hit2,
                           std::vector<std::string> excluded)
    : class_count_(class_count),
      n_(n),
      query_ids_(std::move(query_ids)),
      ranks_(std::move(ranks)),
      hit2_(std::move(hit2)),
      excluded_(std::move(excluded)) {
    if (class_count_ == 0) throw ContractViolation("profile over zero classes");
    if (ranks_.empty()) throw ContractViolation("profile over an empty query set");
    if (ranks_.size() != hit2_.size() || ranks_.size() != query_ids_.size()) {
        throw ContractViolation("profile inputs have different lengths");
    }
    std::vector<std::size_t> at_rank(class_count_ + 1, 0);
    std::vector<std::size_t> both_at_rank(class_count_ + 1, 0);
    for (std::size_t q = 0; q < ranks_.size(); ++q) {
        const auto r = ranks_[q];
        if (r == 0 || r > class_count_) {
            throw ContractViolation("first-stage rank " + std::to_string(r) + " outside 1.." +
                                    std::to_string(class_count_));
        }
        ++at_rank[r];
        if (hit2_[q]) {
            ++both_at_rank[r];
            ++m2_hits_;
        }
    }
    alpha_hits_.resize(class_count_);
    rho_hits_.resize(class_count_);
    std::size_t a = 0;
    std::size_t b = 0;
    for (std::size_t t = 1; t <= class_count_; ++t) {
        a += at_rank[t];
        b += both_at_rank[t];
        alpha_hits_[t - 1] = a;
        rho_hits_[t - 1] = b;
        if (t == 1 || alpha_hits_[t - 1] != alpha_hits_[t - 2]) change_points_.push_back(t);
    }
}

std::size_t ProfileCurve::alpha_hits(std::size_t t) const {
    if (t == 0) return 0;
    return alpha_hits_.at(std::min(t, class_count_) - 1);
}

std::size_t ProfileCurve::rho_hits(std::size_t t) const {
    if (t == 0) return 0;
    return rho_hits_.at(std::min(t, class_count_) - 1);
}

double ProfileCurve::alpha(std::size_t t) const {
    return static_cast<double>(alpha_hits(t)) / static_cast<double>(ranks_.size());
}

double ProfileCurve::rho(std::size_t t) const {
    if (m2_hits_ == 0) throw std::domain_error("rho is undefined: no query has the correct class in M2's top N");
    return static_cast<double>(rho_hits(t)) / static_cast<double>(m2_hits_);
}

ProfileCurve estimate_profiles(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                               const TrainingIndex& index, std::size_t n, std::size_t workers) {
    if (queries.empty()) throw ContractViolation("profile estimation needs a nonempty query set");
    if (n == 0) throw ContractViolation("profile estimation needs N >= 1");
    check_alignment(model, index);

    std::vector<std::size_t> ranks(queries.size(), 0);
    std::vector<char> hit2(queries.size(), 0);
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        const auto& lq = queries[i];
        if (lq.gold == kNoClass) return;
        ranks[i] = rank_of(first_stage(lq.query, model, index), lq.gold);
        const auto top = top_n(lq.query, index, n);
        hit2[i] = std::any_of(top.begin(), top.end(), [&](const ScoredClass& s) { return s.id == lq.gold; });
    });

    std::vector<std::string> ids;
    std::vector<std::size_t> kept_ranks;
    std::vector<bool> kept_hit2;
    std::vector<std::string> excluded;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (queries[i].gold == kNoClass) {
            excluded.push_back(queries[i].query.id);
            continue;
        }
        ids.push_back(queries[i].query.id);
        kept_ranks.push_back(ranks[i]);
        kept_hit2.push_back(hit2[i] != 0);
    }
    if (kept_ranks.empty()) throw ContractViolation("every profiling query has an unseen class");
    ProfileCurve curve(index.class_count(), n, std::move(ids), std::move(kept_ranks), std::move(kept_hit2),
                       std::move(excluded));
    if (!curve.rho_defined()) {
        throw UndefinedProfileError("rho is undefined: the second stage misses every profiling query");
    }
    return curve;
}

std::optional<std::size_t> min_t_for_usefulness(const ProfileCurve& curve, double acc_m1, double acc_m2) {
    if (!(acc_m2 > 0.0)) throw ContractViolation("usefulness cut needs a positive second-stage accuracy");
    const double ratio = acc_m1 / acc_m2;
    for (std::size_t t = 1; t <= curve.class_count(); ++t) {
        if (curve.rho(t) >= ratio) return t;
    }
    return std::nullopt;
}

std::vector<std::size_t> candidate_ts(const ProfileCurve& curve) { return curve.change_points(); }

std::vector<std::size_t> selection_ts(const ProfileCurve& curve, const SelectOptions& options) {
    const std::size_t lower = options.lower_cut.value_or(1);
    const std::size_t upper = std::min(options.upper_cut.value_or(curve.class_count()), curve.class_count());
    std::set<std::size_t> ts;
    for (std::size_t t : curve.change_points()) {
        if (t >= lower && t <= upper) ts.insert(t);
    }
    if (options.lower_cut && lower <= upper) ts.insert(lower);
    for (std::size_t t : options.extra_ts) {
        if (t >= 1) ts.insert(std::min(t, curve.class_count()));
    }
    return {ts.begin(), ts.end()};
}

EvaluationReport evaluate_cascade(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                                  const TrainingIndex& index, const CascadeConfig& config,
                                  const EvalOptions& options, std::string model_name) {
    check_alignment(model, index);
    auto report = evaluate_ranker(
        std::move(model_name), queries, config.n,
        [&](const Query& q) {
            return RankResult{run_cascade(q, model, index, config), std::min(config.t, index.class_count())};
        },
        options);
    report.t = config.t;
    return report;
}

Selection select_t(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                   const TrainingIndex& index, std::size_t n, const ProfileCurve& curve,
                   const SelectOptions& options) {
    const auto ts = selection_ts(curve, options);
    if (ts.empty()) throw ContractViolation("no t value to evaluate in the requested range");
    Selection selection;
    std::size_t best_hits = 0;
    for (std::size_t t : ts) {
        auto report = evaluate_cascade(queries, model, index, CascadeConfig::make(t, n), options.eval,
                                       options.model_name);
        if (selection.reports.empty() || report.hits > best_hits) {
            best_hits = report.hits;
            selection.best_t = t;
        }
        selection.reports.push_back(std::move(report));
    }
    return selection;
}

namespace {

std::unordered_map<std::string_view, const QueryRecord*> records_by_id(const EvaluationReport& report) {
    std::unordered_map<std::string_view, const QueryRecord*> by_id;
    for (const auto& r : report.queries) by_id.emplace(r.query_id, &r);
    return by_id;
}

}  // namespace

std::vector<BoundCheck> verify_lower_bound(const ProfileCurve& curve,
                                           std::span<const EvaluationReport> reports) {
    std::vector<BoundCheck> checks;
    checks.reserve(reports.size());
    for (const auto& report : reports) {
        if (!report.t) throw ContractViolation("lower-bound check needs cascaded reports with t");
        const std::size_t t = *report.t;
        const auto by_id = records_by_id(report);
        BoundCheck check;
        check.t = t;
        check.cascaded.den = curve.query_count();
        check.bound.den = curve.query_count();
        // rho(t) * acc_m2 = (rho_hits / m2_hits) * (m2_hits / Q) = rho_hits / Q
        check.bound.num = curve.rho_hits(t);
        for (std::size_t q = 0; q < curve.query_count(); ++q) {
            auto it = by_id.find(curve.query_ids()[q]);
            if (it == by_id.end()) {
                throw ContractViolation("report for t=" + std::to_string(t) + " lacks query '" +
                                        curve.query_ids()[q] + "'");
            }
            const bool hit = it->second->hit;
            if (hit) ++check.cascaded.num;
            if (curve.hit1(q, t) && curve.hit2()[q] && !hit) {
                check.query_violations.push_back(curve.query_ids()[q]);
            }
        }
        check.holds = check.cascaded.num >= check.bound.num;
        checks.push_back(std::move(check));
    }
    return checks;
}

PlateauCheck verify_plateaus(const ProfileCurve& curve, std::span<const EvaluationReport> reports) {
    std::map<std::size_t, std::size_t> hits_at;
    for (const auto& r : reports) {
        if (!r.t) throw ContractViolation("plateau check needs cascaded reports with t");
        hits_at[*r.t] = r.hits;
    }
    for (std::size_t t = 1; t <= curve.class_count(); ++t) {
        if (!hits_at.count(t)) {
            throw ContractViolation("plateau check needs a report at every t; missing t=" + std::to_string(t));
        }
    }
    PlateauCheck check;
    const auto& cps = curve.change_points();
    for (std::size_t p = 0; p < cps.size(); ++p) {
        const std::size_t start = cps[p];
        const std::size_t end = p + 1 < cps.size() ? cps[p + 1] - 1 : curve.class_count();
        for (std::size_t t1 = start; t1 <= end; ++t1) {
            for (std::size_t t2 = t1 + 1; t2 <= end; ++t2) {
                if (hits_at[t1] < hits_at[t2]) check.violations.emplace_back(t1, t2);
            }
        }
    }
    std::size_t best = 0;
    for (const auto& [t, hits] : hits_at) {
        if (check.argmax_t == 0 || hits > best) {
            best = hits;
            check.argmax_t = t;
        }
    }
    check.argmax_at_change_point = std::binary_search(cps.begin(), cps.end(), check.argmax_t);
    return check;
}

}  // namespace textcascade
