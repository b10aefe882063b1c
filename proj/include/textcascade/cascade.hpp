#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textcascade/evaluation.hpp"
#include "textcascade/neighbor.hpp"
#include "textcascade/recurrent.hpp"

namespace textcascade {

/// First-stage candidate count t and final answer count N.
struct CascadeConfig {
    std::size_t t = 0;
    std::size_t n = 0;

    /// Requires t >= 1 and N >= 1. t <= N is accepted so that full sweeps
    /// over t can be run; such a cascade can return at most t classes.
    static CascadeConfig make(std::size_t t, std::size_t n);
    bool reduces() const { return t > n; }
};

/// Top-t classes of the recurrent model, then the second stage restricted to
/// them. Throws ContractViolation if the model's class count differs from
/// the index's.
ScoredClasses run_cascade(const Query& query, const RecurrentModel& model, const TrainingIndex& index,
                          const CascadeConfig& config);

/// Exact counts behind alpha(t) and rho(t) over one query set.
///   alpha(t) = #{q : rank1(q) <= t} / #queries
///   rho(t)   = #{q : rank1(q) <= t and hit2(q)} / #{q : hit2(q)}
/// where rank1 is the first stage's rank of the correct class and hit2 says
/// the uncascaded second stage has it in its top N.
class ProfileCurve {
public:
    /// `ranks` are 1-based and must lie in [1, class_count]. Throws
    /// ContractViolation on empty input or bad ranks.
    ProfileCurve(std::size_t class_count, std::size_t n, std::vector<std::string> query_ids,
                 std::vector<std::size_t> ranks, std::vector<bool> hit2,
                 std::vector<std::string> excluded = {});

    std::size_t class_count() const { return class_count_; }
    std::size_t n() const { return n_; }
    std::size_t query_count() const { return ranks_.size(); }
    std::size_t m2_hits() const { return m2_hits_; }

    std::size_t alpha_hits(std::size_t t) const;  // numerator of alpha(t)
    std::size_t rho_hits(std::size_t t) const;    // numerator of rho(t)
    double alpha(std::size_t t) const;
    /// Throws std::domain_error when no query has hit2.
    double rho(std::size_t t) const;
    bool rho_defined() const { return m2_hits_ > 0; }

    /// t = 1 plus every t where alpha(t) != alpha(t - 1); each starts a plateau.
    const std::vector<std::size_t>& change_points() const { return change_points_; }

    const std::vector<std::string>& query_ids() const { return query_ids_; }
    const std::vector<std::size_t>& ranks() const { return ranks_; }
    const std::vector<bool>& hit2() const { return hit2_; }
    bool hit1(std::size_t q, std::size_t t) const { return ranks_.at(q) <= t; }
    /// Queries left out because their class has no training text.
    const std::vector<std::string>& excluded() const { return excluded_; }

private:
    std::size_t class_count_;
    std::size_t n_;
    std::vector<std::string> query_ids_;
    std::vector<std::size_t> ranks_;
    std::vector<bool> hit2_;
    std::vector<std::string> excluded_;
    std::vector<std::size_t> alpha_hits_;  // index t - 1
    std::vector<std::size_t> rho_hits_;
    std::size_t m2_hits_ = 0;
    std::vector<std::size_t> change_points_;
};

class UndefinedProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One full first-stage ranking and one uncascaded top-N second-stage pass
/// per query; no stage is re-run per t. Unseen-class queries are excluded and
/// listed. Throws ContractViolation on an empty query set and
/// UndefinedProfileError when no query has hit2.
ProfileCurve estimate_profiles(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                               const TrainingIndex& index, std::size_t n, std::size_t workers = 1);

/// Smallest t with rho(t) >= acc_m1 / acc_m2, or nullopt if none.
/// Throws ContractViolation when acc_m2 <= 0.
std::optional<std::size_t> min_t_for_usefulness(const ProfileCurve& curve, double acc_m1, double acc_m2);

/// The only t values whose cascaded accuracy needs measuring.
std::vector<std::size_t> candidate_ts(const ProfileCurve& curve);

struct SelectOptions {
    std::optional<std::size_t> lower_cut;  // e.g. min_t_for_usefulness
    std::optional<std::size_t> upper_cut;  // largest acceptable t
    std::vector<std::size_t> extra_ts;     // evaluated in addition to change points
    EvalOptions eval;
    std::string model_name = "cascade";
};

struct Selection {
    std::size_t best_t = 0;
    std::vector<EvaluationReport> reports;  // ascending t
};

/// The t values select_t evaluates: change points inside [lower, upper], the
/// lower cut itself (it starts the part of its plateau that is in range) and
/// the extras.
std::vector<std::size_t> selection_ts(const ProfileCurve& curve, const SelectOptions& options);

/// Evaluates the cascade at selection_ts and returns the most accurate t,
/// the smallest on ties.
Selection select_t(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                   const TrainingIndex& index, std::size_t n, const ProfileCurve& curve,
                   const SelectOptions& options = {});

EvaluationReport evaluate_cascade(std::span<const LabeledQuery> queries, const RecurrentModel& model,
                                  const TrainingIndex& index, const CascadeConfig& config,
                                  const EvalOptions& options, std::string model_name = "cascade");

struct Fraction {
    std::size_t num = 0;
    std::size_t den = 1;
    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

struct BoundCheck {
    std::size_t t = 0;
    Fraction cascaded;  // cascaded accuracy over the profiled queries
    Fraction bound;     // rho(t) * acc_m2 over the same queries
    bool holds = false;
    std::vector<std::string> query_violations;  // hit1 and hit2 but cascade missed
};

/// Checks cascaded accuracy >= rho(t) * acc_m2 for each report, in exact
/// integer arithmetic over the curve's queries, and that every query with
/// hit1 and hit2 is a cascaded hit. Reports need per-query records for the
/// curve's query ids and a t; otherwise ContractViolation.
std::vector<BoundCheck> verify_lower_bound(const ProfileCurve& curve,
                                           std::span<const EvaluationReport> reports);

struct PlateauCheck {
    /// (t1, t2) pairs inside one plateau with accuracy(t1) < accuracy(t2), t1 < t2.
    std::vector<std::pair<std::size_t, std::size_t>> violations;
    std::size_t argmax_t = 0;
    bool argmax_at_change_point = false;
    bool holds() const { return violations.empty() && argmax_at_change_point; }
};

/// Given reports at every t in 1..C, checks that accuracy never rises inside
/// an alpha plateau and that the smallest global argmax is a change point.
PlateauCheck verify_plateaus(const ProfileCurve& curve, std::span<const EvaluationReport> reports);

}  // namespace textcascade
