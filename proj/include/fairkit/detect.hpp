#ifndef FAIRKIT_DETECT_HPP
#define FAIRKIT_DETECT_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/dag.hpp"
#include "fairkit/dataset.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/intervention.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// Naive-vs-adjusted discrimination probe. Covariate roles come from the
/// user's DAG, never from data: confounders are the treatment's parents,
/// mediators the variables on directed treatment→outcome paths.
struct DetectionQuery {
    std::string treatment;
    std::string treatment_active;  // label coded as T=1
    std::string outcome;
    std::string outcome_positive;  // label coded as O=1
    CausalDag dag;

    void check(const Dataset& ds) const {
        if (treatment == outcome) throw Error("treatment and outcome must differ");
        reconcile(ds, dag);
        for (const auto& [name, label] :
             {std::pair{treatment, treatment_active}, std::pair{outcome, outcome_positive}}) {
            const int col = ds.column_or_throw(name);
            if (ds.schema[col].labels.size() != 2) {
                throw Error("'" + name + "' must be binary for detection");
            }
            if (label_index(ds.schema[col], label) < 0) {
                throw Error("label '" + label + "' is not in the domain of '" + name + "'");
            }
        }
    }
};

inline NameSet confounders(const DetectionQuery& q) { return parents(q.dag, q.treatment); }

/// Variables on a directed treatment→outcome path (excluding the endpoints).
inline NameSet mediators(const DetectionQuery& q) {
    NameSet out;
    for (const auto& mid : descendants(q.dag, q.treatment)) {
        if (mid == q.outcome) continue;
        if (descendants(q.dag, mid).count(q.outcome)) out.insert(mid);
    }
    return out;
}

struct NaiveComparison {
    double treated_mean = 0.0;    // Pr(O=1 | T=1)
    double untreated_mean = 0.0;  // Pr(O=1 | T=0)
    double difference = 0.0;      // treated − untreated
};

/// The raw group-by comparison a causal analysis starts from.
inline NaiveComparison naive_groupby(const Dataset& ds, const DetectionQuery& q) {
    q.check(ds);
    const int t_col = ds.column_or_throw(q.treatment);
    const int o_col = ds.column_or_throw(q.outcome);
    const int active = label_index(ds.schema[t_col], q.treatment_active);
    const int positive = label_index(ds.schema[o_col], q.outcome_positive);

    NaiveComparison out;
    for (int t : {0, 1}) {
        const std::uint8_t t_idx = static_cast<std::uint8_t>(t == 1 ? active : 1 - active);
        std::int64_t denom = 0, num = 0;
        for (const auto& [row, w] : ds.counts) {
            if (row[t_col] != t_idx) continue;
            denom += w;
            if (row[o_col] == static_cast<std::uint8_t>(positive)) num += w;
        }
        if (denom == 0) {
            throw Error("group " + q.treatment + "=" +
                        ds.schema[t_col].labels[t_idx] + " is empty");
        }
        const double mean = static_cast<double>(num) / static_cast<double>(denom);
        (t == 1 ? out.treated_mean : out.untreated_mean) = mean;
    }
    out.difference = out.treated_mean - out.untreated_mean;
    return out;
}

/// Total causal effect Pr(O=1|do(T=1)) − Pr(O=1|do(T=0)) by truncated
/// factorization, which adjusts for every confounder encoded in the DAG.
inline double adjusted_total_effect(const Dataset& ds, const DetectionQuery& q) {
    q.check(ds);
    const int t_col = ds.column_or_throw(q.treatment);
    const std::string inactive =
        ds.schema[t_col].labels[1 - label_index(ds.schema[t_col], q.treatment_active)];
    const double treated = interventional_prob(
        ds, q.dag, {q.outcome, q.outcome_positive, {{q.treatment, q.treatment_active}}});
    const double untreated =
        interventional_prob(ds, q.dag, {q.outcome, q.outcome_positive, {{q.treatment, inactive}}});
    return treated - untreated;
}

struct CdeContext {
    Assignment context;
    double weight = 0.0;  // empirical Pr(context)
    double treated = 0.0, untreated = 0.0, effect = 0.0;
    bool evaluated = false;  // false for contexts never observed (weight 0)
};

struct CdeReport {
    NameSet fixed;
    std::vector<CdeContext> contexts;
    /// Pr(context)-weighted mean of the per-context effects.
    double summary = 0.0;
};

/// Controlled direct effect: the treatment effect with the given mediators
/// pinned by intervention, per mediator context, plus the weighted summary.
/// `fix` defaults to every mediator; pass a subset to isolate one channel.
/// Contexts with zero empirical mass are skipped (weight 0); positivity
/// faults inside observed contexts propagate.
inline CdeReport controlled_direct_effect(const Dataset& ds, const DetectionQuery& q,
                                          std::optional<NameSet> fix = std::nullopt) {
    q.check(ds);
    const NameSet all_mediators = mediators(q);
    CdeReport report;
    report.fixed = fix.value_or(all_mediators);
    for (const auto& name : report.fixed) {
        if (!all_mediators.count(name)) {
            throw Error("'" + name + "' is not a mediator between " + q.treatment + " and " +
                        q.outcome);
        }
    }
    const int t_col = ds.column_or_throw(q.treatment);
    const std::string inactive =
        ds.schema[t_col].labels[1 - label_index(ds.schema[t_col], q.treatment_active)];
    const std::int64_t total = ds.total_weight();

    for (const auto& context : detail::domain_cross_product(ds, report.fixed)) {
        CdeContext row;
        row.context = context;
        const auto fixed_cells = detail::resolve_assignment(ds.schema, context);
        std::int64_t mass = 0;
        for (const auto& [r, w] : ds.counts) {
            if (detail::row_matches(r, fixed_cells)) mass += w;
        }
        row.weight = static_cast<double>(mass) / static_cast<double>(total);
        if (mass > 0) {
            Assignment do_treated = context;
            do_treated[q.treatment] = q.treatment_active;
            Assignment do_untreated = context;
            do_untreated[q.treatment] = inactive;
            row.treated = interventional_prob(ds, q.dag, {q.outcome, q.outcome_positive, do_treated});
            row.untreated =
                interventional_prob(ds, q.dag, {q.outcome, q.outcome_positive, do_untreated});
            row.effect = row.treated - row.untreated;
            row.evaluated = true;
            report.summary += row.weight * row.effect;
        }
        report.contexts.push_back(std::move(row));
    }
    return report;
}

struct MediatorExplanation {
    std::string label;
    double share_treated = 0.0;    // Pr(M=label | T=1)
    double share_untreated = 0.0;  // Pr(M=label | T=0)
    double outcome_rate = 0.0;     // Pr(O=1 | M=label)
    /// (share_treated − share_untreated) · (outcome_rate − Pr(O=1)):
    /// how much of the group composition difference lands on
    /// outcome-favoring values.
    double score = 0.0;
};

struct MediatorRank {
    std::string mediator;
    /// |total effect − direct effect with only this mediator pinned|.
    double contribution = 0.0;
    double cde_summary = 0.0;
    std::vector<MediatorExplanation> explanations;
};

/// Ranks mediators by how much of the total effect disappears when each one
/// alone is pinned, with per-label composition explanations. Descending by
/// contribution; ties alphabetical.
inline std::vector<MediatorRank> rank_mediators(const Dataset& ds, const DetectionQuery& q) {
    q.check(ds);
    const NameSet all_mediators = mediators(q);
    if (all_mediators.empty()) {
        throw Error("the DAG has no mediator between " + q.treatment + " and " + q.outcome);
    }
    const double total_effect = adjusted_total_effect(ds, q);
    const auto dist = empirical_distribution(ds);
    const double base_rate = event_prob(dist, {{q.outcome, q.outcome_positive}});
    const int t_col = ds.column_or_throw(q.treatment);
    const std::string active = q.treatment_active;
    const std::string inactive =
        ds.schema[t_col].labels[1 - label_index(ds.schema[t_col], active)];

    std::vector<MediatorRank> ranking;
    for (const auto& name : all_mediators) {
        MediatorRank entry;
        entry.mediator = name;
        entry.cde_summary = controlled_direct_effect(ds, q, NameSet{name}).summary;
        entry.contribution = std::fabs(total_effect - entry.cde_summary);

        const int m_col = ds.column_or_throw(name);
        for (const auto& label : ds.schema[m_col].labels) {
            MediatorExplanation ex;
            ex.label = label;
            ex.share_treated = event_prob(dist, {{name, label}}, {{q.treatment, active}});
            ex.share_untreated = event_prob(dist, {{name, label}}, {{q.treatment, inactive}});
            const double label_mass = event_prob(dist, {{name, label}});
            ex.outcome_rate =
                label_mass > 0.0
                    ? event_prob(dist, {{q.outcome, q.outcome_positive}}, {{name, label}})
                    : 0.0;
            ex.score = (ex.share_treated - ex.share_untreated) * (ex.outcome_rate - base_rate);
            entry.explanations.push_back(std::move(ex));
        }
        std::stable_sort(entry.explanations.begin(), entry.explanations.end(),
                         [](const MediatorExplanation& a, const MediatorExplanation& b) {
                             if (std::fabs(a.score) != std::fabs(b.score)) {
                                 return std::fabs(a.score) > std::fabs(b.score);
                             }
                             return a.label < b.label;
                         });
        ranking.push_back(std::move(entry));
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const MediatorRank& a, const MediatorRank& b) {
        if (a.contribution != b.contribution) return a.contribution > b.contribution;
        return a.mediator < b.mediator;
    });
    return ranking;
}

}  // namespace fairkit

#endif
