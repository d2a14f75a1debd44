#ifndef FAIRKIT_INTERVENTION_HPP
#define FAIRKIT_INTERVENTION_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairkit/dag.hpp"
#include "fairkit/dataset.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

struct InterventionQuery {
    std::string outcome;
    std::string outcome_value;
    /// do(X=x) assignments, variable name → label.
    Assignment interventions;
};

namespace detail {

/// Empirical conditional table of one variable given its DAG parents:
/// parent-assignment (label indices, parents in dataset column order) →
/// probabilities over the variable's labels. Strata never observed are absent.
struct ConditionalTable {
    int column = -1;
    std::vector<int> parent_columns;
    std::map<Row, std::vector<double>> table;
};

inline ConditionalTable build_conditional(const Dataset& ds, const CausalDag& dag,
                                          const std::string& name) {
    ConditionalTable ct;
    ct.column = ds.column_or_throw(name);
    for (const auto& parent : parents(dag, name)) {
        ct.parent_columns.push_back(ds.column_or_throw(parent));
    }
    std::sort(ct.parent_columns.begin(), ct.parent_columns.end());

    std::map<Row, std::vector<std::int64_t>> counts;
    const std::size_t domain = ds.schema[ct.column].labels.size();
    for (const auto& [row, w] : ds.counts) {
        if (w <= 0) continue;
        Row key(ct.parent_columns.size());
        for (std::size_t i = 0; i < ct.parent_columns.size(); ++i) key[i] = row[ct.parent_columns[i]];
        auto& cell = counts[key];
        if (cell.empty()) cell.assign(domain, 0);
        cell[row[ct.column]] += w;
    }
    for (const auto& [key, cell] : counts) {
        std::int64_t total = 0;
        for (std::int64_t c : cell) total += c;
        std::vector<double> probs(domain, 0.0);
        for (std::size_t v = 0; v < domain; ++v) {
            probs[v] = static_cast<double>(cell[v]) / static_cast<double>(total);
        }
        ct.table[key] = std::move(probs);
    }
    return ct;
}

}  // namespace detail

/// Interventional joint over the non-intervened variables, by truncated
/// factorization: the product, in topological order, of empirical
/// Pr(X | Pa(X)) for every non-intervened X, with intervened variables pinned
/// to their do-values wherever they appear in a parent set. Branches whose
/// running product hits zero are pruned; a parent stratum that is reachable
/// with positive weight but was never observed is a positivity fault.
inline Distribution truncated_joint(const Dataset& ds, const CausalDag& dag,
                                    const Assignment& interventions) {
    reconcile(ds, dag);
    const auto order = topological_order(dag);

    // resolve do-assignments to dataset columns/label indices
    std::vector<int> fixed_label(ds.schema.size(), -1);
    for (const auto& [name, label] : interventions) {
        const int col = ds.column(name);
        if (col < 0) throw Error("intervention on unknown variable '" + name + "'");
        const int li = label_index(ds.schema[col], label);
        if (li < 0) throw Error("label '" + label + "' is not in the domain of '" + name + "'");
        fixed_label[col] = li;
    }

    struct Step {
        int column;
        bool intervened;
        detail::ConditionalTable conditional;  // only for non-intervened
    };
    std::vector<Step> steps;
    for (const auto& name : order) {
        Step step;
        step.column = ds.column_or_throw(name);
        step.intervened = fixed_label[step.column] >= 0;
        if (!step.intervened) step.conditional = detail::build_conditional(ds, dag, name);
        steps.push_back(std::move(step));
    }

    std::vector<int> out_columns;
    for (std::size_t c = 0; c < ds.schema.size(); ++c) {
        if (fixed_label[c] < 0) out_columns.push_back(static_cast<int>(c));
    }

    Distribution out;
    for (int c : out_columns) out.variables.push_back(ds.schema[c]);

    Row scratch(ds.schema.size(), 0);
    for (std::size_t c = 0; c < ds.schema.size(); ++c) {
        if (fixed_label[c] >= 0) scratch[c] = static_cast<std::uint8_t>(fixed_label[c]);
    }

    auto descend = [&](auto&& self, std::size_t depth, double weight) -> void {
        if (depth == steps.size()) {
            Row key(out_columns.size());
            for (std::size_t i = 0; i < out_columns.size(); ++i) key[i] = scratch[out_columns[i]];
            out.mass[key] += weight;
            return;
        }
        const Step& step = steps[depth];
        if (step.intervened) {
            self(self, depth + 1, weight);
            return;
        }
        Row parent_key(step.conditional.parent_columns.size());
        for (std::size_t i = 0; i < parent_key.size(); ++i) {
            parent_key[i] = scratch[step.conditional.parent_columns[i]];
        }
        const auto it = step.conditional.table.find(parent_key);
        if (it == step.conditional.table.end()) {
            std::string stratum;
            for (std::size_t i = 0; i < parent_key.size(); ++i) {
                if (i) stratum += ", ";
                const int pc = step.conditional.parent_columns[i];
                stratum += ds.schema[pc].name + "=" + ds.schema[pc].labels[parent_key[i]];
            }
            throw PositivityError("positivity violation: Pr(" + ds.schema[step.column].name +
                                  " | {" + stratum + "}) is undefined (stratum never observed)");
        }
        for (std::size_t v = 0; v < it->second.size(); ++v) {
            const double p = it->second[v];
            if (p <= 0.0) continue;
            scratch[step.column] = static_cast<std::uint8_t>(v);
            self(self, depth + 1, weight * p);
        }
    };
    descend(descend, 0, 1.0);

    double total = 0.0;
    for (const auto& [row, p] : out.mass) total += p;
    if (total <= 0.0) throw Error("truncated factorization produced an empty distribution");
    for (auto& [row, p] : out.mass) p /= total;
    return out;
}

/// Pr(O = o | do(...)): marginalizes the truncated joint onto the outcome.
inline double interventional_prob(const Dataset& ds, const CausalDag& dag,
                                  const InterventionQuery& q) {
    if (q.interventions.count(q.outcome)) {
        throw Error("outcome '" + q.outcome + "' cannot also be intervened on");
    }
    const int col = ds.column_or_throw(q.outcome);
    if (label_index(ds.schema[col], q.outcome_value) < 0) {
        throw Error("label '" + q.outcome_value + "' is not in the domain of '" + q.outcome + "'");
    }
    const auto joint = truncated_joint(ds, dag, q.interventions);
    return event_prob(joint, {{q.outcome, q.outcome_value}});
}

}  // namespace fairkit

#endif
