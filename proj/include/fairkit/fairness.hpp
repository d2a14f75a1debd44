#ifndef FAIRKIT_FAIRNESS_HPP
#define FAIRKIT_FAIRNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/ci.hpp"
#include "fairkit/dag.hpp"
#include "fairkit/dataset.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/intervention.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// Declared variable roles. The sensitive attribute and classifier outcome
/// must be binary; the protected group is S = protected_label, the positive
/// decision is O = positive_outcome. The optional training label Y powers the
/// error-rate metrics. Variables listed in neither the admissible nor the
/// inadmissible set default to inadmissible.
struct FairnessSpec {
    std::string sensitive;
    std::string protected_label;
    std::string outcome;
    std::string positive_outcome;
    std::string label;           // empty = undeclared
    std::string positive_label;  // positive value of the training label
    bool admissible_declared = false;
    NameSet admissible;
    bool inadmissible_declared = false;
    NameSet inadmissible;
    NameSet proxy;

    bool has_label() const { return !label.empty(); }
};

// ---------------------------------------------------------------------------
// FairnessSpec file format, one declaration per line:
//   sensitive S=protected_label
//   outcome O=positive_label
//   label Y=positive_label
//   admissible A,B,...
//   inadmissible C,...
//   proxy P,...
// `#` starts a comment. `admissible` with no names declares the empty set.
// ---------------------------------------------------------------------------

inline FairnessSpec parse_fairness_spec(std::istream& in) {
    FairnessSpec spec;
    bool saw_sensitive = false, saw_outcome = false, saw_label = false, saw_proxy = false;
    std::string line;
    std::size_t lineno = 0;

    auto parse_binding = [&](const std::string& rest, std::string& name, std::string& value) {
        const auto eq = rest.find('=');
        if (eq == std::string::npos) throw ParseError("expected NAME=label", lineno);
        name = detail::trim(rest.substr(0, eq));
        value = detail::trim(rest.substr(eq + 1));
        if (name.empty() || value.empty()) throw ParseError("expected NAME=label", lineno);
    };
    auto parse_names = [&](const std::string& rest, NameSet& out) {
        if (detail::trim(rest).empty()) return;  // declared empty set
        for (const auto& name : detail::split_csv_list(rest)) {
            if (name.empty()) throw ParseError("empty name in list", lineno);
            if (!out.insert(name).second) throw ParseError("name '" + name + "' listed twice", lineno);
        }
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto space = line.find(' ');
        const std::string keyword = space == std::string::npos ? line : line.substr(0, space);
        const std::string rest = space == std::string::npos ? "" : line.substr(space + 1);

        if (keyword == "sensitive") {
            if (saw_sensitive) throw ParseError("duplicate 'sensitive' declaration", lineno);
            parse_binding(rest, spec.sensitive, spec.protected_label);
            saw_sensitive = true;
        } else if (keyword == "outcome") {
            if (saw_outcome) throw ParseError("duplicate 'outcome' declaration", lineno);
            parse_binding(rest, spec.outcome, spec.positive_outcome);
            saw_outcome = true;
        } else if (keyword == "label") {
            if (saw_label) throw ParseError("duplicate 'label' declaration", lineno);
            parse_binding(rest, spec.label, spec.positive_label);
            saw_label = true;
        } else if (keyword == "admissible") {
            if (spec.admissible_declared) throw ParseError("duplicate 'admissible' declaration", lineno);
            parse_names(rest, spec.admissible);
            spec.admissible_declared = true;
        } else if (keyword == "inadmissible") {
            if (spec.inadmissible_declared) throw ParseError("duplicate 'inadmissible' declaration", lineno);
            parse_names(rest, spec.inadmissible);
            spec.inadmissible_declared = true;
        } else if (keyword == "proxy") {
            if (saw_proxy) throw ParseError("duplicate 'proxy' declaration", lineno);
            parse_names(rest, spec.proxy);
            saw_proxy = true;
        } else {
            throw ParseError("unrecognized declaration '" + keyword + "'", lineno);
        }
    }
    if (!saw_sensitive) throw ParseError("missing 'sensitive' declaration", 0);
    if (!saw_outcome) throw ParseError("missing 'outcome' declaration", 0);
    return spec;
}

inline FairnessSpec load_fairness_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fairness spec file '" + path + "'");
    return parse_fairness_spec(in);
}

namespace detail {

/// Resolved role columns and label indices. Group 1 = protected, group 0 =
/// privileged; outcome 1 = positive decision.
struct Roles {
    int s_col = -1, o_col = -1, y_col = -1;
    std::uint8_t s_idx[2] = {0, 0};  // [0] privileged, [1] protected
    std::uint8_t o_idx[2] = {0, 0};  // [0] negative, [1] positive
    std::uint8_t y_idx[2] = {0, 0};

    std::string group_label(const Dataset& ds, int g) const {
        return ds.schema[s_col].labels[s_idx[g]];
    }
};

inline void require_binary(const Dataset& ds, int col, const char* role) {
    if (ds.schema[col].labels.size() != 2) {
        throw Error(std::string(role) + " variable '" + ds.schema[col].name + "' must be binary (" +
                    std::to_string(ds.schema[col].labels.size()) + " labels found)");
    }
}

inline Roles resolve_roles(const Dataset& ds, const FairnessSpec& spec, bool need_label) {
    Roles r;
    r.s_col = ds.column_or_throw(spec.sensitive);
    require_binary(ds, r.s_col, "sensitive");
    const int prot = label_index(ds.schema[r.s_col], spec.protected_label);
    if (prot < 0) {
        throw Error("protected label '" + spec.protected_label + "' is not in the domain of '" +
                    spec.sensitive + "'");
    }
    r.s_idx[1] = static_cast<std::uint8_t>(prot);
    r.s_idx[0] = static_cast<std::uint8_t>(1 - prot);

    r.o_col = ds.column_or_throw(spec.outcome);
    require_binary(ds, r.o_col, "outcome");
    const int pos = label_index(ds.schema[r.o_col], spec.positive_outcome);
    if (pos < 0) {
        throw Error("positive outcome label '" + spec.positive_outcome +
                    "' is not in the domain of '" + spec.outcome + "'");
    }
    r.o_idx[1] = static_cast<std::uint8_t>(pos);
    r.o_idx[0] = static_cast<std::uint8_t>(1 - pos);

    if (need_label || spec.has_label()) {
        if (!spec.has_label()) throw Error("this metric requires a declared training label");
        r.y_col = ds.column_or_throw(spec.label);
        require_binary(ds, r.y_col, "training label");
        const int ypos = label_index(ds.schema[r.y_col], spec.positive_label);
        if (ypos < 0) {
            throw Error("positive label '" + spec.positive_label + "' is not in the domain of '" +
                        spec.label + "'");
        }
        r.y_idx[1] = static_cast<std::uint8_t>(ypos);
        r.y_idx[0] = static_cast<std::uint8_t>(1 - ypos);
    }
    return r;
}

using FixedCells = std::vector<std::pair<int, std::uint8_t>>;

inline std::int64_t count_rows(const Dataset& ds, const FixedCells& fixed) {
    std::int64_t n = 0;
    for (const auto& [row, w] : ds.counts) {
        if (row_matches(row, fixed)) n += w;
    }
    return n;
}

}  // namespace detail

/// Effective inadmissible set: everything that is not the sensitive
/// attribute, the outcome, the training label, or admissible. Unlisted
/// variables default to inadmissible.
inline NameSet effective_inadmissible(const Dataset& ds, const FairnessSpec& spec) {
    NameSet out;
    for (const auto& v : ds.schema) {
        if (v.name == spec.sensitive || v.name == spec.outcome) continue;
        if (spec.has_label() && v.name == spec.label) continue;
        if (spec.admissible.count(v.name)) continue;
        out.insert(v.name);
    }
    return out;
}

/// Cross-checks the spec against the dataset: role variables exist and are
/// binary with in-domain role labels; admissible/inadmissible/proxy sets name
/// real non-role columns; admissible and inadmissible do not overlap; the
/// proxy set excludes the outcome.
inline void validate_fairness_spec(const Dataset& ds, const FairnessSpec& spec) {
    detail::resolve_roles(ds, spec, false);
    if (spec.sensitive == spec.outcome || spec.sensitive == spec.label ||
        spec.outcome == spec.label) {
        throw Error("sensitive, outcome, and label must name distinct variables");
    }
    if (!sets_disjoint(spec.admissible, spec.inadmissible)) {
        throw Error("admissible and inadmissible sets overlap");
    }
    for (const NameSet* set : {&spec.admissible, &spec.inadmissible}) {
        for (const auto& name : *set) {
            ds.column_or_throw(name);
            if (name == spec.sensitive || name == spec.outcome ||
                (spec.has_label() && name == spec.label)) {
                throw Error("role variable '" + name + "' cannot be admissible or inadmissible");
            }
        }
    }
    for (const auto& name : spec.proxy) {
        ds.column_or_throw(name);
        if (name == spec.outcome) throw Error("the outcome cannot be a proxy for itself");
    }
}

// ---------------------------------------------------------------------------
// Metric reports
// ---------------------------------------------------------------------------

struct MetricRow {
    std::string context;   // stratum or do-context, "" when global
    std::string quantity;  // human-readable probability expression
    double value = 0.0;
    bool defined = true;   // false = uncomparable stratum/context
};

struct GapEntry {
    std::string context;
    double gap = 0.0;
    bool comparable = true;
};

struct MetricReport {
    std::string metric;
    std::vector<MetricRow> rows;
    std::vector<GapEntry> context_gaps;
    double gap = 0.0;  // max over comparable contexts
    double tau = 1e-6;
    bool fair = true;  // gap <= tau
    std::string note;

    const MetricRow* find_row(const std::string& quantity) const {
        for (const auto& row : rows) {
            if (row.quantity == quantity) return &row;
        }
        return nullptr;
    }
    const GapEntry* find_gap(const std::string& context) const {
        for (const auto& entry : context_gaps) {
            if (entry.context == context) return &entry;
        }
        return nullptr;
    }
};

namespace detail {

inline void finalize(MetricReport& report) {
    report.gap = 0.0;
    bool any = false;
    for (const auto& entry : report.context_gaps) {
        if (entry.comparable) {
            any = true;
            report.gap = std::max(report.gap, entry.gap);
        }
    }
    if (!any && !report.context_gaps.empty()) {
        throw Error(report.metric + ": no comparable stratum");
    }
    report.fair = report.gap <= report.tau;
}

}  // namespace detail

/// Demographic parity: Pr(O=1 | S=s) per group.
inline MetricReport demographic_parity(const Dataset& ds, const FairnessSpec& spec,
                                       double tau = 1e-6) {
    const auto r = detail::resolve_roles(ds, spec, false);
    MetricReport report;
    report.metric = "demographic_parity";
    report.tau = tau;

    double value[2];
    for (int g : {0, 1}) {
        const std::int64_t denom = detail::count_rows(ds, {{r.s_col, r.s_idx[g]}});
        if (denom == 0) {
            throw Error("demographic_parity: group " + spec.sensitive + "=" + r.group_label(ds, g) +
                        " is empty");
        }
        const std::int64_t num = detail::count_rows(ds, {{r.s_col, r.s_idx[g]}, {r.o_col, r.o_idx[1]}});
        value[g] = static_cast<double>(num) / static_cast<double>(denom);
        report.rows.push_back({"",
                               "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|" +
                                   spec.sensitive + "=" + r.group_label(ds, g) + ")",
                               value[g], true});
    }
    report.context_gaps.push_back({"", std::fabs(value[1] - value[0]), true});
    detail::finalize(report);
    return report;
}

/// Conditional statistical parity: group gaps within each observed stratum of
/// the conditioning set. Strata missing a group are reported uncomparable.
inline MetricReport conditional_statistical_parity(const Dataset& ds, const FairnessSpec& spec,
                                                   const NameSet& conditioning,
                                                   double tau = 1e-6) {
    const auto r = detail::resolve_roles(ds, spec, false);
    for (const auto& name : conditioning) {
        if (name == spec.sensitive || name == spec.outcome) {
            throw Error("conditioning set cannot include '" + name + "'");
        }
        ds.column_or_throw(name);
    }
    MetricReport report;
    report.metric = "conditional_statistical_parity";
    report.tau = tau;

    for (const auto& stratum : detail::observed_strata(ds, conditioning)) {
        const auto fixed = detail::to_fixed(ds, stratum);
        const std::string context = detail::format_assignment(stratum);
        double value[2];
        bool comparable = true;
        for (int g : {0, 1}) {
            auto cells = fixed;
            cells.emplace_back(r.s_col, r.s_idx[g]);
            const std::int64_t denom = detail::count_rows(ds, cells);
            if (denom == 0) {
                comparable = false;
                report.rows.push_back({context,
                                       "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|" +
                                           spec.sensitive + "=" + r.group_label(ds, g) +
                                           (context.empty() ? "" : "," + context) + ")",
                                       0.0, false});
                continue;
            }
            cells.emplace_back(r.o_col, r.o_idx[1]);
            value[g] = static_cast<double>(detail::count_rows(ds, cells)) /
                       static_cast<double>(denom);
            report.rows.push_back({context,
                                   "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|" +
                                       spec.sensitive + "=" + r.group_label(ds, g) +
                                       (context.empty() ? "" : "," + context) + ")",
                                   value[g], true});
        }
        report.context_gaps.push_back(
            {context, comparable ? std::fabs(value[1] - value[0]) : 0.0, comparable});
    }
    detail::finalize(report);
    return report;
}

namespace detail {

struct ErrorRates {
    double fp[2];  // Pr(O=1 | Y=0, S=g)
    double fn[2];  // Pr(O=0 | Y=1, S=g)
};

inline ErrorRates error_rates(const Dataset& ds, const FairnessSpec& spec, const Roles& r) {
    ErrorRates rates{};
    for (int g : {0, 1}) {
        for (int y : {0, 1}) {
            const std::int64_t denom =
                count_rows(ds, {{r.s_col, r.s_idx[g]}, {r.y_col, r.y_idx[y]}});
            if (denom == 0) {
                throw Error("empty cell " + spec.sensitive + "=" + r.group_label(ds, g) + "," +
                            spec.label + "=" + ds.schema[r.y_col].labels[r.y_idx[y]]);
            }
            const std::int64_t mistakes = count_rows(
                ds, {{r.s_col, r.s_idx[g]}, {r.y_col, r.y_idx[y]}, {r.o_col, r.o_idx[1 - y]}});
            const double rate = static_cast<double>(mistakes) / static_cast<double>(denom);
            if (y == 0) {
                rates.fp[g] = rate;
            } else {
                rates.fn[g] = rate;
            }
        }
    }
    return rates;
}

}  // namespace detail

/// Equalized odds: equal false-positive and false-negative rates across
/// groups. Requires a declared training label and all four (S,Y) cells.
inline MetricReport equalized_odds(const Dataset& ds, const FairnessSpec& spec, double tau = 1e-6) {
    const auto r = detail::resolve_roles(ds, spec, true);
    const auto rates = detail::error_rates(ds, spec, r);

    MetricReport report;
    report.metric = "equalized_odds";
    report.tau = tau;
    for (int g : {0, 1}) {
        report.rows.push_back({"false_positive_rate",
                               "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|" + spec.label +
                                   "=" + ds.schema[r.y_col].labels[r.y_idx[0]] + "," + spec.sensitive +
                                   "=" + r.group_label(ds, g) + ")",
                               rates.fp[g], true});
    }
    for (int g : {0, 1}) {
        report.rows.push_back({"false_negative_rate",
                               "Pr(" + spec.outcome + "=" +
                                   ds.schema[r.o_col].labels[r.o_idx[0]] + "|" + spec.label + "=" +
                                   spec.positive_label + "," + spec.sensitive + "=" +
                                   r.group_label(ds, g) + ")",
                               rates.fn[g], true});
    }
    report.context_gaps.push_back({"false_positive_rate", std::fabs(rates.fp[1] - rates.fp[0]), true});
    report.context_gaps.push_back({"false_negative_rate", std::fabs(rates.fn[1] - rates.fn[0]), true});
    detail::finalize(report);
    return report;
}

/// Predictive parity: equal Pr(Y=1 | O=o, S=g) across groups, per decision o.
inline MetricReport predictive_parity(const Dataset& ds, const FairnessSpec& spec,
                                      double tau = 1e-6) {
    const auto r = detail::resolve_roles(ds, spec, true);
    MetricReport report;
    report.metric = "predictive_parity";
    report.tau = tau;

    for (int o : {1, 0}) {
        const std::string context = o == 1 ? "positive_predictions" : "negative_predictions";
        double value[2];
        for (int g : {0, 1}) {
            const std::int64_t denom =
                detail::count_rows(ds, {{r.s_col, r.s_idx[g]}, {r.o_col, r.o_idx[o]}});
            if (denom == 0) {
                throw Error("empty cell " + spec.sensitive + "=" + r.group_label(ds, g) + "," +
                            spec.outcome + "=" + ds.schema[r.o_col].labels[r.o_idx[o]]);
            }
            const std::int64_t num = detail::count_rows(
                ds, {{r.s_col, r.s_idx[g]}, {r.o_col, r.o_idx[o]}, {r.y_col, r.y_idx[1]}});
            value[g] = static_cast<double>(num) / static_cast<double>(denom);
            report.rows.push_back({context,
                                   "Pr(" + spec.label + "=" + spec.positive_label + "|" +
                                       spec.outcome + "=" + ds.schema[r.o_col].labels[r.o_idx[o]] +
                                       "," + spec.sensitive + "=" + r.group_label(ds, g) + ")",
                                   value[g], true});
        }
        report.context_gaps.push_back({context, std::fabs(value[1] - value[0]), true});
    }
    detail::finalize(report);
    return report;
}

/// Proxy fairness: Pr(O=1 | do(P=p)) must agree across every assignment of
/// the proxy set's declared domains. Gap = max − min. Positivity faults
/// propagate: an unreachable proxy context is a modelling error here.
inline MetricReport proxy_fairness(const Dataset& ds, const CausalDag& dag,
                                   const FairnessSpec& spec, double tau = 1e-6) {
    detail::resolve_roles(ds, spec, false);
    if (spec.proxy.empty()) throw Error("proxy_fairness: the proxy set is empty");

    MetricReport report;
    report.metric = "proxy_fairness";
    report.tau = tau;
    double lo = 1.0, hi = 0.0;
    for (const auto& context : detail::domain_cross_product(ds, spec.proxy)) {
        InterventionQuery q{spec.outcome, spec.positive_outcome, context};
        const double value = interventional_prob(ds, dag, q);
        lo = std::min(lo, value);
        hi = std::max(hi, value);
        std::string do_text;
        for (const auto& [name, label] : context) {
            if (!do_text.empty()) do_text += ",";
            do_text += "do(" + name + "=" + label + ")";
        }
        report.rows.push_back({detail::format_assignment(context),
                               "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|" + do_text + ")",
                               value, true});
    }
    report.context_gaps.push_back({"", hi - lo, true});
    detail::finalize(report);
    return report;
}

namespace detail {

struct KfairContextResult {
    Assignment context;
    bool comparable = true;
    double value[2] = {0.0, 0.0};  // [0] privileged, [1] protected
    double gap = 0.0;
};

/// Per-context interventional outcome rates for do(S=s), do(K=k). Contexts
/// whose truncated factorization needs an unobserved stratum for either group
/// are flagged uncomparable instead of failing the whole query.
inline std::vector<KfairContextResult> kfair_contexts(const Dataset& ds, const CausalDag& dag,
                                                      const FairnessSpec& spec, const NameSet& k) {
    const auto r = resolve_roles(ds, spec, false);
    for (const auto& name : k) {
        ds.column_or_throw(name);
        if (name == spec.sensitive || name == spec.outcome) {
            throw Error("k_fair: context set cannot include '" + name + "'");
        }
    }
    std::vector<KfairContextResult> out;
    for (const auto& context : domain_cross_product(ds, k)) {
        KfairContextResult result;
        result.context = context;
        try {
            for (int g : {0, 1}) {
                Assignment interventions = context;
                interventions[spec.sensitive] = r.group_label(ds, g);
                InterventionQuery q{spec.outcome, spec.positive_outcome, interventions};
                result.value[g] = interventional_prob(ds, dag, q);
            }
            result.gap = std::fabs(result.value[1] - result.value[0]);
        } catch (const PositivityError&) {
            result.comparable = false;
        }
        out.push_back(std::move(result));
    }
    return out;
}

}  // namespace detail

/// K-fairness: |Pr(O=o|do(S=1),do(K=k)) − Pr(O=o|do(S=0),do(K=k))| over every
/// context k of K's declared domains. With a binary outcome the two outcome
/// values give the same gap, so each context carries a single gap entry.
inline MetricReport k_fair(const Dataset& ds, const CausalDag& dag, const FairnessSpec& spec,
                           const NameSet& k, double tau = 1e-6) {
    const auto r = detail::resolve_roles(ds, spec, false);
    MetricReport report;
    report.metric = "k_fair";
    report.tau = tau;
    for (const auto& result : detail::kfair_contexts(ds, dag, spec, k)) {
        std::string do_k;
        for (const auto& [name, label] : result.context) do_k += ",do(" + name + "=" + label + ")";
        const std::string context = detail::format_assignment(result.context);
        for (int g : {0, 1}) {
            report.rows.push_back({context,
                                   "Pr(" + spec.outcome + "=" + spec.positive_outcome + "|do(" +
                                       spec.sensitive + "=" + r.group_label(ds, g) + ")" + do_k + ")",
                                   result.comparable ? result.value[g] : 0.0, result.comparable});
        }
        report.context_gaps.push_back({context, result.gap, result.comparable});
    }
    detail::finalize(report);
    return report;
}

// ---------------------------------------------------------------------------
// Justifiable fairness
// ---------------------------------------------------------------------------

enum class JustifiableMode { Enumerate, Graph, Ci };
enum class Verdict { Fair, Unfair, Unknown };

struct JustifiabilityResult {
    Verdict verdict = Verdict::Unknown;
    JustifiableMode mode = JustifiableMode::Enumerate;
    /// Enumerate mode: the first failing superset and context.
    NameSet witness_k;
    Assignment witness_context;
    double witness_gap = 0.0;
    int supersets_checked = 0;
    /// Graph mode: a directed sensitive→outcome path avoiding the admissible set.
    std::vector<std::string> witness_path;
    /// CI mode: the tested statement and its result.
    CiStatement ci_statement;
    CiResult ci;
    std::string note;

    bool fair() const { return verdict == Verdict::Fair; }
};

/// Justifiable fairness: K-fair for every K ⊇ admissible (K ⊆ V − {S,O}).
///
/// `Enumerate` checks all supersets (fails if |V − {S,O}| exceeds the cap and
/// suggests the sufficient modes). `Graph` is the sufficient graphical check
/// that every directed S→O path passes through an admissible variable; when
/// the check fails the verdict is Unknown, not Unfair. `Ci` is the sufficient
/// saturated-independence check (O ⊥ inadmissible ∪ {S} | admissible).
inline JustifiabilityResult justifiably_fair(const Dataset& ds, const CausalDag& dag,
                                             const FairnessSpec& spec,
                                             JustifiableMode mode = JustifiableMode::Enumerate,
                                             double tau = 1e-6, int enumeration_cap = 12) {
    if (!spec.admissible_declared) {
        throw Error("justifiably_fair requires a declared admissible set (may be empty)");
    }
    detail::resolve_roles(ds, spec, false);
    JustifiabilityResult result;
    result.mode = mode;

    if (mode == JustifiableMode::Graph) {
        std::vector<std::string> witness;
        if (directed_paths_covered(dag, spec.sensitive, spec.outcome, spec.admissible, &witness)) {
            result.verdict = Verdict::Fair;
            result.note = "every directed path from " + spec.sensitive + " to " + spec.outcome +
                          " passes through the admissible set (sufficient condition)";
        } else {
            result.verdict = Verdict::Unknown;
            result.witness_path = witness;
            std::string path_text;
            for (const auto& node : witness) {
                if (!path_text.empty()) path_text += " -> ";
                path_text += node;
            }
            result.note = "directed path avoiding the admissible set: " + path_text +
                          " (sufficient condition fails; no verdict)";
        }
        return result;
    }

    if (mode == JustifiableMode::Ci) {
        CiStatement s;
        s.x = {spec.outcome};
        s.y = effective_inadmissible(ds, spec);
        s.y.insert(spec.sensitive);
        s.z = spec.admissible;
        result.ci_statement = s;
        result.ci = ci_holds(ds, s, CiPolicy::exact(1e-9));
        if (result.ci.holds) {
            result.verdict = Verdict::Fair;
            result.note = "saturated independence " + s.to_string() +
                          " holds on the data (sufficient condition)";
        } else {
            result.verdict = Verdict::Unknown;
            result.note = "saturated independence " + s.to_string() +
                          " fails (sufficient condition fails; no verdict)";
        }
        return result;
    }

    // Enumerate mode.
    NameSet rest;
    for (const auto& v : ds.schema) {
        if (v.name != spec.sensitive && v.name != spec.outcome) rest.insert(v.name);
    }
    for (const auto& name : spec.admissible) {
        if (!rest.count(name)) throw Error("admissible variable '" + name + "' is not available");
    }
    if (static_cast<int>(rest.size()) > enumeration_cap) {
        throw Error("justifiably_fair: " + std::to_string(rest.size()) +
                    " candidate variables exceed the enumeration cap (" +
                    std::to_string(enumeration_cap) + "); use the graph or ci mode");
    }
    std::vector<std::string> free_vars;
    for (const auto& name : rest) {
        if (!spec.admissible.count(name)) free_vars.push_back(name);
    }

    // Supersets ordered by size, then lexicographically — deterministic and
    // small witnesses first.
    std::vector<std::vector<std::string>> supersets;
    const std::size_t n_free = free_vars.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_free); ++mask) {
        std::vector<std::string> extra;
        for (std::size_t b = 0; b < n_free; ++b) {
            if (mask & (std::size_t{1} << b)) extra.push_back(free_vars[b]);
        }
        supersets.push_back(std::move(extra));
    }
    std::sort(supersets.begin(), supersets.end(),
              [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });

    int skipped = 0;
    for (const auto& extra : supersets) {
        NameSet k = spec.admissible;
        for (const auto& name : extra) k.insert(name);
        bool any_comparable = false;
        for (const auto& context : detail::kfair_contexts(ds, dag, spec, k)) {
            if (!context.comparable) continue;
            any_comparable = true;
            if (context.gap > tau) {
                result.verdict = Verdict::Unfair;
                result.witness_k = k;
                result.witness_context = context.context;
                result.witness_gap = context.gap;
                result.supersets_checked++;
                std::string k_text;
                for (const auto& name : k) {
                    if (!k_text.empty()) k_text += ",";
                    k_text += name;
                }
                result.note = "K={" + k_text + "} context {" +
                              detail::format_assignment(context.context) + "} gap " +
                              std::to_string(context.gap);
                return result;
            }
        }
        if (!any_comparable) ++skipped;
        result.supersets_checked++;
    }
    result.verdict = Verdict::Fair;
    result.note = "all " + std::to_string(result.supersets_checked) +
                  " admissible supersets are K-fair" +
                  (skipped ? " (" + std::to_string(skipped) + " with no comparable context)" : "");
    return result;
}

// ---------------------------------------------------------------------------
// Impossibility report
// ---------------------------------------------------------------------------

/// Per-group check of the error-rate identity
///   FP / (1 − FN) = [Pr(Y=1|S) / Pr(Y=0|S)] · [(1 − PPV) / PPV]
/// with both sides computed independently from the data.
struct ImpossibilityReport {
    double eo_fp_gap = 0.0, eo_fn_gap = 0.0;
    double pp_gap = 0.0;
    double prevalence_gap = 0.0;
    struct IdentitySide {
        std::string group;
        bool evaluated = false;
        double lhs = 0.0, rhs = 0.0;
        std::string note;
    };
    IdentitySide identity[2];
    bool identity_agrees = true;  // within tolerance wherever evaluated
    double tolerance = 1e-9;
};

inline ImpossibilityReport impossibility_check(const Dataset& ds, const FairnessSpec& spec,
                                               double tolerance = 1e-9) {
    const auto r = detail::resolve_roles(ds, spec, true);
    const auto rates = detail::error_rates(ds, spec, r);
    ImpossibilityReport report;
    report.tolerance = tolerance;
    report.eo_fp_gap = std::fabs(rates.fp[1] - rates.fp[0]);
    report.eo_fn_gap = std::fabs(rates.fn[1] - rates.fn[0]);

    double prevalence[2], ppv[2];
    bool ppv_defined[2];
    for (int g : {0, 1}) {
        const std::int64_t group_total = detail::count_rows(ds, {{r.s_col, r.s_idx[g]}});
        const std::int64_t positives =
            detail::count_rows(ds, {{r.s_col, r.s_idx[g]}, {r.y_col, r.y_idx[1]}});
        prevalence[g] = static_cast<double>(positives) / static_cast<double>(group_total);

        const std::int64_t predicted =
            detail::count_rows(ds, {{r.s_col, r.s_idx[g]}, {r.o_col, r.o_idx[1]}});
        ppv_defined[g] = predicted > 0;
        ppv[g] = ppv_defined[g]
                     ? static_cast<double>(detail::count_rows(
                           ds, {{r.s_col, r.s_idx[g]}, {r.o_col, r.o_idx[1]}, {r.y_col, r.y_idx[1]}})) /
                           static_cast<double>(predicted)
                     : 0.0;
    }
    report.prevalence_gap = std::fabs(prevalence[1] - prevalence[0]);
    report.pp_gap = ppv_defined[0] && ppv_defined[1] ? std::fabs(ppv[1] - ppv[0]) : 0.0;

    for (int g : {0, 1}) {
        auto& side = report.identity[g];
        side.group = spec.sensitive + "=" + r.group_label(ds, g);
        if (!ppv_defined[g]) {
            side.note = "no positive predictions; identity skipped";
        } else if (ppv[g] <= 0.0) {
            side.note = "PPV is zero; identity skipped";
        } else if (rates.fn[g] >= 1.0) {
            side.note = "true-positive rate is zero; identity skipped";
        } else if (prevalence[g] <= 0.0 || prevalence[g] >= 1.0) {
            side.note = "degenerate prevalence; identity skipped";
        } else {
            side.evaluated = true;
            side.lhs = rates.fp[g] / (1.0 - rates.fn[g]);
            side.rhs = (prevalence[g] / (1.0 - prevalence[g])) * ((1.0 - ppv[g]) / ppv[g]);
            if (std::fabs(side.lhs - side.rhs) > tolerance) report.identity_agrees = false;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Observational discrimination (stratified odds-ratio summary)
// ---------------------------------------------------------------------------

struct RodStratum {
    Assignment context;
    double weight = 0.0;       // Pr(stratum) over the whole dataset
    double odds_ratio = 0.0;   // protected odds over privileged odds
    bool comparable = false;   // all four (S,O) cells positive
};

struct RodReport {
    double value = 1.0;
    std::vector<RodStratum> strata;
    std::string note;
};

/// Stratified odds-ratio summary of the sensitive attribute's association
/// with the outcome, controlling for the admissible strata: the exp of the
/// stratum-weighted mean log odds ratio
///   [Pr(O=1|S=1,a)·Pr(O=0|S=0,a)] / [Pr(O=0|S=1,a)·Pr(O=1|S=0,a)]
/// over strata where all four (S,O) cells are populated. Value 1.0 means no
/// observational discrimination given the admissible set; swapping the group
/// labels maps the value to its reciprocal. This summary is a reconstruction:
/// reports must carry the note.
inline RodReport rod(const Dataset& ds, const FairnessSpec& spec) {
    if (!spec.admissible_declared) {
        throw Error("rod requires a declared admissible set (may be empty)");
    }
    const auto r = detail::resolve_roles(ds, spec, false);
    const double total = static_cast<double>(ds.total_weight());

    RodReport report;
    report.note =
        "reconstructed summary: exp of the stratum-weighted mean log odds ratio over the "
        "admissible strata; 1.0 = no observational discrimination";
    double weighted_log = 0.0;
    double weight_sum = 0.0;
    for (const auto& stratum : detail::observed_strata(ds, spec.admissible)) {
        const auto fixed = detail::to_fixed(ds, stratum);
        RodStratum row;
        row.context = stratum;
        std::int64_t cells[2][2];  // [group][outcome]
        bool all_positive = true;
        std::int64_t stratum_total = 0;
        for (int g : {0, 1}) {
            for (int o : {0, 1}) {
                auto query = fixed;
                query.emplace_back(r.s_col, r.s_idx[g]);
                query.emplace_back(r.o_col, r.o_idx[o]);
                cells[g][o] = detail::count_rows(ds, query);
                stratum_total += cells[g][o];
                if (cells[g][o] == 0) all_positive = false;
            }
        }
        row.weight = static_cast<double>(stratum_total) / total;
        row.comparable = all_positive;
        if (all_positive) {
            row.odds_ratio = (static_cast<double>(cells[1][1]) * static_cast<double>(cells[0][0])) /
                             (static_cast<double>(cells[1][0]) * static_cast<double>(cells[0][1]));
            weighted_log += row.weight * std::log(row.odds_ratio);
            weight_sum += row.weight;
        }
        report.strata.push_back(std::move(row));
    }
    if (weight_sum <= 0.0) {
        throw Error("rod: no stratum has all four sensitive/outcome cells populated");
    }
    report.value = std::exp(weighted_log / weight_sum);
    return report;
}

}  // namespace fairkit

#endif
