#ifndef FAIRKIT_DISTRIBUTION_HPP
#define FAIRKIT_DISTRIBUTION_HPP

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairkit/dataset.hpp"
#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// Partial assignment by name. std::map keeps iteration deterministic.
using Assignment = std::map<std::string, std::string>;

/// Normalized distribution over the listed variables. Only positive-mass
/// assignments are stored; anything absent has probability zero.
struct Distribution {
    VariableList variables;
    std::map<Row, double> mass;

    double prob(const Row& row) const {
        const auto it = mass.find(row);
        return it == mass.end() ? 0.0 : it->second;
    }

    double total() const {
        double t = 0.0;
        for (const auto& [row, p] : mass) t += p;
        return t;
    }

    int column(const std::string& name) const { return variable_index(variables, name); }
};

namespace detail {

/// Column indices for `names`, in the order the distribution declares them
/// (canonical order, independent of the set's own ordering).
inline std::vector<int> project_columns(const VariableList& vars, const NameSet& names) {
    std::vector<int> cols;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (names.count(vars[i].name)) cols.push_back(static_cast<int>(i));
    }
    if (cols.size() != names.size()) {
        for (const auto& name : names) {
            if (variable_index(vars, name) < 0) throw Error("unknown variable '" + name + "'");
        }
    }
    return cols;
}

inline Row project_row(const Row& row, const std::vector<int>& cols) {
    Row out(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) out[i] = row[cols[i]];
    return out;
}

/// Resolves a by-name assignment to (column, label index) pairs.
inline std::vector<std::pair<int, std::uint8_t>> resolve_assignment(const VariableList& vars,
                                                                    const Assignment& given) {
    std::vector<std::pair<int, std::uint8_t>> out;
    for (const auto& [name, label] : given) {
        const int col = variable_index(vars, name);
        if (col < 0) throw Error("unknown variable '" + name + "'");
        const int li = label_index(vars[col], label);
        if (li < 0) {
            throw Error("label '" + label + "' is not in the domain of '" + name + "'");
        }
        out.emplace_back(col, static_cast<std::uint8_t>(li));
    }
    return out;
}

inline bool row_matches(const Row& row, const std::vector<std::pair<int, std::uint8_t>>& fixed) {
    for (const auto& [col, li] : fixed) {
        if (row[col] != li) return false;
    }
    return true;
}

inline std::string format_assignment(const Assignment& a) {
    std::string out;
    for (const auto& [name, label] : a) {
        if (!out.empty()) out += ",";
        out += name + "=" + label;
    }
    return out;
}

/// All assignments over the declared domains of `vars`, odometer order with
/// the last schema column fastest. Empty set → one empty assignment.
inline std::vector<Assignment> domain_cross_product(const Dataset& ds, const NameSet& vars) {
    const auto cols = project_columns(ds.schema, vars);
    std::vector<Assignment> out;
    std::vector<std::size_t> idx(cols.size(), 0);
    while (true) {
        Assignment a;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const Variable& v = ds.schema[cols[i]];
            a[v.name] = v.labels[idx[i]];
        }
        out.push_back(std::move(a));
        std::size_t pos = cols.size();
        bool advanced = false;
        while (pos > 0) {
            --pos;
            if (idx[pos] + 1 < ds.schema[cols[pos]].labels.size()) {
                ++idx[pos];
                advanced = true;
                break;
            }
            idx[pos] = 0;
        }
        if (!advanced) break;
    }
    return out;
}

/// Distinct assignments over `vars` observed with positive weight, ordered by
/// the projected label-index tuple (deterministic).
inline std::vector<Assignment> observed_strata(const Dataset& ds, const NameSet& vars) {
    const auto cols = project_columns(ds.schema, vars);
    std::map<Row, bool> seen;
    for (const auto& [row, w] : ds.counts) {
        if (w > 0) seen[project_row(row, cols)] = true;
    }
    std::vector<Assignment> out;
    for (const auto& [key, unused] : seen) {
        Assignment a;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const Variable& v = ds.schema[cols[i]];
            a[v.name] = v.labels[key[i]];
        }
        out.push_back(std::move(a));
    }
    return out;
}

inline std::vector<std::pair<int, std::uint8_t>> to_fixed(const Dataset& ds, const Assignment& a) {
    return resolve_assignment(ds.schema, a);
}

}  // namespace detail

/// Plug-in empirical distribution: probability = multiplicity / total.
inline Distribution empirical_distribution(const Dataset& ds) {
    const std::int64_t total = ds.total_weight();
    if (total < 1) throw Error("empty dataset: no rows with positive weight");
    Distribution dist;
    dist.variables = ds.schema;
    for (const auto& [row, w] : ds.counts) {
        if (w > 0) dist.mass[row] = static_cast<double>(w) / static_cast<double>(total);
    }
    return dist;
}

/// Marginal over `names` (sums out everything else, keeps normalization).
/// Marginalizing to the empty set yields the single-cell distribution {() : 1}.
inline Distribution marginal(const Distribution& dist, const NameSet& names) {
    const auto cols = detail::project_columns(dist.variables, names);
    Distribution out;
    for (int c : cols) out.variables.push_back(dist.variables[c]);
    for (const auto& [row, p] : dist.mass) {
        if (p > 0.0) out.mass[detail::project_row(row, cols)] += p;
    }
    if (out.mass.empty()) out.mass[Row(cols.size())] = 1.0;  // degenerate, unreachable for valid input
    return out;
}

/// Conditional table over `target` given a fixed assignment. A condition with
/// zero probability has no conditional: that is an explicit fault here, and
/// callers choose how to react (skip the stratum, report "uncomparable", ...).
inline Distribution conditional(const Distribution& dist, const NameSet& target,
                                const Assignment& given) {
    for (const auto& [name, label] : given) {
        if (target.count(name)) {
            throw Error("conditional target and condition overlap on '" + name + "'");
        }
    }
    const auto cols = detail::project_columns(dist.variables, target);
    const auto fixed = detail::resolve_assignment(dist.variables, given);

    Distribution out;
    for (int c : cols) out.variables.push_back(dist.variables[c]);
    double denom = 0.0;
    for (const auto& [row, p] : dist.mass) {
        if (p > 0.0 && detail::row_matches(row, fixed)) {
            out.mass[detail::project_row(row, cols)] += p;
            denom += p;
        }
    }
    if (denom <= 0.0) {
        std::string stratum;
        for (const auto& [name, label] : given) {
            if (!stratum.empty()) stratum += ", ";
            stratum += name + "=" + label;
        }
        throw Error("undefined stratum: condition {" + stratum + "} has zero probability");
    }
    for (auto& [row, p] : out.mass) p /= denom;
    return out;
}

/// Probability of one event under the distribution, by name.
inline double event_prob(const Distribution& dist, const Assignment& event) {
    const auto fixed = detail::resolve_assignment(dist.variables, event);
    double p = 0.0;
    for (const auto& [row, mass] : dist.mass) {
        if (detail::row_matches(row, fixed)) p += mass;
    }
    return p;
}

/// Conditional probability Pr(event | given); throws on a zero-mass condition.
inline double event_prob(const Distribution& dist, const Assignment& event,
                         const Assignment& given) {
    const auto fixed_event = detail::resolve_assignment(dist.variables, event);
    const auto fixed_given = detail::resolve_assignment(dist.variables, given);
    double joint = 0.0, denom = 0.0;
    for (const auto& [row, mass] : dist.mass) {
        if (!detail::row_matches(row, fixed_given)) continue;
        denom += mass;
        if (detail::row_matches(row, fixed_event)) joint += mass;
    }
    if (denom <= 0.0) {
        std::string stratum;
        for (const auto& [name, label] : given) {
            if (!stratum.empty()) stratum += ", ";
            stratum += name + "=" + label;
        }
        throw Error("undefined stratum: condition {" + stratum + "} has zero probability");
    }
    return joint / denom;
}

/// Shannon entropy of the joint over `names`, in bits. 0·log0 contributes 0.
inline double entropy(const Distribution& dist, const NameSet& names) {
    const auto cols = detail::project_columns(dist.variables, names);
    std::map<Row, double> table;
    for (const auto& [row, p] : dist.mass) {
        if (p > 0.0) table[detail::project_row(row, cols)] += p;
    }
    double h = 0.0;
    for (const auto& [row, p] : table) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

/// Conditional mutual information I(X;Y|Z) in bits over the distribution's
/// support. Zero-probability strata carry zero weight. Mathematically ≥ 0;
/// float round-off may dip a hair below, so the result is clamped at 0.
inline double cond_mutual_info(const Distribution& dist, const NameSet& x, const NameSet& y,
                               const NameSet& z) {
    if (x.empty() || y.empty()) throw Error("mutual information needs nonempty X and Y");
    if (!sets_disjoint(x, y) || !sets_disjoint(x, z) || !sets_disjoint(y, z)) {
        throw Error("mutual information sets must be pairwise disjoint");
    }
    const auto xc = detail::project_columns(dist.variables, x);
    const auto yc = detail::project_columns(dist.variables, y);
    const auto zc = detail::project_columns(dist.variables, z);

    std::map<Row, double> pxyz;
    std::map<Row, double> pxz;
    std::map<Row, double> pyz;
    std::map<Row, double> pz;
    auto concat = [](const Row& a, const Row& b) {
        Row out = a;
        out.insert(out.end(), b.begin(), b.end());
        return out;
    };
    for (const auto& [row, p] : dist.mass) {
        if (p <= 0.0) continue;
        const Row rx = detail::project_row(row, xc);
        const Row ry = detail::project_row(row, yc);
        const Row rz = detail::project_row(row, zc);
        pxyz[concat(concat(rx, ry), rz)] += p;
        pxz[concat(rx, rz)] += p;
        pyz[concat(ry, rz)] += p;
        pz[rz] += p;
    }

    double info = 0.0;
    for (const auto& [key, p] : pxyz) {
        if (p <= 0.0) continue;
        const Row rx(key.begin(), key.begin() + xc.size());
        const Row ry(key.begin() + xc.size(), key.begin() + xc.size() + yc.size());
        const Row rz(key.begin() + xc.size() + yc.size(), key.end());
        const double num = p * pz.at(rz);
        const double den = pxz.at(concat(rx, rz)) * pyz.at(concat(ry, rz));
        info += p * std::log2(num / den);
    }
    return info < 0.0 ? 0.0 : info;
}

}  // namespace fairkit

#endif
