#ifndef FAIRKIT_CI_HPP
#define FAIRKIT_CI_HPP

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "fairkit/dataset.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// A conditional-independence statement (X ⊥ Y | Z).
struct CiStatement {
    NameSet x;
    NameSet y;
    NameSet z;

    void check() const {
        if (x.empty() || y.empty()) throw Error("CI statement needs nonempty X and Y");
        if (!sets_disjoint(x, y) || !sets_disjoint(x, z) || !sets_disjoint(y, z)) {
            throw Error("CI statement sets must be pairwise disjoint");
        }
    }

    std::string to_string() const {
        auto join = [](const NameSet& s) {
            std::string out;
            for (const auto& name : s) {
                if (!out.empty()) out += ",";
                out += name;
            }
            return out.empty() ? std::string("{}") : out;
        };
        return "(" + join(x) + " _||_ " + join(y) + " | " + join(z) + ")";
    }
};

struct CiPolicy {
    enum class Kind { Exact, GTest };
    Kind kind = Kind::Exact;
    /// Exact policy: verdict = (CMI in bits ≤ epsilon).
    double epsilon = 1e-9;
    /// G-test policy: significance level for the chi-square tail.
    double alpha = 0.05;
    /// G-test only: additive smoothing pseudo-count per contingency cell
    /// (0 = none). The exact path never smooths.
    double smoothing = 0.0;

    static CiPolicy exact(double eps = 1e-9) { return {Kind::Exact, eps, 0.05, 0.0}; }
    static CiPolicy gtest(double alpha = 0.05, double smoothing = 0.0) {
        return {Kind::GTest, 1e-9, alpha, smoothing};
    }
};

struct CiResult {
    bool holds = false;
    /// Conditional mutual information in bits under the tested distribution.
    double cmi_bits = 0.0;
    /// G-test only: statistic, degrees of freedom, p-value.
    double g_statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

namespace detail {

inline double domain_size_product(const Dataset& ds, const NameSet& names) {
    double prod = 1.0;
    for (const auto& name : names) prod *= static_cast<double>(ds.schema[ds.column_or_throw(name)].labels.size());
    return prod;
}

/// Distribution after adding `pseudo` to every cell of the full joint
/// cross-product of declared domains (not just the observed support).
inline Distribution smoothed_distribution(const Dataset& ds, double pseudo) {
    Distribution dist;
    dist.variables = ds.schema;
    double total = static_cast<double>(ds.total_weight());
    std::size_t cells = 1;
    for (const auto& v : ds.schema) cells *= v.labels.size();
    total += pseudo * static_cast<double>(cells);

    Row row(ds.schema.size(), 0);
    bool done = false;
    while (!done) {
        const auto it = ds.counts.find(row);
        const double w = (it == ds.counts.end() ? 0.0 : static_cast<double>(it->second)) + pseudo;
        if (w > 0.0) dist.mass[row] = w / total;
        // odometer over the full domain cross-product
        std::size_t col = ds.schema.size();
        while (col > 0) {
            --col;
            if (static_cast<std::size_t>(row[col]) + 1 < ds.schema[col].labels.size()) {
                ++row[col];
                break;
            }
            row[col] = 0;
            if (col == 0) done = true;
        }
        if (ds.schema.empty()) break;
    }
    return dist;
}

}  // namespace detail

/// Tests (X ⊥ Y | Z) on the dataset's empirical distribution.
///
/// Exact policy: verdict = CMI ≤ ε. G-test policy: G = 2·N·ln(2)·CMI is
/// compared to the chi-square distribution with the standard contingency
/// degrees of freedom (∏|dom X|−1)(∏|dom Y|−1)·∏|dom Z|, computed from the
/// declared domains; verdict = (p ≥ α).
inline CiResult ci_holds(const Dataset& ds, const CiStatement& s, const CiPolicy& policy = {}) {
    s.check();
    const std::int64_t n = ds.total_weight();
    if (n < 1) throw Error("empty dataset: no rows with positive weight");

    CiResult result;
    if (policy.kind == CiPolicy::Kind::Exact) {
        const auto dist = empirical_distribution(ds);
        result.cmi_bits = cond_mutual_info(dist, s.x, s.y, s.z);
        result.holds = result.cmi_bits <= policy.epsilon;
        return result;
    }

    const auto dist = policy.smoothing > 0.0 ? detail::smoothed_distribution(ds, policy.smoothing)
                                             : empirical_distribution(ds);
    result.cmi_bits = cond_mutual_info(dist, s.x, s.y, s.z);
    double effective_n = static_cast<double>(n);
    if (policy.smoothing > 0.0) {
        double cells = 1.0;
        for (const auto& v : ds.schema) cells *= static_cast<double>(v.labels.size());
        effective_n += policy.smoothing * cells;  // pseudo-counts add mass
    }
    result.g_statistic = 2.0 * effective_n * std::log(2.0) * result.cmi_bits;
    result.dof = (detail::domain_size_product(ds, s.x) - 1.0) *
                 (detail::domain_size_product(ds, s.y) - 1.0) *
                 detail::domain_size_product(ds, s.z);
    if (result.dof < 1.0) {
        result.p_value = 1.0;  // degenerate single-label domain: nothing to test
    } else {
        // upper chi-square tail: Q(dof/2, G/2)
        result.p_value = boost::math::gamma_q(result.dof / 2.0, result.g_statistic / 2.0);
    }
    result.holds = result.p_value >= policy.alpha;
    return result;
}

}  // namespace fairkit

#endif
