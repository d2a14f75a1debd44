#ifndef FAIRKIT_REPAIR_HPP
#define FAIRKIT_REPAIR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fairkit/ci.hpp"
#include "fairkit/dataset.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// Minimal-change enforcement of a saturated independence (X ⊥ Y | Z) where
/// X ∪ Y ∪ Z covers every column: the dataset decomposes into independent
/// per-stratum X×Y contingency matrices, one per observed Z assignment.
struct RepairProblem {
    Dataset dataset;
    CiStatement constraint;
    /// Target conditional mutual information in bits; 0 = enforce exactly.
    double epsilon = 0.0;

    void check() const {
        constraint.check();
        NameSet covered = constraint.x;
        covered.insert(constraint.y.begin(), constraint.y.end());
        covered.insert(constraint.z.begin(), constraint.z.end());
        NameSet columns;
        for (const auto& v : dataset.schema) columns.insert(v.name);
        if (covered != columns) {
            throw Error("repair constraint must be saturated (mention every column exactly once)");
        }
        if (epsilon < 0.0) throw Error("repair tolerance must be nonnegative");
        if (dataset.total_weight() < 1) throw Error("empty dataset: nothing to repair");
    }
};

/// Signed multiplicity changes. Insertions are positive, deletions negative;
/// cost is the L1 norm. `achieved_cmi` is reported as exactly 0.0 whenever
/// the integer independence equations hold on every repaired stratum.
struct RepairPlan {
    VariableList schema;
    std::map<Row, std::int64_t> deltas;
    std::int64_t cost = 0;
    double achieved_cmi = 0.0;
    bool exact_independent = false;
    bool proven_optimal = false;
    std::string algorithm;
};

namespace detail {

/// Column layout of a saturated constraint: dataset columns split into the
/// X side, Y side, and conditioning side, each in schema order. Cells of a
/// stratum matrix are indexed x-major: cell = x_index * y_card + y_index,
/// with each side's own index an odometer over its columns (last fastest).
struct SaturatedLayout {
    std::vector<int> x_cols, y_cols, z_cols;
    std::size_t x_card = 1, y_card = 1;

    std::size_t cells() const { return x_card * y_card; }

    static SaturatedLayout make(const Dataset& ds, const CiStatement& s) {
        SaturatedLayout layout;
        layout.x_cols = project_columns(ds.schema, s.x);
        layout.y_cols = project_columns(ds.schema, s.y);
        layout.z_cols = project_columns(ds.schema, s.z);
        for (int c : layout.x_cols) layout.x_card *= ds.schema[c].labels.size();
        for (int c : layout.y_cols) layout.y_card *= ds.schema[c].labels.size();
        return layout;
    }

    std::size_t side_index(const Row& row, const std::vector<int>& cols,
                           const Dataset& ds) const {
        std::size_t idx = 0;
        for (int c : cols) idx = idx * ds.schema[c].labels.size() + row[c];
        return idx;
    }

    /// Rebuilds the full dataset row for (stratum, cell).
    Row full_row(const Dataset& ds, const Row& stratum, std::size_t cell) const {
        Row row(ds.schema.size(), 0);
        for (std::size_t i = 0; i < z_cols.size(); ++i) row[z_cols[i]] = stratum[i];
        std::size_t x_idx = cell / y_card;
        std::size_t y_idx = cell % y_card;
        for (std::size_t i = x_cols.size(); i > 0; --i) {
            const int c = x_cols[i - 1];
            row[c] = static_cast<std::uint8_t>(x_idx % ds.schema[c].labels.size());
            x_idx /= ds.schema[c].labels.size();
        }
        for (std::size_t i = y_cols.size(); i > 0; --i) {
            const int c = y_cols[i - 1];
            row[c] = static_cast<std::uint8_t>(y_idx % ds.schema[c].labels.size());
            y_idx /= ds.schema[c].labels.size();
        }
        return row;
    }
};

using StratumMatrix = std::vector<std::int64_t>;  // flattened x_card × y_card
using StrataMap = std::map<Row, StratumMatrix>;   // stratum key → matrix

inline StrataMap strata_matrices(const Dataset& ds, const SaturatedLayout& layout) {
    StrataMap out;
    for (const auto& [row, w] : ds.counts) {
        if (w <= 0) continue;
        Row key(layout.z_cols.size());
        for (std::size_t i = 0; i < layout.z_cols.size(); ++i) key[i] = row[layout.z_cols[i]];
        auto& matrix = out[key];
        if (matrix.empty()) matrix.assign(layout.cells(), 0);
        const std::size_t cell = layout.side_index(row, layout.x_cols, ds) * layout.y_card +
                                 layout.side_index(row, layout.y_cols, ds);
        matrix[cell] += w;
    }
    return out;
}

/// Exact integer independence: every cell satisfies n(x,y)·T = n(x)·n(y).
inline bool matrix_independent(const StratumMatrix& m, std::size_t rows, std::size_t cols) {
    std::int64_t total = 0;
    std::vector<std::int64_t> r(rows, 0), c(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            r[i] += m[i * cols + j];
            c[j] += m[i * cols + j];
            total += m[i * cols + j];
        }
    }
    if (total == 0) return true;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const auto lhs = static_cast<__int128>(m[i * cols + j]) * total;
            const auto rhs = static_cast<__int128>(r[i]) * c[j];
            if (lhs != rhs) return false;
        }
    }
    return true;
}

/// The matrix's contribution to N·CMI: Σ n·log2(n·T / (n_row·n_col)), bits.
inline double matrix_g_bits(const StratumMatrix& m, std::size_t rows, std::size_t cols) {
    std::int64_t total = 0;
    std::vector<std::int64_t> r(rows, 0), c(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            r[i] += m[i * cols + j];
            c[j] += m[i * cols + j];
            total += m[i * cols + j];
        }
    }
    if (total == 0) return 0.0;
    double g = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const std::int64_t n = m[i * cols + j];
            if (n > 0) {
                g += static_cast<double>(n) *
                     std::log2(static_cast<double>(n) * static_cast<double>(total) /
                               (static_cast<double>(r[i]) * static_cast<double>(c[j])));
            }
        }
    }
    return g < 0.0 ? 0.0 : g;
}

/// Largest-remainder rounding of a nonnegative real vector to integers with
/// the prescribed total; ties broken by cell order.
inline std::vector<std::int64_t> largest_remainder(const std::vector<double>& target,
                                                   std::int64_t total) {
    std::vector<std::int64_t> out(target.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double t = target[i] < 0.0 ? 0.0 : target[i];
        out[i] = static_cast<std::int64_t>(std::floor(t));
        assigned += out[i];
        remainders.emplace_back(t - std::floor(t), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::int64_t deficit = total - assigned;
    for (std::size_t k = 0; deficit > 0; ++k, --deficit) {
        ++out[remainders[k % remainders.size()].second];  // cycles if deficit > cells
    }
    // float drift could leave floors above the total; trim from the smallest
    // remainders upward without going negative
    for (std::size_t k = remainders.size(); deficit < 0 && k > 0; --k) {
        auto& cell = out[remainders[k - 1].second];
        if (cell > 0) {
            --cell;
            ++deficit;
        }
    }
    return out;
}

inline std::int64_t l1_cost(const StratumMatrix& a, const StratumMatrix& b) {
    std::int64_t cost = 0;
    for (std::size_t i = 0; i < a.size(); ++i) cost += std::llabs(a[i] - b[i]);
    return cost;
}

inline double l1_distance(const StratumMatrix& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(static_cast<double>(a[i]) - b[i]);
    return d;
}

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    while (b) {
        const std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

/// Builds the unique independence-exact table with the given margins, or an
/// empty vector when some product is not divisible by the total.
inline StratumMatrix product_table(const std::vector<std::int64_t>& rows,
                                   const std::vector<std::int64_t>& cols, std::int64_t total) {
    StratumMatrix out(rows.size() * cols.size(), 0);
    if (total == 0) return out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto prod = static_cast<__int128>(rows[i]) * cols[j];
            if (prod % total != 0) return {};
            out[i * cols.size() + j] = static_cast<std::int64_t>(prod / total);
        }
    }
    return out;
}

/// Snaps real margins to multiples of `unit` holding the total (LR over the
/// unit grid). Requires unit | total.
inline std::vector<std::int64_t> snap_margins(const std::vector<double>& target,
                                              std::int64_t total, std::int64_t unit) {
    std::vector<double> scaled(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) scaled[i] = target[i] / static_cast<double>(unit);
    auto units = largest_remainder(scaled, total / unit);
    for (auto& u : units) u *= unit;
    return units;
}

/// Margin sums of a real target matrix.
inline void real_margins(const std::vector<double>& target, std::size_t rows, std::size_t cols,
                         std::vector<double>& r, std::vector<double>& c) {
    r.assign(rows, 0.0);
    c.assign(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            r[i] += target[i * cols + j];
            c[j] += target[i * cols + j];
        }
    }
}

/// Integerizes a real product-form target (row sums × column sums / total)
/// into a stratum matrix with the same total. Largest-remainder rounding is
/// tried first; when the rounded table misses exact integer independence, a
/// deterministic scan over exactly-independent candidate tables near the
/// target runs, and the closest candidate is adopted if it does not cost more
/// than the rounded table (distance to the real target first, then cost
/// against the original matrix, then lexicographic cells). Otherwise the
/// rounded table stands, with its honest nonzero residual.
inline StratumMatrix integerize_product_target(const std::vector<double>& target,
                                               std::int64_t total, const StratumMatrix& original,
                                               std::size_t rows, std::size_t cols) {
    StratumMatrix rounded = largest_remainder(target, total);
    if (matrix_independent(rounded, rows, cols)) return rounded;
    const std::int64_t rounded_cost = l1_cost(rounded, original);

    std::vector<double> r_target, c_target;
    real_margins(target, rows, cols, r_target, c_target);

    struct Candidate {
        StratumMatrix table;
        double distance;
        std::int64_t cost;
    };
    std::vector<Candidate> candidates;
    auto consider = [&](StratumMatrix table) {
        if (table.empty()) return;
        candidates.push_back({std::move(table), 0.0, 0});
        candidates.back().distance = l1_distance(candidates.back().table, target);
        candidates.back().cost = l1_cost(candidates.back().table, original);
    };

    // A table is exactly independent iff cell = row·col/total for integer
    // margins. Fixing one side's margins forces the other side onto multiples
    // of total/gcd: enumerate one side, snap the other.
    if (rows <= 2) {
        for (std::int64_t b = 0; b <= total; ++b) {
            std::vector<std::int64_t> r_margin =
                rows == 1 ? std::vector<std::int64_t>{total} : std::vector<std::int64_t>{b, total - b};
            const std::int64_t g = rows == 1 ? total : gcd64(total, b);
            const std::int64_t unit = g == 0 ? 1 : total / g;
            consider(product_table(r_margin, snap_margins(c_target, total, unit), total));
            if (rows == 1) break;
        }
    }
    if (cols <= 2) {
        for (std::int64_t b = 0; b <= total; ++b) {
            std::vector<std::int64_t> c_margin =
                cols == 1 ? std::vector<std::int64_t>{total} : std::vector<std::int64_t>{b, total - b};
            const std::int64_t g = cols == 1 ? total : gcd64(total, b);
            const std::int64_t unit = g == 0 ? 1 : total / g;
            consider(product_table(snap_margins(r_target, total, unit), c_margin, total));
            if (cols == 1) break;
        }
    }
    if (rows > 2 && cols > 2) {
        // both sides wide: perturb rounded row margins within a small L1 ball
        const auto base = largest_remainder(r_target, total);
        std::vector<std::vector<std::int64_t>> row_candidates{base};
        for (std::size_t up = 0; up < rows; ++up) {
            for (std::size_t down = 0; down < rows; ++down) {
                if (up == down) continue;
                for (std::int64_t step : {std::int64_t{1}, std::int64_t{2}}) {
                    auto margin = base;
                    margin[up] += step;
                    margin[down] -= step;
                    if (margin[down] >= 0) row_candidates.push_back(std::move(margin));
                }
            }
        }
        for (const auto& r_margin : row_candidates) {
            std::int64_t unit = 1;
            for (const std::int64_t m : r_margin) {
                const std::int64_t g = gcd64(total, m);
                const std::int64_t s = g == 0 ? 1 : total / g;
                unit = unit / gcd64(unit, s) * s;  // lcm, still divides total
            }
            consider(product_table(r_margin, snap_margins(c_target, total, unit), total));
        }
    }

    const Candidate* best = nullptr;
    for (const auto& cand : candidates) {
        if (!best || cand.distance < best->distance ||
            (cand.distance == best->distance &&
             (cand.cost < best->cost ||
              (cand.cost == best->cost && cand.table < best->table)))) {
            best = &cand;
        }
    }
    if (best && best->cost <= rounded_cost) return best->table;
    return rounded;
}

/// Assembles a plan from per-stratum repaired matrices.
inline RepairPlan assemble_plan(const RepairProblem& p, const SaturatedLayout& layout,
                                const StrataMap& before, const StrataMap& after,
                                std::string algorithm) {
    RepairPlan plan;
    plan.schema = p.dataset.schema;
    plan.algorithm = std::move(algorithm);
    bool exact = true;
    double g_sum = 0.0;
    std::int64_t repaired_total = 0;
    for (const auto& [key, matrix] : after) {
        const auto it = before.find(key);
        for (std::size_t cell = 0; cell < matrix.size(); ++cell) {
            const std::int64_t old = it == before.end() ? 0 : it->second[cell];
            const std::int64_t delta = matrix[cell] - old;
            if (delta != 0) {
                plan.deltas[layout.full_row(p.dataset, key, cell)] = delta;
                plan.cost += std::llabs(delta);
            }
            repaired_total += matrix[cell];
        }
        if (!matrix_independent(matrix, layout.x_card, layout.y_card)) exact = false;
        g_sum += matrix_g_bits(matrix, layout.x_card, layout.y_card);
    }
    if (repaired_total < 1) throw Error("repair would empty the dataset");
    plan.exact_independent = exact;
    plan.achieved_cmi = exact ? 0.0 : g_sum / static_cast<double>(repaired_total);
    return plan;
}

}  // namespace detail

/// Closed-form repair: within each stratum, the target joint is the product
/// of the stratum's own X and Y margins, so each stratum total is preserved
/// exactly. Rounding residue aside, the repaired dataset satisfies the
/// constraint by construction.
inline RepairPlan independent_coupling(const RepairProblem& p) {
    p.check();
    const auto layout = detail::SaturatedLayout::make(p.dataset, p.constraint);
    const auto before = detail::strata_matrices(p.dataset, layout);
    detail::StrataMap after;
    for (const auto& [key, m] : before) {
        std::int64_t total = 0;
        std::vector<std::int64_t> r(layout.x_card, 0), c(layout.y_card, 0);
        for (std::size_t i = 0; i < layout.x_card; ++i) {
            for (std::size_t j = 0; j < layout.y_card; ++j) {
                r[i] += m[i * layout.y_card + j];
                c[j] += m[i * layout.y_card + j];
                total += m[i * layout.y_card + j];
            }
        }
        std::vector<double> target(layout.cells());
        for (std::size_t i = 0; i < layout.x_card; ++i) {
            for (std::size_t j = 0; j < layout.y_card; ++j) {
                target[i * layout.y_card + j] = static_cast<double>(r[i]) *
                                                static_cast<double>(c[j]) /
                                                static_cast<double>(total);
            }
        }
        after[key] =
            detail::integerize_product_target(target, total, m, layout.x_card, layout.y_card);
    }
    return detail::assemble_plan(p, layout, before, after, "ic");
}

/// Rank-one repair: each stratum matrix is replaced by its nearest (Frobenius)
/// nonnegative rank-one approximation — alternating power iterations for the
/// leading singular pair — rescaled to the stratum total and integerized.
inline RepairPlan matrix_factorization_repair(const RepairProblem& p, int iterations = 500) {
    p.check();
    const auto layout = detail::SaturatedLayout::make(p.dataset, p.constraint);
    const auto before = detail::strata_matrices(p.dataset, layout);
    detail::StrataMap after;
    for (const auto& [key, m] : before) {
        std::int64_t total = 0;
        for (const std::int64_t n : m) total += n;
        const std::size_t rows = layout.x_card, cols = layout.y_card;

        // alternating u ← Mv, v ← Mᵀu with L2 normalization: converges to the
        // leading singular pair, nonnegative because M is nonnegative
        std::vector<double> u(rows, 1.0), v(cols, 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t i = 0; i < rows; ++i) v[j] += static_cast<double>(m[i * cols + j]);
        }
        auto normalize = [](std::vector<double>& vec) {
            double norm = 0.0;
            for (const double x : vec) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& x : vec) x /= norm;
            }
            return norm;
        };
        normalize(v);
        for (int it = 0; it < iterations; ++it) {
            std::vector<double> nu(rows, 0.0), nv(cols, 0.0);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    nu[i] += static_cast<double>(m[i * cols + j]) * v[j];
                }
            }
            normalize(nu);
            for (std::size_t j = 0; j < cols; ++j) {
                for (std::size_t i = 0; i < rows; ++i) {
                    nv[j] += static_cast<double>(m[i * cols + j]) * nu[i];
                }
            }
            normalize(nv);
            double change = 0.0;
            for (std::size_t i = 0; i < rows; ++i) change = std::max(change, std::fabs(nu[i] - u[i]));
            for (std::size_t j = 0; j < cols; ++j) change = std::max(change, std::fabs(nv[j] - v[j]));
            u = std::move(nu);
            v = std::move(nv);
            if (change < 1e-15) break;
        }

        double u_sum = 0.0, v_sum = 0.0;
        for (const double x : u) u_sum += x;
        for (const double x : v) v_sum += x;
        std::vector<double> target(rows * cols, 0.0);
        if (u_sum * v_sum > 0.0) {
            const double scale = static_cast<double>(total) / (u_sum * v_sum);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) target[i * cols + j] = u[i] * v[j] * scale;
            }
        }
        after[key] = detail::integerize_product_target(target, total, m, rows, cols);
    }
    return detail::assemble_plan(p, layout, before, after, "mf");
}

namespace detail {

/// All exactly-independent nonnegative integer tables with total ≤ tmax,
/// grouped by total. A table is independent iff it equals rowᵀ·col/total for
/// integer margins, and fixing the column margins forces every row margin
/// onto multiples of a single unit — so enumeration over (total, column
/// composition, row composition in units) is complete and duplicate-free.
inline std::vector<std::vector<StratumMatrix>> independent_tables_by_total(std::size_t rows,
                                                                           std::size_t cols,
                                                                           std::int64_t tmax) {
    std::vector<std::vector<StratumMatrix>> by_total(static_cast<std::size_t>(tmax) + 1);
    by_total[0].push_back(StratumMatrix(rows * cols, 0));

    // enumerate compositions of n into k parts, calling sink on each
    auto compositions = [](std::int64_t n, std::size_t k, auto&& sink) {
        std::vector<std::int64_t> parts(k, 0);
        auto rec = [&](auto&& self, std::size_t pos, std::int64_t left) -> void {
            if (pos + 1 == k) {
                parts[pos] = left;
                sink(parts);
                return;
            }
            for (std::int64_t take = 0; take <= left; ++take) {
                parts[pos] = take;
                self(self, pos + 1, left - take);
            }
        };
        if (k > 0) rec(rec, 0, n);
    };

    for (std::int64_t total = 1; total <= tmax; ++total) {
        compositions(total, cols, [&](const std::vector<std::int64_t>& c_margin) {
            std::int64_t unit = 1;
            for (const std::int64_t m : c_margin) {
                const std::int64_t g = gcd64(total, m);
                const std::int64_t s = g == 0 ? 1 : total / g;
                unit = unit / gcd64(unit, s) * s;
            }
            compositions(total / unit, rows, [&](const std::vector<std::int64_t>& r_units) {
                std::vector<std::int64_t> r_margin(rows);
                for (std::size_t i = 0; i < rows; ++i) r_margin[i] = r_units[i] * unit;
                auto table = product_table(r_margin, c_margin, total);
                if (!table.empty()) by_total[static_cast<std::size_t>(total)].push_back(std::move(table));
            });
        });
    }
    return by_total;
}

using TablesByTotal = std::vector<std::vector<StratumMatrix>>;

/// Memoized view of `independent_tables_by_total`, shared across calls and
/// threads. The enumeration depends only on (rows, cols, tmax), and a cache
/// built for a larger tmax answers any smaller request — the outward scan in
/// `minimal_independent_table` never reaches totals beyond its cost bound, so
/// extra entries cannot change any result. Snapshots are handed out as
/// shared pointers: growth installs a fresh vector and never mutates one a
/// caller may still be reading.
inline std::shared_ptr<const TablesByTotal> shared_independent_tables(std::size_t rows,
                                                                      std::size_t cols,
                                                                      std::int64_t tmax) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const TablesByTotal>>
        cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{rows, cols}];
    if (!slot || static_cast<std::int64_t>(slot->size()) <= tmax) {
        slot = std::make_shared<const TablesByTotal>(
            independent_tables_by_total(rows, cols, tmax));
    }
    return slot;
}

/// Minimal-cost independent replacement for one stratum matrix, by scanning
/// candidate totals outward from the current total: any table at total T'
/// costs at least |T' − T|, so the scan provably terminates with the optimum.
/// `forbid_empty` excludes the all-zero table (used when the whole dataset
/// would otherwise vanish).
inline std::pair<StratumMatrix, std::int64_t> minimal_independent_table(
    const StratumMatrix& m, const TablesByTotal& by_total, bool forbid_empty = false) {
    std::int64_t total = 0;
    for (const std::int64_t n : m) total += n;
    const std::int64_t tmax = static_cast<std::int64_t>(by_total.size()) - 1;
    const StratumMatrix* best = nullptr;
    std::int64_t best_cost = 0;
    for (std::int64_t radius = 0; radius <= total + tmax; ++radius) {
        if (best && radius >= best_cost) break;
        for (const std::int64_t t : {total - radius, total + radius}) {
            if (t < 0 || t > tmax) continue;
            if (radius > 0 && t == total) continue;  // scanned at radius 0
            if (forbid_empty && t == 0) continue;
            for (const auto& table : by_total[static_cast<std::size_t>(t)]) {
                const std::int64_t cost = l1_cost(table, m);
                if (!best || cost < best_cost) {
                    best = &table;
                    best_cost = cost;
                }
            }
            if (radius == 0) break;  // both scan targets coincide at radius 0
        }
    }
    if (!best) throw Error("independent-table scan found no candidate");
    return {*best, best_cost};
}

}  // namespace detail

enum class CombinatorialMode { Hard, Soft };

namespace detail {

/// Search state for the local-search path: repaired matrices + bookkeeping.
struct SearchState {
    StrataMap matrices;
    std::int64_t total = 0;
    double g_sum = 0.0;  // Σ per-stratum N·CMI contributions, in bits

    double cmi() const { return total > 0 ? g_sum / static_cast<double>(total) : 0.0; }
};

/// Pareto frontier over (cmi, cost): kept entries have strictly decreasing
/// cost as cmi grows. Exactly-independent states enter with cmi = 0.0, so a
/// later query with ε = 0 finds them.
struct Frontier {
    struct Entry {
        double cmi = 0.0;
        std::int64_t cost = 0;
        StrataMap matrices;
        bool exact = false;
    };
    std::map<double, Entry> by_cmi;

    void offer(double cmi, std::int64_t cost, const StrataMap& matrices, bool exact) {
        auto it = by_cmi.upper_bound(cmi);
        if (it != by_cmi.begin()) {
            const auto& dominator = std::prev(it)->second;
            if (dominator.cost <= cost) return;  // dominated (or equal): keep first
        }
        auto [pos, inserted] = by_cmi.insert_or_assign(cmi, Entry{cmi, cost, matrices, exact});
        auto next = std::next(pos);
        while (next != by_cmi.end() && next->second.cost >= cost) next = by_cmi.erase(next);
    }

    /// Cheapest entry with cmi ≤ epsilon; falls back to the lowest-cmi entry.
    const Entry* select(double epsilon) const {
        const Entry* best = nullptr;
        for (const auto& [cmi, entry] : by_cmi) {
            if (cmi <= epsilon && (!best || entry.cost < best->cost)) best = &entry;
        }
        if (!best && !by_cmi.empty()) best = &by_cmi.begin()->second;
        return best;
    }
};

inline std::int64_t strata_cost(const StrataMap& a, const StrataMap& b) {
    std::int64_t cost = 0;
    for (const auto& [key, matrix] : a) {
        const auto it = b.find(key);
        for (std::size_t cell = 0; cell < matrix.size(); ++cell) {
            cost += std::llabs(matrix[cell] - (it == b.end() ? 0 : it->second[cell]));
        }
    }
    return cost;
}

inline bool strata_exact(const StrataMap& m, const SaturatedLayout& layout) {
    for (const auto& [key, matrix] : m) {
        if (!matrix_independent(matrix, layout.x_card, layout.y_card)) return false;
    }
    return true;
}

}  // namespace detail

/// Integer search for a minimal-cost delta vector enforcing the constraint.
///
/// Hard mode on small instances — every non-conditioning column binary, at
/// most 3 of them, every stratum total ≤ 12 — enumerates all exactly
/// independent tables per stratum and is provably minimal. Larger instances
/// and soft mode run a deterministic recorded local search: closed-form
/// anchor plans, a greedy steepest-descent chain, and a seeded
/// simulated-annealing walk all feed one Pareto frontier over
/// (achieved CMI, cost), from which the cheapest plan within ε is selected.
/// Because the frontier is built independently of ε, cost is non-increasing
/// in ε for a fixed seed, and the whole procedure is deterministic.
inline RepairPlan combinatorial_repair(const RepairProblem& p,
                                       CombinatorialMode mode = CombinatorialMode::Hard,
                                       std::int64_t budget = 2000, std::uint64_t seed = 0) {
    p.check();
    const auto layout = detail::SaturatedLayout::make(p.dataset, p.constraint);
    const auto before = detail::strata_matrices(p.dataset, layout);

    std::size_t non_conditioning = layout.x_cols.size() + layout.y_cols.size();
    bool all_binary = true;
    for (const auto& cols : {layout.x_cols, layout.y_cols}) {
        for (int c : cols) {
            if (p.dataset.schema[c].labels.size() != 2) all_binary = false;
        }
    }
    std::int64_t max_stratum = 0;
    for (const auto& [key, m] : before) {
        std::int64_t total = 0;
        for (const std::int64_t n : m) total += n;
        max_stratum = std::max(max_stratum, total);
    }
    const bool within_cap = all_binary && non_conditioning <= 3 && max_stratum <= 12;

    if (mode == CombinatorialMode::Hard && p.epsilon == 0.0 && within_cap) {
        const auto tables =
            detail::shared_independent_tables(layout.x_card, layout.y_card, 2 * max_stratum + 2);
        detail::StrataMap after;
        std::int64_t repaired_total = 0;
        const Row* heaviest = nullptr;
        std::int64_t heaviest_total = -1;
        for (const auto& [key, m] : before) {
            auto [table, cost] = detail::minimal_independent_table(m, *tables);
            std::int64_t t = 0;
            for (const std::int64_t n : table) t += n;
            repaired_total += t;
            std::int64_t orig = 0;
            for (const std::int64_t n : m) orig += n;
            if (orig > heaviest_total) {
                heaviest_total = orig;
                heaviest = &key;
            }
            after[key] = std::move(table);
        }
        if (repaired_total < 1 && heaviest) {
            // minimal repairs emptied everything; keep the heaviest stratum on
            // its cheapest nonzero independent table instead
            auto [table, cost] =
                detail::minimal_independent_table(before.at(*heaviest), *tables, true);
            after[*heaviest] = std::move(table);
        }
        auto plan = detail::assemble_plan(p, layout, before, after, "hard");
        plan.proven_optimal = true;
        return plan;
    }

    // Recorded local search. Budget caps both the greedy chain and the
    // annealing walk; every visited state is offered to the frontier.
    detail::Frontier frontier;
    auto offer_map = [&](const detail::StrataMap& matrices) {
        const bool exact = detail::strata_exact(matrices, layout);
        double g_sum = 0.0;
        std::int64_t total = 0;
        for (const auto& [key, m] : matrices) {
            g_sum += detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            for (const std::int64_t n : m) total += n;
        }
        if (total < 1) return;  // an empty dataset is not a repair
        const double cmi = exact ? 0.0 : (total > 0 ? g_sum / static_cast<double>(total) : 0.0);
        frontier.offer(cmi, detail::strata_cost(matrices, before), matrices, exact);
    };

    offer_map(before);
    for (const RepairPlan& anchor : {independent_coupling(p), matrix_factorization_repair(p)}) {
        detail::StrataMap matrices = before;
        for (const auto& [row, delta] : anchor.deltas) {
            Row key(layout.z_cols.size());
            for (std::size_t i = 0; i < layout.z_cols.size(); ++i) key[i] = row[layout.z_cols[i]];
            const std::size_t cell =
                layout.side_index(row, layout.x_cols, p.dataset) * layout.y_card +
                layout.side_index(row, layout.y_cols, p.dataset);
            matrices[key][cell] += delta;
        }
        offer_map(matrices);
    }
    if (within_cap) {
        // small instances: the provably minimal exact plan anchors ε = 0
        RepairProblem hard = p;
        hard.epsilon = 0.0;
        const auto plan = combinatorial_repair(hard, CombinatorialMode::Hard, budget, seed);
        detail::StrataMap matrices = before;
        for (const auto& [row, delta] : plan.deltas) {
            Row key(layout.z_cols.size());
            for (std::size_t i = 0; i < layout.z_cols.size(); ++i) key[i] = row[layout.z_cols[i]];
            const std::size_t cell =
                layout.side_index(row, layout.x_cols, p.dataset) * layout.y_card +
                layout.side_index(row, layout.y_cols, p.dataset);
            matrices[key][cell] += delta;
        }
        offer_map(matrices);
    }

    // Greedy steepest descent on CMI over single ±1 cell moves. Stratum keys
    // and cells are visited in deterministic order; ties keep the first move.
    {
        detail::SearchState state;
        state.matrices = before;
        for (const auto& [key, m] : state.matrices) {
            state.g_sum += detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            for (const std::int64_t n : m) state.total += n;
        }
        for (std::int64_t step = 0; step < budget; ++step) {
            if (state.cmi() <= 1e-12) break;
            double best_cmi = state.cmi();
            const Row* best_key = nullptr;
            std::size_t best_cell = 0;
            std::int64_t best_delta = 0;
            for (auto& [key, m] : state.matrices) {
                const double g_old = detail::matrix_g_bits(m, layout.x_card, layout.y_card);
                for (std::size_t cell = 0; cell < m.size(); ++cell) {
                    for (const std::int64_t delta : {std::int64_t{-1}, std::int64_t{1}}) {
                        if (m[cell] + delta < 0) continue;
                        if (state.total + delta < 1) continue;
                        m[cell] += delta;
                        const double g_new = detail::matrix_g_bits(m, layout.x_card, layout.y_card);
                        m[cell] -= delta;
                        const double cmi = (state.g_sum - g_old + g_new) /
                                           static_cast<double>(state.total + delta);
                        if (cmi < best_cmi) {
                            best_cmi = cmi;
                            best_key = &key;
                            best_cell = cell;
                            best_delta = delta;
                        }
                    }
                }
            }
            if (!best_key) break;
            auto& m = state.matrices[*best_key];
            const double g_old = detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            m[best_cell] += best_delta;
            state.g_sum += detail::matrix_g_bits(m, layout.x_card, layout.y_card) - g_old;
            state.total += best_delta;
            offer_map(state.matrices);
        }
    }

    // Seeded annealing walk over the same move set. Move choice uses explicit
    // modulo mapping so runs are reproducible across platforms.
    {
        std::mt19937_64 rng(seed);
        detail::SearchState state;
        state.matrices = before;
        for (const auto& [key, m] : state.matrices) {
            state.g_sum += detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            for (const std::int64_t n : m) state.total += n;
        }
        std::vector<Row> keys;
        for (const auto& [key, m] : state.matrices) keys.push_back(key);
        const std::size_t cells = layout.cells();
        double temperature = 0.05;
        for (std::int64_t step = 0; step < budget; ++step, temperature *= 0.995) {
            const std::uint64_t pick = rng() % (keys.size() * cells * 2);
            const Row& key = keys[pick / (cells * 2)];
            const std::size_t cell = (pick / 2) % cells;
            const std::int64_t delta = (pick % 2) == 0 ? -1 : 1;
            auto& m = state.matrices[key];
            if (m[cell] + delta < 0 || state.total + delta < 1) continue;
            const double g_old = detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            m[cell] += delta;
            const double g_new = detail::matrix_g_bits(m, layout.x_card, layout.y_card);
            const double cmi_new =
                (state.g_sum - g_old + g_new) / static_cast<double>(state.total + delta);
            const double diff = cmi_new - state.cmi();
            const double uniform =
                static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
            if (diff < 0.0 || uniform < std::exp(-diff / temperature)) {
                state.g_sum += g_new - g_old;
                state.total += delta;
                offer_map(state.matrices);
            } else {
                m[cell] -= delta;
            }
        }
    }

    const auto* chosen = frontier.select(p.epsilon);
    if (!chosen) throw Error("combinatorial repair found no feasible state");
    auto plan = detail::assemble_plan(p, layout, before, chosen->matrices,
                                      mode == CombinatorialMode::Hard ? "hard" : "soft");
    plan.proven_optimal = false;
    return plan;
}

/// Applies a plan, faulting on any negative repaired multiplicity.
inline Dataset apply_plan(const Dataset& original, const RepairPlan& plan) {
    Dataset repaired = original;
    for (const auto& [row, delta] : plan.deltas) {
        const std::int64_t result = repaired.counts[row] + delta;
        if (result < 0) {
            throw Error("plan drives a multiplicity negative");
        }
        if (result == 0) {
            repaired.counts.erase(row);
        } else {
            repaired.counts[row] = result;
        }
    }
    if (repaired.total_weight() < 1) throw Error("plan empties the dataset");
    return repaired;
}

struct RepairVerification {
    double cmi_before = 0.0;
    double cmi_after = 0.0;
    bool exact_independent = false;
    std::int64_t cost = 0;
    /// Per-column total-variation distance between original and repaired
    /// single-column marginals.
    std::map<std::string, double> marginal_drift;
    std::string note;
};

inline RepairVerification verify_repair(const Dataset& original, const RepairPlan& plan,
                                        const RepairProblem& p) {
    p.check();
    const Dataset repaired = apply_plan(original, plan);
    const auto layout = detail::SaturatedLayout::make(original, p.constraint);

    RepairVerification v;
    v.cost = 0;
    for (const auto& [row, delta] : plan.deltas) v.cost += std::llabs(delta);

    const auto dist_before = empirical_distribution(original);
    const auto dist_after = empirical_distribution(repaired);
    v.cmi_before = cond_mutual_info(dist_before, p.constraint.x, p.constraint.y, p.constraint.z);
    v.exact_independent =
        detail::strata_exact(detail::strata_matrices(repaired, layout), layout);
    v.cmi_after = v.exact_independent
                      ? 0.0
                      : cond_mutual_info(dist_after, p.constraint.x, p.constraint.y, p.constraint.z);

    for (const auto& var : original.schema) {
        const NameSet single{var.name};
        const auto before = marginal(dist_before, single);
        const auto after = marginal(dist_after, single);
        double tv = 0.0;
        for (std::size_t li = 0; li < var.labels.size(); ++li) {
            const Row cell{static_cast<std::uint8_t>(li)};
            tv += std::fabs(before.prob(cell) - after.prob(cell));
        }
        v.marginal_drift[var.name] = 0.5 * tv;
    }
    v.note =
        "enforcing the saturated independence is a sufficient condition for any classifier "
        "trained on the repaired data to be justifiably fair";
    return v;
}

/// Plan serialization: CSV with the assignment columns followed by `delta`,
/// nonzero deltas only, rows in deterministic assignment order.
inline void save_plan(const RepairPlan& plan, std::ostream& out) {
    for (const auto& v : plan.schema) out << detail::csv_escape(v.name) << ",";
    out << "delta\n";
    for (const auto& [row, delta] : plan.deltas) {
        for (std::size_t i = 0; i < plan.schema.size(); ++i) {
            out << detail::csv_escape(plan.schema[i].labels[row[i]]) << ",";
        }
        out << delta << "\n";
    }
}

inline void save_plan_file(const RepairPlan& plan, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_plan(plan, out);
}

/// Reads a plan back against a pinned schema. Cost is recomputed; achieved
/// statistics are not stored in the file and are left for verify_repair.
inline RepairPlan load_plan(std::istream& in, const VariableList& schema) {
    RepairPlan plan;
    plan.schema = schema;
    plan.algorithm = "loaded";
    std::vector<std::string> header;
    if (!detail::read_csv_record(in, header) || header.size() != schema.size() + 1) {
        throw ParseError("plan header must list every assignment column plus 'delta'", 1);
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (detail::trim(header[i]) != schema[i].name) {
            throw ParseError("plan column '" + header[i] + "' does not match schema column '" +
                                 schema[i].name + "'",
                             1);
        }
    }
    if (detail::trim(header.back()) != "delta") throw ParseError("last plan column must be 'delta'", 1);

    std::vector<std::string> fields;
    std::size_t lineno = 1;
    while (detail::read_csv_record(in, fields)) {
        ++lineno;
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields", lineno);
        }
        Row row(schema.size());
        for (std::size_t i = 0; i < schema.size(); ++i) {
            const int li = label_index(schema[i], detail::trim(fields[i]));
            if (li < 0) {
                throw ParseError("value '" + fields[i] + "' is outside the domain of '" +
                                     schema[i].name + "'",
                                 lineno);
            }
            row[i] = static_cast<std::uint8_t>(li);
        }
        std::int64_t delta = 0;
        try {
            std::size_t pos = 0;
            delta = std::stoll(detail::trim(fields.back()), &pos);
            if (pos != detail::trim(fields.back()).size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("delta '" + fields.back() + "' is not an integer", lineno);
        }
        if (delta != 0) {
            plan.deltas[row] += delta;
            plan.cost += std::llabs(delta);
        }
    }
    return plan;
}

inline RepairPlan load_plan_file(const std::string& path, const VariableList& schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open plan file '" + path + "'");
    return load_plan(in, schema);
}

}  // namespace fairkit

#endif
