// Shared test utilities: compact builders for DAGs/datasets plus independent
// reference implementations (oracles) that deliberately use different
// algorithms than the library, so agreement is meaningful.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fairkit/fairkit.hpp"

namespace testutil {

using fairkit::Assignment;
using fairkit::CausalDag;
using fairkit::Dataset;
using fairkit::Distribution;
using fairkit::NameSet;
using fairkit::Row;
using fairkit::Variable;

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// "A:0,1 B:x,y" -> VariableList
inline std::vector<Variable> schema_of(const std::string& text) {
    std::vector<Variable> out;
    std::stringstream ss(text);
    std::string token;
    while (ss >> token) {
        const auto colon = token.find(':');
        Variable v;
        v.name = token.substr(0, colon);
        std::stringstream labels(token.substr(colon + 1));
        std::string label;
        while (std::getline(labels, label, ',')) v.labels.push_back(label);
        out.push_back(std::move(v));
    }
    return out;
}

/// edges as "A>B A>C" (no spaces inside a token)
inline CausalDag dag_of(const std::string& vars, const std::string& edges) {
    CausalDag dag;
    dag.variables = schema_of(vars);
    std::stringstream ss(edges);
    std::string token;
    while (ss >> token) {
        const auto gt = token.find('>');
        dag.edges.push_back({token.substr(0, gt), token.substr(gt + 1)});
    }
    return dag;
}

struct WeightedRow {
    std::vector<std::string> labels;
    std::int64_t weight;
};

inline Dataset dataset_of(const std::string& vars, const std::vector<WeightedRow>& rows) {
    Dataset ds;
    ds.schema = schema_of(vars);
    for (const auto& r : rows) {
        Row row;
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            row.push_back(static_cast<std::uint8_t>(
                fairkit::label_index(ds.schema[i], r.labels[i])));
        }
        ds.add(row, r.weight);
    }
    return ds;
}

/// College admissions scenario 1: gender -> {hobby, department} -> outcome,
/// where hobby copies gender exactly and each department flips which gender
/// succeeds, so the aggregate rates coincide.
inline CausalDag college1_dag() {
    return dag_of("G:male,female D:A,B H:male,female O:0,1", "G>H G>D H>O D>O");
}
inline Dataset college1_data() {
    return dataset_of("G:male,female D:A,B H:male,female O:0,1",
                      {{{"male", "A", "male", "1"}, 16},
                       {{"male", "A", "male", "0"}, 4},
                       {{"male", "B", "male", "1"}, 16},
                       {{"male", "B", "male", "0"}, 64},
                       {{"female", "A", "female", "1"}, 16},
                       {{"female", "A", "female", "0"}, 64},
                       {{"female", "B", "female", "1"}, 16},
                       {{"female", "B", "female", "0"}, 4}});
}
inline fairkit::FairnessSpec college1_spec() {
    fairkit::FairnessSpec spec;
    spec.sensitive = "G";
    spec.protected_label = "female";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    spec.admissible_declared = true;
    spec.admissible = {"D"};
    spec.inadmissible_declared = true;
    spec.inadmissible = {"H"};
    spec.proxy = {"G"};
    return spec;
}

/// College admissions scenario 2: qualification confounds department and
/// outcome; the outcome is a deterministic copy of qualification, so every
/// do(D) context yields identical interventional outcome rates per gender.
inline CausalDag college2_dag() {
    return dag_of("G:male,female Q:0,1 D:A,B O:0,1", "G>D Q>D Q>O D>O");
}
inline Dataset college2_data() {
    return dataset_of("G:male,female Q:0,1 D:A,B O:0,1",
                      {{{"male", "1", "A", "1"}, 10},
                       {{"male", "1", "B", "1"}, 40},
                       {{"male", "0", "B", "0"}, 50},
                       {{"female", "1", "A", "1"}, 40},
                       {{"female", "1", "B", "1"}, 10},
                       {{"female", "0", "A", "0"}, 10},
                       {{"female", "0", "B", "0"}, 40}});
}
inline fairkit::FairnessSpec college2_spec() {
    fairkit::FairnessSpec spec;
    spec.sensitive = "G";
    spec.protected_label = "female";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    spec.admissible_declared = true;
    spec.admissible = {"D"};
    spec.inadmissible_declared = true;
    spec.inadmissible = {"Q"};
    return spec;
}

// ---------------------------------------------------------------------------
// d-separation oracle: exhaustive undirected-path enumeration with the
// chain / fork / collider blocking rules (the library moralizes instead).
// ---------------------------------------------------------------------------

namespace dsep_detail {

struct Graph {
    int n = 0;
    std::vector<std::vector<bool>> edge;  // edge[a][b]: a -> b
    std::vector<std::set<int>> desc;      // strict descendants

    explicit Graph(const CausalDag& dag) {
        const auto indexed = fairkit::detail::index_dag(dag);
        n = static_cast<int>(dag.variables.size());
        edge.assign(n, std::vector<bool>(n, false));
        for (int a = 0; a < n; ++a) {
            for (const int b : indexed.children[a]) edge[a][b] = true;
        }
        desc.assign(n, {});
        for (int v = 0; v < n; ++v) {
            // BFS forward
            std::vector<int> stack{v};
            std::set<int> seen;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                for (int w = 0; w < n; ++w) {
                    if (edge[cur][w] && seen.insert(w).second) stack.push_back(w);
                }
            }
            desc[v] = std::move(seen);
        }
    }
};

/// Does any active (unblocked) path exist from `from` to any node in `targets`
/// given conditioning set z? DFS over undirected paths tracking the edge
/// direction used to enter each node.
inline bool active_path(const Graph& g, int start, const std::set<int>& targets,
                        const std::set<int>& z) {
    // state: (node, arrived_via_incoming_edge). arrived_via_incoming = the
    // previous edge points INTO node (… -> node); false = (… <- node).
    struct State {
        int node;
        bool incoming;
    };
    std::vector<State> stack;
    std::set<std::pair<int, bool>> seen;
    auto push = [&](int node, bool incoming) {
        if (seen.insert({node, incoming}).second) stack.push_back({node, incoming});
    };
    // leaving the start along either edge direction
    for (int w = 0; w < g.n; ++w) {
        if (g.edge[start][w]) push(w, true);
        if (g.edge[w][start]) push(w, false);
    }
    while (!stack.empty()) {
        const auto [node, incoming] = stack.back();
        stack.pop_back();
        const bool in_z = z.count(node) > 0;
        bool z_descendant = in_z;
        for (const int d : g.desc[node]) {
            if (z.count(d)) {
                z_descendant = true;
                break;
            }
        }
        // Can the path terminate here? Terminating uses node as an endpoint,
        // no blocking rule applies to endpoints.
        if (targets.count(node)) return true;
        // Extend the path through `node`.
        for (int w = 0; w < g.n; ++w) {
            if (g.edge[node][w]) {
                // node -> w : node is a chain (incoming) or fork (outgoing)
                // middle point; blocked iff node in z.
                if (!in_z) push(w, true);
            }
            if (g.edge[w][node]) {
                // w -> node next means previous-edge orientation matters:
                // incoming+outgoing-reversed = collider at node.
                if (incoming) {
                    // … -> node <- w : collider; open iff node or a
                    // descendant of node is conditioned on.
                    if (z_descendant) push(w, false);
                } else {
                    // … <- node <- w : chain through node.
                    if (!in_z) push(w, false);
                }
            }
        }
    }
    return false;
}

}  // namespace dsep_detail

inline bool oracle_d_separated(const CausalDag& dag, const NameSet& x, const NameSet& y,
                               const NameSet& z) {
    dsep_detail::Graph g(dag);
    auto to_idx = [&](const NameSet& names) {
        std::set<int> out;
        for (const auto& name : names) out.insert(fairkit::variable_index(dag.variables, name));
        return out;
    };
    const auto xs = to_idx(x), ys = to_idx(y), zs = to_idx(z);
    for (const int s : xs) {
        if (dsep_detail::active_path(g, s, ys, zs)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// CMI oracle: direct triple-loop over the observed joint using plain maps,
// natural definition I(X;Y|Z) = sum p(xyz) log2( p(z)p(xyz) / (p(xz)p(yz)) ).
// ---------------------------------------------------------------------------

inline double oracle_cmi(const Distribution& dist, const NameSet& x, const NameSet& y,
                         const NameSet& z) {
    std::vector<int> xi, yi, zi;
    for (const auto& n : x) xi.push_back(fairkit::variable_index(dist.variables, n));
    for (const auto& n : y) yi.push_back(fairkit::variable_index(dist.variables, n));
    for (const auto& n : z) zi.push_back(fairkit::variable_index(dist.variables, n));
    auto key = [](const Row& row, const std::vector<int>& cols) {
        std::string k;
        for (const int c : cols) k += static_cast<char>('0' + row[c]);
        return k;
    };
    std::map<std::string, double> pz, pxz, pyz, pxyz;
    double total = 0.0;
    for (const auto& [row, mass] : dist.mass) {
        total += mass;
        pz[key(row, zi)] += mass;
        pxz[key(row, xi) + "|" + key(row, zi)] += mass;
        pyz[key(row, yi) + "|" + key(row, zi)] += mass;
        pxyz[key(row, xi) + "|" + key(row, yi) + "|" + key(row, zi)] += mass;
    }
    double bits = 0.0;
    for (const auto& [row, mass] : dist.mass) {
        if (mass <= 0) continue;
        const double p = mass / total;
        const double joint = pxyz[key(row, xi) + "|" + key(row, yi) + "|" + key(row, zi)] / total;
        const double a = pxz[key(row, xi) + "|" + key(row, zi)] / total;
        const double b = pyz[key(row, yi) + "|" + key(row, zi)] / total;
        const double c = pz[key(row, zi)] / total;
        // the log term is constant within a projected cell, so accumulating
        // row-by-row sums to the usual per-cell expression
        bits += p * std::log2((c * joint) / (a * b));
    }
    return bits;
}

// ---------------------------------------------------------------------------
// interventional-probability oracle: extract every CPT into explicit maps,
// then sum the truncated product over the full domain cross-product.
// ---------------------------------------------------------------------------

inline double oracle_interventional(const Dataset& ds, const CausalDag& dag,
                                    const std::string& outcome, const std::string& outcome_value,
                                    const Assignment& interventions) {
    const int n = static_cast<int>(ds.schema.size());
    const auto indexed = fairkit::detail::index_dag(dag);
    // parents by dataset column index (dag order may differ from ds order)
    std::vector<std::vector<int>> parents(n);
    for (int b = 0; b < n; ++b) {
        const int b_col = ds.column_or_throw(dag.variables[b].name);
        for (const int a : indexed.parents[b]) {
            parents[b_col].push_back(ds.column_or_throw(dag.variables[a].name));
        }
    }
    for (auto& p : parents) std::sort(p.begin(), p.end());

    // CPT maps keyed by parent-label string
    auto parent_key = [&](const Row& row, int v) {
        std::string k;
        for (const int p : parents[v]) k += std::to_string(row[p]) + ",";
        return k;
    };
    std::vector<std::map<std::string, std::vector<double>>> cpt(n);
    std::vector<std::map<std::string, double>> cpt_total(n);
    for (const auto& [row, w] : ds.counts) {
        for (int v = 0; v < n; ++v) {
            auto& bucket = cpt[v][parent_key(row, v)];
            bucket.resize(ds.schema[v].labels.size(), 0.0);
            bucket[row[v]] += static_cast<double>(w);
            cpt_total[v][parent_key(row, v)] += static_cast<double>(w);
        }
    }

    std::map<int, int> pinned;
    for (const auto& [name, value] : interventions) {
        const int col = ds.column_or_throw(name);
        pinned[col] = fairkit::label_index(ds.schema[col], value);
    }
    const int o_col = ds.column_or_throw(outcome);
    const int o_val = fairkit::label_index(ds.schema[o_col], outcome_value);

    // full cross-product, skipping assignments that contradict interventions
    Row row(n, 0);
    double matched = 0.0, total = 0.0;
    std::vector<int> radix(n);
    for (int v = 0; v < n; ++v) radix[v] = static_cast<int>(ds.schema[v].labels.size());
    std::int64_t combos = 1;
    for (int v = 0; v < n; ++v) combos *= radix[v];
    for (std::int64_t code = 0; code < combos; ++code) {
        std::int64_t rest = code;
        for (int v = n - 1; v >= 0; --v) {
            row[v] = static_cast<std::uint8_t>(rest % radix[v]);
            rest /= radix[v];
        }
        bool consistent = true;
        for (const auto& [col, val] : pinned) {
            if (row[col] != val) {
                consistent = false;
                break;
            }
        }
        if (!consistent) continue;
        double p = 1.0;
        bool defined = true;
        for (int v = 0; v < n && defined; ++v) {
            if (pinned.count(v)) continue;
            const auto key = parent_key(row, v);
            const auto it = cpt[v].find(key);
            if (it == cpt[v].end()) {
                defined = false;  // unobserved parent configuration
                break;
            }
            p *= it->second[row[v]] / cpt_total[v][key];
        }
        if (!defined) {
            if (p > 0) throw fairkit::PositivityError("oracle: unobserved stratum reached");
            continue;
        }
        total += p;
        if (row[o_col] == o_val) matched += p;
    }
    if (total <= 0) throw fairkit::PositivityError("oracle: empty interventional distribution");
    return matched / total;
}

// ---------------------------------------------------------------------------
// minimal-repair oracle: enumerate exactly independent tables by rejection
// over all (row margins, column margins) pairs, then pick the cheapest.
// ---------------------------------------------------------------------------

namespace repair_detail {

inline void compositions(std::int64_t total, int parts, std::vector<std::int64_t>& prefix,
                         std::vector<std::vector<std::int64_t>>& out) {
    if (parts == 1) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::int64_t v = 0; v <= total; ++v) {
        prefix.push_back(v);
        compositions(total - v, parts - 1, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace repair_detail

/// All exactly independent tables (r x c, entries >= 0) with the given total,
/// deduplicated. total = 0 yields the all-zero table.
inline std::set<std::vector<std::int64_t>> oracle_independent_tables(int rows, int cols,
                                                                     std::int64_t total) {
    std::set<std::vector<std::int64_t>> out;
    if (total == 0) {
        out.insert(std::vector<std::int64_t>(rows * cols, 0));
        return out;
    }
    std::vector<std::vector<std::int64_t>> row_margins, col_margins;
    std::vector<std::int64_t> prefix;
    repair_detail::compositions(total, rows, prefix, row_margins);
    repair_detail::compositions(total, cols, prefix, col_margins);
    for (const auto& r : row_margins) {
        for (const auto& c : col_margins) {
            std::vector<std::int64_t> table(rows * cols, 0);
            bool ok = true;
            for (int i = 0; i < rows && ok; ++i) {
                for (int j = 0; j < cols && ok; ++j) {
                    const std::int64_t product = r[i] * c[j];
                    if (product % total != 0) {
                        ok = false;
                    } else {
                        table[i * cols + j] = product / total;
                    }
                }
            }
            if (ok) out.insert(std::move(table));
        }
    }
    return out;
}

/// Minimal L1 repair cost to exact independence for one stratum, allowing the
/// total to change; the all-zero table is excluded when forbid_empty.
inline std::int64_t oracle_min_repair_cost(const std::vector<std::int64_t>& table, int rows,
                                           int cols, bool forbid_empty) {
    const std::int64_t total = std::accumulate(table.begin(), table.end(), std::int64_t{0});
    std::int64_t best = -1;
    // any independent table at total t costs at least |t - total|; scanning
    // t in 0 .. 2*total + 2 is certainly enough because the zero or
    // one-cell tables bound the optimum by total (+1).
    for (std::int64_t t = 0; t <= 2 * total + 2; ++t) {
        if (best >= 0 && std::llabs(t - total) > best) continue;
        if (forbid_empty && t == 0) continue;
        for (const auto& candidate : oracle_independent_tables(rows, cols, t)) {
            std::int64_t cost = 0;
            for (std::size_t i = 0; i < candidate.size(); ++i) {
                cost += std::llabs(candidate[i] - table[i]);
            }
            if (best < 0 || cost < best) best = cost;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// random model generators (deterministic given the caller's engine state)
// ---------------------------------------------------------------------------

/// Random DAG over n binary variables V0..V{n-1}: edges only from lower to
/// higher index (guaranteed acyclic), each present with probability ~40%.
inline CausalDag random_dag(std::mt19937_64& rng, int n) {
    CausalDag dag;
    for (int i = 0; i < n; ++i) {
        dag.variables.push_back({"V" + std::to_string(i), {"0", "1"}});
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (rng() % 10 < 4) {
                dag.edges.push_back({dag.variables[a].name, dag.variables[b].name});
            }
        }
    }
    return dag;
}

/// A strictly positive joint distribution that factorizes over the DAG:
/// random CPTs with masses drawn from {1..16}, joint = product of factors.
inline Distribution random_factorized(std::mt19937_64& rng, const CausalDag& dag) {
    const int n = static_cast<int>(dag.variables.size());
    const auto indexed = fairkit::detail::index_dag(dag);
    std::vector<std::vector<int>> parents = indexed.parents;
    for (auto& p : parents) std::sort(p.begin(), p.end());

    // cpt[v][parent_code] = Pr(v=1 | parents)
    std::vector<std::vector<double>> cpt(n);
    for (int v = 0; v < n; ++v) {
        const std::size_t configs = std::size_t{1} << parents[v].size();
        for (std::size_t k = 0; k < configs; ++k) {
            const double one = static_cast<double>(1 + rng() % 16);
            const double zero = static_cast<double>(1 + rng() % 16);
            cpt[v].push_back(one / (one + zero));
        }
    }

    Distribution dist;
    dist.variables = dag.variables;
    const std::size_t combos = std::size_t{1} << n;
    for (std::size_t code = 0; code < combos; ++code) {
        Row row(n);
        for (int v = 0; v < n; ++v) row[v] = static_cast<std::uint8_t>((code >> v) & 1);
        double p = 1.0;
        for (int v = 0; v < n; ++v) {
            std::size_t parent_code = 0;
            for (std::size_t k = 0; k < parents[v].size(); ++k) {
                parent_code |= static_cast<std::size_t>(row[parents[v][k]]) << k;
            }
            const double p_one = cpt[v][parent_code];
            p *= row[v] ? p_one : 1.0 - p_one;
        }
        dist.mass[row] = p;
    }
    return dist;
}

// ---------------------------------------------------------------------------
// misc
// ---------------------------------------------------------------------------

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

inline std::string fixture_path(const std::string& name) {
    return env_or("FAIRKIT_FIXTURES", "fixtures") + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

/// Runs the built CLI binary (FAIRKIT_BIN) with the given arguments.
inline CliResult run_cli(const std::string& args) {
    const std::string binary = env_or("FAIRKIT_BIN", "./build/fairkit");
    const std::string workdir = env_or("FAIRKIT_WORKDIR", ".");
    const std::string capture = workdir + "/cli_capture.tmp";
    const std::string command = binary + " " + args + " > " + capture + " 2>&1";
    const int raw = std::system(command.c_str());
    CliResult result;
    result.exit_code = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    result.output = read_file(capture);
    return result;
}

}  // namespace testutil
