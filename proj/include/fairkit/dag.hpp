#ifndef FAIRKIT_DAG_HPP
#define FAIRKIT_DAG_HPP

#include <algorithm>
#include <cstddef>
#include <deque>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// A causal DAG over categorical variables. This is a plain data holder;
/// structural invariants are checked by validate(). Operations that require
/// a valid DAG (topological_order, d_separated, ...) throw on violations.
struct CausalDag {
    VariableList variables;
    /// Directed edges as (parent name, child name), in declaration order.
    std::vector<std::pair<std::string, std::string>> edges;

    int index_of(const std::string& name) const { return variable_index(variables, name); }

    bool has_variable(const std::string& name) const { return index_of(name) >= 0; }

    bool has_edge(const std::string& parent, const std::string& child) const {
        return std::find(edges.begin(), edges.end(), std::make_pair(parent, child)) != edges.end();
    }
};

struct DagViolation {
    enum class Kind {
        DuplicateVariable,
        EmptyDomain,
        DuplicateLabel,
        DanglingEdge,
        SelfLoop,
        DuplicateEdge,
        Cycle,
    };
    Kind kind;
    std::string message;
    /// Variables involved; for a cycle this is the witness node sequence.
    std::vector<std::string> involved;
};

struct DagValidationReport {
    std::vector<DagViolation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

/// Adjacency in index space. Edges whose endpoints are undeclared are dropped
/// (they are reported separately as dangling).
struct IndexedDag {
    std::vector<std::vector<int>> children;
    std::vector<std::vector<int>> parents;
};

inline IndexedDag index_dag(const CausalDag& dag) {
    IndexedDag g;
    g.children.resize(dag.variables.size());
    g.parents.resize(dag.variables.size());
    for (const auto& [p, c] : dag.edges) {
        const int pi = dag.index_of(p);
        const int ci = dag.index_of(c);
        if (pi < 0 || ci < 0 || pi == ci) continue;
        if (std::find(g.children[pi].begin(), g.children[pi].end(), ci) == g.children[pi].end()) {
            g.children[pi].push_back(ci);
            g.parents[ci].push_back(pi);
        }
    }
    return g;
}

/// Finds one directed cycle, as a node index sequence, or empty if acyclic.
inline std::vector<int> find_cycle(const IndexedDag& g) {
    const int n = static_cast<int>(g.children.size());
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> stack;
    std::vector<int> cycle;

    auto dfs = [&](auto&& self, int v) -> bool {
        state[v] = 1;
        stack.push_back(v);
        for (int c : g.children[v]) {
            if (state[c] == 1) {
                auto it = std::find(stack.begin(), stack.end(), c);
                cycle.assign(it, stack.end());
                return true;
            }
            if (state[c] == 0 && self(self, c)) return true;
        }
        state[v] = 2;
        stack.pop_back();
        return false;
    };

    for (int v = 0; v < n; ++v) {
        if (state[v] == 0 && dfs(dfs, v)) return cycle;
    }
    return {};
}

}  // namespace detail

/// Structural validation. Violations are data, not faults: a report listing
/// every problem found (duplicate names, empty domains, dangling or duplicate
/// edges, self-loops, and a cycle witness if the edge relation is cyclic).
inline DagValidationReport validate(const CausalDag& dag) {
    DagValidationReport report;
    auto add = [&](DagViolation::Kind kind, std::string msg, std::vector<std::string> involved) {
        report.violations.push_back({kind, std::move(msg), std::move(involved)});
    };

    for (std::size_t i = 0; i < dag.variables.size(); ++i) {
        const Variable& v = dag.variables[i];
        for (std::size_t j = i + 1; j < dag.variables.size(); ++j) {
            if (dag.variables[j].name == v.name) {
                add(DagViolation::Kind::DuplicateVariable,
                    "variable '" + v.name + "' declared more than once", {v.name});
            }
        }
        if (v.labels.empty()) {
            add(DagViolation::Kind::EmptyDomain, "variable '" + v.name + "' has an empty domain",
                {v.name});
        }
        for (std::size_t a = 0; a < v.labels.size(); ++a) {
            for (std::size_t b = a + 1; b < v.labels.size(); ++b) {
                if (v.labels[a] == v.labels[b]) {
                    add(DagViolation::Kind::DuplicateLabel,
                        "variable '" + v.name + "' repeats label '" + v.labels[a] + "'", {v.name});
                }
            }
        }
    }

    for (std::size_t i = 0; i < dag.edges.size(); ++i) {
        const auto& [p, c] = dag.edges[i];
        if (!dag.has_variable(p)) {
            add(DagViolation::Kind::DanglingEdge, "edge references undeclared variable '" + p + "'",
                {p});
        }
        if (!dag.has_variable(c)) {
            add(DagViolation::Kind::DanglingEdge, "edge references undeclared variable '" + c + "'",
                {c});
        }
        if (p == c) {
            add(DagViolation::Kind::SelfLoop, "self-loop on '" + p + "'", {p});
        }
        for (std::size_t j = i + 1; j < dag.edges.size(); ++j) {
            if (dag.edges[j] == dag.edges[i]) {
                add(DagViolation::Kind::DuplicateEdge, "duplicate edge " + p + " -> " + c, {p, c});
            }
        }
    }

    const auto cycle = detail::find_cycle(detail::index_dag(dag));
    if (!cycle.empty()) {
        std::vector<std::string> names;
        std::string msg = "cycle:";
        for (int v : cycle) {
            names.push_back(dag.variables[v].name);
            msg += " " + dag.variables[v].name;
        }
        add(DagViolation::Kind::Cycle, msg, names);
    }
    return report;
}

/// Kahn elimination with declaration-order tie-breaking, so the result is
/// deterministic. Throws on cycles, with the witness in the message.
inline std::vector<std::string> topological_order(const CausalDag& dag) {
    const auto g = detail::index_dag(dag);
    const int n = static_cast<int>(dag.variables.size());
    std::vector<int> indegree(n, 0);
    for (int v = 0; v < n; ++v) indegree[v] = static_cast<int>(g.parents[v].size());

    std::vector<std::string> order;
    std::vector<bool> emitted(n, false);
    for (int step = 0; step < n; ++step) {
        int pick = -1;
        for (int v = 0; v < n; ++v) {
            if (!emitted[v] && indegree[v] == 0) {
                pick = v;
                break;
            }
        }
        if (pick < 0) {
            const auto cycle = detail::find_cycle(g);
            std::string msg = "graph has a cycle:";
            for (int v : cycle) msg += " " + dag.variables[v].name;
            throw Error(msg);
        }
        emitted[pick] = true;
        order.push_back(dag.variables[pick].name);
        for (int c : g.children[pick]) --indegree[c];
    }
    return order;
}

/// Exact parent set of `name`. Throws if the variable is undeclared.
inline NameSet parents(const CausalDag& dag, const std::string& name) {
    const int idx = dag.index_of(name);
    if (idx < 0) throw Error("unknown variable '" + name + "'");
    NameSet result;
    const auto g = detail::index_dag(dag);
    for (int p : g.parents[idx]) result.insert(dag.variables[p].name);
    return result;
}

namespace detail {

inline std::vector<int> to_indices(const CausalDag& dag, const NameSet& names,
                                   const char* role) {
    std::vector<int> out;
    for (const auto& name : names) {
        const int idx = dag.index_of(name);
        if (idx < 0) throw Error(std::string(role) + " set references unknown variable '" + name + "'");
        out.push_back(idx);
    }
    return out;
}

/// All ancestors of `seeds` (inclusive), as a membership mask.
inline std::vector<bool> ancestral_closure(const IndexedDag& g, const std::vector<int>& seeds) {
    std::vector<bool> in(g.parents.size(), false);
    std::deque<int> queue(seeds.begin(), seeds.end());
    for (int s : seeds) in[s] = true;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int p : g.parents[v]) {
            if (!in[p]) {
                in[p] = true;
                queue.push_back(p);
            }
        }
    }
    return in;
}

}  // namespace detail

/// Descendants of `name`, not including the node itself.
inline NameSet descendants(const CausalDag& dag, const std::string& name) {
    const int idx = dag.index_of(name);
    if (idx < 0) throw Error("unknown variable '" + name + "'");
    const auto g = detail::index_dag(dag);
    std::vector<bool> seen(dag.variables.size(), false);
    std::deque<int> queue{idx};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int c : g.children[v]) {
            if (!seen[c]) {
                seen[c] = true;
                queue.push_back(c);
            }
        }
    }
    NameSet result;
    for (std::size_t v = 0; v < seen.size(); ++v) {
        if (seen[v]) result.insert(dag.variables[v].name);
    }
    return result;
}

/// d-separation via the ancestral-subgraph + moralization criterion:
/// restrict to ancestors of X∪Y∪Z, marry co-parents, drop directions, delete
/// Z, and test undirected reachability from X to Y. X and Y must be nonempty
/// and the three sets pairwise disjoint.
inline bool d_separated(const CausalDag& dag, const NameSet& x, const NameSet& y,
                        const NameSet& z) {
    if (x.empty() || y.empty()) throw Error("d-separation query needs nonempty X and Y");
    if (!sets_disjoint(x, y) || !sets_disjoint(x, z) || !sets_disjoint(y, z)) {
        throw Error("d-separation query sets must be pairwise disjoint");
    }
    const auto xi = detail::to_indices(dag, x, "X");
    const auto yi = detail::to_indices(dag, y, "Y");
    const auto zi = detail::to_indices(dag, z, "Z");

    const auto g = detail::index_dag(dag);
    std::vector<int> seeds;
    seeds.insert(seeds.end(), xi.begin(), xi.end());
    seeds.insert(seeds.end(), yi.begin(), yi.end());
    seeds.insert(seeds.end(), zi.begin(), zi.end());
    const auto keep = detail::ancestral_closure(g, seeds);

    const int n = static_cast<int>(dag.variables.size());
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    auto connect = [&](int a, int b) {
        if (a != b) adj[a][b] = adj[b][a] = true;
    };
    for (int v = 0; v < n; ++v) {
        if (!keep[v]) continue;
        for (int c : g.children[v]) {
            if (keep[c]) connect(v, c);
        }
        // moralization: marry parents sharing the child v
        for (std::size_t a = 0; a < g.parents[v].size(); ++a) {
            for (std::size_t b = a + 1; b < g.parents[v].size(); ++b) {
                const int pa = g.parents[v][a];
                const int pb = g.parents[v][b];
                if (keep[pa] && keep[pb]) connect(pa, pb);
            }
        }
    }

    std::vector<bool> blocked(n, false);
    for (int v : zi) blocked[v] = true;

    std::vector<bool> reach(n, false);
    std::deque<int> queue;
    for (int v : xi) {
        if (!blocked[v]) {
            reach[v] = true;
            queue.push_back(v);
        }
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w = 0; w < n; ++w) {
            if (adj[v][w] && keep[w] && !blocked[w] && !reach[w]) {
                reach[w] = true;
                queue.push_back(w);
            }
        }
    }
    return std::none_of(yi.begin(), yi.end(), [&](int v) { return reach[v]; });
}

/// True iff every directed path from `source` to `sink` passes through a node
/// of `through`. When false, `witness` (if non-null) receives one avoiding
/// path as a node-name sequence.
inline bool directed_paths_covered(const CausalDag& dag, const std::string& source,
                                   const std::string& sink, const NameSet& through,
                                   std::vector<std::string>* witness = nullptr) {
    const int src = dag.index_of(source);
    const int dst = dag.index_of(sink);
    if (src < 0 || dst < 0) throw Error("unknown variable in path query");
    const auto g = detail::index_dag(dag);
    std::vector<bool> avoid(dag.variables.size(), false);
    for (int v : detail::to_indices(dag, through, "through")) avoid[v] = true;

    // BFS over nodes not in `through`; sink reachable => uncovered path exists.
    std::vector<int> prev(dag.variables.size(), -2);
    std::deque<int> queue;
    if (!avoid[src]) {
        prev[src] = -1;
        queue.push_back(src);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (v == dst) {
            if (witness) {
                std::vector<int> path;
                for (int cur = dst; cur != -1; cur = prev[cur]) path.push_back(cur);
                std::reverse(path.begin(), path.end());
                witness->clear();
                for (int node : path) witness->push_back(dag.variables[node].name);
            }
            return false;
        }
        for (int c : g.children[v]) {
            if (!avoid[c] && prev[c] == -2) {
                prev[c] = v;
                queue.push_back(c);
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// DAG spec file format: one declaration per line.
//   var NAME: label1,label2,...
//   edge A -> B
//   # comment
// Declaration order is significant. Parse errors report line numbers.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) parts.push_back(trim(cur));
    if (!s.empty() && s.back() == ',') parts.push_back("");
    return parts;
}

}  // namespace detail

inline CausalDag parse_dag(std::istream& in) {
    CausalDag dag;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.rfind("var ", 0) == 0) {
            const auto colon = line.find(':');
            if (colon == std::string::npos) {
                throw ParseError("expected 'var NAME: label,...'", lineno);
            }
            Variable v;
            v.name = detail::trim(line.substr(4, colon - 4));
            if (v.name.empty()) throw ParseError("empty variable name", lineno);
            for (const auto& label : detail::split_csv_list(line.substr(colon + 1))) {
                if (label.empty()) throw ParseError("empty label in domain of '" + v.name + "'", lineno);
                v.labels.push_back(label);
            }
            if (v.labels.empty()) throw ParseError("variable '" + v.name + "' declares no labels", lineno);
            dag.variables.push_back(std::move(v));
        } else if (line.rfind("edge ", 0) == 0) {
            const auto arrow = line.find("->");
            if (arrow == std::string::npos) {
                throw ParseError("expected 'edge A -> B'", lineno);
            }
            const std::string parent = detail::trim(line.substr(5, arrow - 5));
            const std::string child = detail::trim(line.substr(arrow + 2));
            if (parent.empty() || child.empty()) throw ParseError("expected 'edge A -> B'", lineno);
            dag.edges.emplace_back(parent, child);
        } else {
            throw ParseError("unrecognized declaration '" + line + "'", lineno);
        }
    }
    return dag;
}

inline CausalDag load_dag(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open DAG file '" + path + "'");
    return parse_dag(in);
}

inline std::string format_dag(const CausalDag& dag) {
    std::string out;
    for (const auto& v : dag.variables) {
        out += "var " + v.name + ": ";
        for (std::size_t i = 0; i < v.labels.size(); ++i) {
            if (i) out += ",";
            out += v.labels[i];
        }
        out += "\n";
    }
    for (const auto& [p, c] : dag.edges) out += "edge " + p + " -> " + c + "\n";
    return out;
}

}  // namespace fairkit

#endif
