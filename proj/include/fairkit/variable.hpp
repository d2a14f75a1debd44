#ifndef FAIRKIT_VARIABLE_HPP
#define FAIRKIT_VARIABLE_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace fairkit {

/// A categorical variable: a name plus a finite, ordered label domain.
/// Declaration order of both variables and labels is significant (it drives
/// deterministic tie-breaking and byte-stable reports).
struct Variable {
    std::string name;
    std::vector<std::string> labels;

    bool operator==(const Variable& other) const = default;
};

using VariableList = std::vector<Variable>;
using NameSet = std::set<std::string>;

/// Index of `name` in `vars`, or -1 if absent.
inline int variable_index(const VariableList& vars, const std::string& name) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

/// Index of `label` in the variable's domain, or -1 if absent.
inline int label_index(const Variable& var, const std::string& label) {
    for (std::size_t i = 0; i < var.labels.size(); ++i) {
        if (var.labels[i] == label) return static_cast<int>(i);
    }
    return -1;
}

inline bool sets_disjoint(const NameSet& a, const NameSet& b) {
    return std::none_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) > 0; });
}

}  // namespace fairkit

#endif
