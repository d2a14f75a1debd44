#ifndef FAIRKIT_DATASET_HPP
#define FAIRKIT_DATASET_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "fairkit/dag.hpp"
#include "fairkit/error.hpp"
#include "fairkit/variable.hpp"

namespace fairkit {

/// A row's values as label indices into the schema, column by column.
using Row = std::vector<std::uint8_t>;

/// Weighted categorical dataset: a schema plus integer multiplicities per
/// distinct row. Using a std::map keyed on the label-index tuple keeps every
/// traversal deterministic.
struct Dataset {
    VariableList schema;
    std::map<Row, std::int64_t> counts;

    std::int64_t total_weight() const {
        std::int64_t n = 0;
        for (const auto& [row, w] : counts) n += w;
        return n;
    }

    int column(const std::string& name) const { return variable_index(schema, name); }

    int column_or_throw(const std::string& name) const {
        const int idx = column(name);
        if (idx < 0) throw Error("dataset has no column '" + name + "'");
        return idx;
    }

    const std::string& label_of(const Row& row, int col) const {
        return schema[col].labels[row[col]];
    }

    void add(const Row& row, std::int64_t weight) {
        if (weight < 0) throw Error("negative row weight");
        if (weight == 0) return;
        counts[row] += weight;
    }
};

struct CsvOptions {
    /// Column carrying integer multiplicities; absent from the data columns.
    /// When the header lacks it every row counts once.
    std::string weight_column = "weight";
    /// When set, pins column domains (and their label order) up front; values
    /// outside a pinned domain are load errors. Unpinned columns get their
    /// domain inferred from the data, labels sorted lexicographically.
    std::optional<VariableList> schema;
};

namespace detail {

/// One CSV record, honoring double-quote escaping. Returns false at EOF.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else {
            field += ch;
        }
    }
    if (!any) return false;
    fields.push_back(field);
    return true;
}

inline std::int64_t parse_weight(const std::string& text, std::size_t lineno) {
    if (text.empty()) throw ParseError("empty weight", lineno);
    std::size_t pos = 0;
    std::int64_t value = 0;
    try {
        value = std::stoll(text, &pos);
    } catch (const std::exception&) {
        throw ParseError("weight '" + text + "' is not an integer", lineno);
    }
    if (pos != text.size()) throw ParseError("weight '" + text + "' is not an integer", lineno);
    if (value < 0) throw ParseError("weight '" + text + "' is negative", lineno);
    return value;
}

}  // namespace detail

/// Loads a weighted categorical dataset from CSV. First record is the header;
/// a column named per CsvOptions::weight_column (if present) carries integer
/// multiplicities and is excluded from the schema.
inline Dataset load_csv(std::istream& in, const CsvOptions& options = {}) {
    std::vector<std::string> header;
    if (!detail::read_csv_record(in, header) || header.empty()) {
        throw ParseError("missing CSV header", 1);
    }
    int weight_col = -1;
    std::vector<std::string> data_columns;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = detail::trim(header[i]);
        if (name.empty()) throw ParseError("empty column name in header", 1);
        if (name == options.weight_column) {
            if (weight_col >= 0) throw ParseError("duplicate weight column", 1);
            weight_col = static_cast<int>(i);
            continue;
        }
        if (std::find(data_columns.begin(), data_columns.end(), name) != data_columns.end()) {
            throw ParseError("duplicate column '" + name + "' in header", 1);
        }
        data_columns.push_back(name);
    }
    if (data_columns.empty()) throw ParseError("CSV has no data columns", 1);

    // Map each data column to a pinned variable, if a schema was supplied.
    std::vector<const Variable*> pinned(data_columns.size(), nullptr);
    if (options.schema) {
        for (std::size_t i = 0; i < data_columns.size(); ++i) {
            const int idx = variable_index(*options.schema, data_columns[i]);
            if (idx >= 0) pinned[i] = &(*options.schema)[idx];
        }
    }

    // First pass happens in memory: collect raw label rows + weights, then
    // build domains, then encode. Keeps the reader single-pass over the stream.
    struct RawRow {
        std::vector<std::string> labels;
        std::int64_t weight;
        std::size_t lineno;
    };
    std::vector<RawRow> raw;
    std::vector<std::set<std::string>> seen(data_columns.size());

    std::vector<std::string> fields;
    std::size_t lineno = 1;
    while (detail::read_csv_record(in, fields)) {
        ++lineno;
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        RawRow row;
        row.lineno = lineno;
        row.weight = 1;
        for (std::size_t i = 0, d = 0; i < fields.size(); ++i) {
            if (static_cast<int>(i) == weight_col) {
                row.weight = detail::parse_weight(detail::trim(fields[i]), lineno);
                continue;
            }
            const std::string value = detail::trim(fields[i]);
            if (value.empty()) throw ParseError("empty value in column '" + data_columns[d] + "'", lineno);
            seen[d].insert(value);
            row.labels.push_back(value);
            ++d;
        }
        raw.push_back(std::move(row));
    }

    Dataset ds;
    for (std::size_t d = 0; d < data_columns.size(); ++d) {
        if (pinned[d]) {
            ds.schema.push_back(*pinned[d]);
        } else {
            Variable v;
            v.name = data_columns[d];
            v.labels.assign(seen[d].begin(), seen[d].end());  // std::set: lexicographic
            ds.schema.push_back(std::move(v));
        }
    }

    for (const auto& row : raw) {
        Row encoded(data_columns.size());
        for (std::size_t d = 0; d < data_columns.size(); ++d) {
            const int li = label_index(ds.schema[d], row.labels[d]);
            if (li < 0) {
                throw ParseError("value '" + row.labels[d] + "' is outside the declared domain of '" +
                                     data_columns[d] + "'",
                                 row.lineno);
            }
            encoded[d] = static_cast<std::uint8_t>(li);
        }
        ds.add(encoded, row.weight);
    }
    if (ds.counts.empty()) throw ParseError("dataset holds no rows with positive weight", 0);
    return ds;
}

inline Dataset load_csv_file(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data file '" + path + "'");
    return load_csv(in, options);
}

namespace detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += "\"";
    return out;
}

}  // namespace detail

/// Writes the dataset back out, one record per distinct row, with an explicit
/// weight column (last). Row order follows the deterministic counts order.
inline void save_csv(const Dataset& ds, std::ostream& out,
                     const std::string& weight_column = "weight") {
    for (std::size_t i = 0; i < ds.schema.size(); ++i) {
        if (i) out << ",";
        out << detail::csv_escape(ds.schema[i].name);
    }
    out << "," << detail::csv_escape(weight_column) << "\n";
    for (const auto& [row, w] : ds.counts) {
        for (std::size_t i = 0; i < ds.schema.size(); ++i) {
            if (i) out << ",";
            out << detail::csv_escape(ds.schema[i].labels[row[i]]);
        }
        out << "," << w << "\n";
    }
}

inline void save_csv_file(const Dataset& ds, const std::string& path,
                          const std::string& weight_column = "weight") {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_csv(ds, out, weight_column);
}

/// Checks dataset columns against DAG variables: both must declare exactly the
/// same names, and any label declared by the DAG must match the dataset's
/// domain for that column exactly (same labels, same order). Call after
/// loading with the DAG's variables pinned as the CSV schema to guarantee this.
inline void reconcile(const Dataset& ds, const CausalDag& dag) {
    for (const auto& v : dag.variables) {
        const int col = ds.column(v.name);
        if (col < 0) throw Error("DAG variable '" + v.name + "' is missing from the dataset");
        if (!(ds.schema[col] == v)) {
            throw Error("domain mismatch for '" + v.name + "' between DAG and dataset");
        }
    }
    for (const auto& v : ds.schema) {
        if (!dag.has_variable(v.name)) {
            throw Error("dataset column '" + v.name + "' is not declared in the DAG");
        }
    }
}

}  // namespace fairkit

#endif
