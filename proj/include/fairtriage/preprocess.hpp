#ifndef FAIRTRIAGE_PREPROCESS_HPP
#define FAIRTRIAGE_PREPROCESS_HPP

// ------------------------------------------------------------
// cleaning and encoding: sparse-record drop, MISSING -> 0,
// NA indicator columns, one-hot, sensitive-group binning
// ------------------------------------------------------------

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "csv.hpp"
#include "synth.hpp"

namespace fairtriage {

struct DesignMatrix {
    std::vector<std::string> column_names;
    Matrix X;
    std::vector<int> y;  // 0/1 for the chosen target level

    std::size_t n() const noexcept { return X.rows(); }
    std::size_t d() const noexcept { return X.cols(); }

    std::optional<std::size_t> column_index(std::string_view name) const {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            if (column_names[j] == name) return j;
        return std::nullopt;
    }

    DesignMatrix select_rows(std::span<const std::size_t> idx) const {
        return {column_names, X.select_rows(idx), gather<int>(y, idx)};
    }
};

// One sensitive attribute: ordered category labels and a code per record.
struct Grouping {
    std::string name;
    std::vector<std::string> categories;
    std::vector<int> codes;

    const std::string& label(std::size_t record) const { return categories[static_cast<std::size_t>(codes[record])]; }

    Grouping select_rows(std::span<const std::size_t> idx) const { return {name, categories, gather<int>(codes, idx)}; }
};

struct GroupAssignments {
    std::vector<Grouping> groupings;

    const Grouping* find(std::string_view name) const {
        for (const auto& g : groupings)
            if (g.name == name) return &g;
        return nullptr;
    }

    const Grouping& at(std::string_view name) const {
        if (auto* g = find(name)) return *g;
        throw ValidationError("unknown sensitive feature '" + std::string(name) + "'");
    }

    GroupAssignments select_rows(std::span<const std::size_t> idx) const {
        GroupAssignments out;
        for (const auto& g : groupings) out.groupings.push_back(g.select_rows(idx));
        return out;
    }
};

// Derives a sensitive attribute from one raw feature.
//   Levels: categorical level names (lower-cased) or "0"/"1" for binary.
//   Bins:   ordered cut points on the encoded value; a value equal to a cut
//           point goes to the upper bin iff `upper_on_tie` for that cut.
// Records whose source cell is MISSING or NA are binned on the encoded value 0
// (Bins) or labelled "missing" (Levels).
struct GroupingRule {
    enum class Type { Levels, Bins };
    std::string name;
    std::string source;
    Type type = Type::Levels;
    std::vector<double> cuts;
    std::vector<bool> upper_on_tie;
    std::vector<std::string> labels;  // cuts.size() + 1 labels for Bins
};

inline std::vector<GroupingRule> default_grouping_rules() {
    using T = GroupingRule::Type;
    return {
        {"GENDER", "GENDER", T::Levels, {}, {}, {}},
        {"IDACI_CLASS", "IDACI", T::Bins, {0.2, 0.4, 0.6, 0.8}, {true, true, true, true}, {"1", "2", "3", "4", "5"}},
        {"AGE_CLASS", "AGE AT LOCALITY DECISION", T::Bins, {7.5, 12.5}, {true, false}, {"A", "B", "C"}},
        {"ATTENDANCE_BIN", "ATTENDANCE YEAR 4", T::Bins, {0.5}, {false}, {"<=0.5", ">0.5"}},
    };
}

inline std::size_t bin_of(double v, const std::vector<double>& cuts, const std::vector<bool>& upper_on_tie) {
    std::size_t b = 0;
    while (b < cuts.size() && (v > cuts[b] || (v == cuts[b] && upper_on_tie[b]))) ++b;
    return b;
}

inline std::size_t missing_cell_count(const RawDataset& raw, std::size_t record) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < raw.cols(); ++j) m += raw.state(record, j) == CellState::Missing;
    return m;
}

// Removes records whose MISSING fraction (NA cells count in the denominator
// only) strictly exceeds `threshold`. Survivor order is preserved.
inline RawDataset drop_sparse_records(const RawDataset& raw, double threshold = 0.30) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("drop threshold must lie in (0, 1]");
    const std::size_t p = raw.cols();
    RawDataset out;
    out.schema = raw.schema;
    for (std::size_t i = 0; i < raw.n; ++i) {
        const double frac = p ? static_cast<double>(missing_cell_count(raw, i)) / static_cast<double>(p) : 0.0;
        if (frac > threshold) continue;
        out.values.insert(out.values.end(), raw.values.begin() + i * p, raw.values.begin() + (i + 1) * p);
        out.states.insert(out.states.end(), raw.states.begin() + i * p, raw.states.begin() + (i + 1) * p);
        out.labels.push_back(raw.labels[i]);
        out.signal_labels.push_back(raw.signal_labels.empty() ? raw.labels[i] : raw.signal_labels[i]);
        ++out.n;
    }
    if (out.n == 0) throw DataError("drop_sparse_records: every record exceeds the missing threshold; dataset is empty");
    return out;
}

// Encoded column names for a schema, in order. Depends on the schema only.
inline std::vector<std::string> encoded_column_names(const FeatureSchema& schema) {
    std::vector<std::string> names;
    for (const auto& f : schema.features) {
        if (f.kind == FeatureKind::Categorical) {
            for (const auto& level : f.levels) names.push_back(f.name + " " + level);
        } else {
            names.push_back(f.name);
        }
        if (f.na_rate > 0.0) names.push_back(f.name + " NA");
    }
    return names;
}

struct EncodedData {
    DesignMatrix design;
    GroupAssignments groups;
};

namespace detail {

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline Grouping apply_rule(const RawDataset& raw, const GroupingRule& rule, std::size_t source) {
    const auto& f = raw.schema.features[source];
    Grouping g;
    g.name = rule.name;
    g.codes.resize(raw.n);
    if (rule.type == GroupingRule::Type::Bins) {
        if (f.kind == FeatureKind::Categorical)
            throw ValidationError("grouping '" + rule.name + "': cannot bin categorical feature '" + f.name + "'");
        if (rule.labels.size() != rule.cuts.size() + 1 || rule.upper_on_tie.size() != rule.cuts.size())
            throw ValidationError("grouping '" + rule.name + "': needs one label per bin and one tie flag per cut");
        g.categories = rule.labels;
        for (std::size_t i = 0; i < raw.n; ++i) {
            const double v = raw.state(i, source) == CellState::Value ? raw.value(i, source) : 0.0;
            g.codes[i] = static_cast<int>(bin_of(v, rule.cuts, rule.upper_on_tie));
        }
        return g;
    }
    if (f.kind == FeatureKind::Categorical) {
        for (const auto& l : f.levels) g.categories.push_back(lower(l));
    } else if (f.kind == FeatureKind::Binary) {
        g.categories = {"0", "1"};
    } else {
        throw ValidationError("grouping '" + rule.name + "': feature '" + f.name + "' needs bins");
    }
    int missing_code = -1;
    for (std::size_t i = 0; i < raw.n; ++i) {
        if (raw.state(i, source) == CellState::Value) {
            g.codes[i] = static_cast<int>(raw.value(i, source));
        } else {
            if (missing_code < 0) {
                missing_code = static_cast<int>(g.categories.size());
                g.categories.push_back("missing");
            }
            g.codes[i] = missing_code;
        }
    }
    return g;
}

}  // namespace detail

// Level grouping for every binary/categorical feature named in `features`.
inline std::vector<GroupingRule> level_grouping_rules(const std::vector<std::string>& features) {
    std::vector<GroupingRule> rules;
    for (const auto& f : features) rules.push_back({f, f, GroupingRule::Type::Levels, {}, {}, {}});
    return rules;
}

// MISSING -> 0; NA -> value 0 plus `<name> NA` = 1; categorical one-hot;
// y = 1 iff label == target_level. Grouping rules whose source feature is not
// in the schema are skipped.
inline EncodedData encode(const RawDataset& raw, std::string_view target_level,
                          const std::vector<GroupingRule>& rules = default_grouping_rules()) {
    if (raw.n == 0) throw DataError("encode: empty dataset");
    auto target = raw.schema.target_index(target_level);
    if (!target) throw ValidationError("unknown target level '" + std::string(target_level) + "'");

    const auto& schema = raw.schema;
    EncodedData out;
    auto& dm = out.design;
    dm.column_names = encoded_column_names(schema);
    dm.X = Matrix(raw.n, dm.column_names.size());
    dm.y.resize(raw.n);

    for (std::size_t i = 0; i < raw.n; ++i) {
        auto row = dm.X.row(i);
        std::size_t c = 0;
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto& f = schema.features[j];
            const CellState s = raw.state(i, j);
            if (s == CellState::NA && f.na_rate <= 0.0)
                throw DataError("encode: record " + std::to_string(i) + " has NA in feature '" + f.name +
                                "', which the schema declares without NA");
            if (f.kind == FeatureKind::Categorical) {
                if (s == CellState::Value) row[c + static_cast<std::size_t>(raw.value(i, j))] = 1.0;
                c += f.levels.size();
            } else {
                row[c++] = s == CellState::Value ? raw.value(i, j) : 0.0;
            }
            if (f.na_rate > 0.0) row[c++] = s == CellState::NA ? 1.0 : 0.0;
        }
        dm.y[i] = raw.labels[i] == static_cast<int>(*target) ? 1 : 0;
    }

    for (const auto& rule : rules) {
        auto source = schema.index_of(rule.source);
        if (!source) continue;
        out.groups.groupings.push_back(detail::apply_rule(raw, rule, *source));
    }
    return out;
}

inline csv::Table design_table(const DesignMatrix& dm) {
    csv::Row header = dm.column_names;
    header.push_back("y");
    csv::Table table(header);
    csv::Row row(header.size());
    for (std::size_t i = 0; i < dm.n(); ++i) {
        for (std::size_t j = 0; j < dm.d(); ++j) row[j] = format_double(dm.X(i, j));
        row.back() = std::to_string(dm.y[i]);
        table.add(row);
    }
    return table;
}

inline csv::Table groups_table(const GroupAssignments& groups, std::size_t n) {
    csv::Row header;
    for (const auto& g : groups.groupings) header.push_back(g.name);
    csv::Table table(header);
    csv::Row row(header.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < groups.groupings.size(); ++k) row[k] = groups.groupings[k].label(i);
        table.add(row);
    }
    return table;
}

// Reads a design CSV as written by design_table (last column "y").
inline DesignMatrix read_design_csv(const std::filesystem::path& path) {
    const auto rows = csv::read(path);
    if (rows.empty() || rows[0].empty() || rows[0].back() != "y")
        throw ParseError(path.string() + ": expected a header ending in column 'y'");
    DesignMatrix dm;
    dm.column_names.assign(rows[0].begin(), rows[0].end() - 1);
    const std::size_t d = dm.column_names.size();
    dm.X = Matrix(rows.size() - 1, d);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != d + 1)
            throw ParseError(path.string() + " record " + std::to_string(i) + ": wrong field count");
        const std::string ctx = path.string() + " record " + std::to_string(i);
        for (std::size_t j = 0; j < d; ++j) dm.X(i - 1, j) = parse_double(rows[i][j], ctx);
        const auto& label = rows[i][d];
        if (label != "0" && label != "1") throw ParseError(ctx + ": label must be 0 or 1");
        dm.y.push_back(label == "1" ? 1 : 0);
    }
    return dm;
}

// Reads a groups CSV (one column per sensitive feature). Categories are
// sorted lexicographically.
inline GroupAssignments read_groups_csv(const std::filesystem::path& path) {
    const auto rows = csv::read(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty file");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].size() != rows[0].size())
            throw ParseError(path.string() + " record " + std::to_string(i) + ": wrong field count");
    GroupAssignments out;
    for (std::size_t k = 0; k < rows[0].size(); ++k) {
        Grouping g;
        g.name = rows[0][k];
        for (std::size_t i = 1; i < rows.size(); ++i) g.categories.push_back(rows[i][k]);
        std::sort(g.categories.begin(), g.categories.end());
        g.categories.erase(std::unique(g.categories.begin(), g.categories.end()), g.categories.end());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            auto it = std::lower_bound(g.categories.begin(), g.categories.end(), rows[i][k]);
            g.codes.push_back(static_cast<int>(it - g.categories.begin()));
        }
        out.groupings.push_back(std::move(g));
    }
    return out;
}

}  // namespace fairtriage

#endif
