#ifndef FAIRTRIAGE_SYNTH_HPP
#define FAIRTRIAGE_SYNTH_HPP

// ------------------------------------------------------------
// raw datasets: synthetic generation and CSV exchange
// ------------------------------------------------------------
//
// Dataset CSV: header is the feature names followed by the target name.
// A MISSING cell is an empty field, an NA cell is the literal token NA.
// Binary cells are 0/1, categorical cells hold the level name, target
// cells hold the target level name.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core.hpp"
#include "csv.hpp"
#include "schema.hpp"

namespace fairtriage {

enum class CellState : std::uint8_t { Value = 0, Missing = 1, NA = 2 };

struct RawDataset {
    FeatureSchema schema;
    std::size_t n = 0;
    std::vector<double> values;     // n x p, row-major; categorical cells hold the level index
    std::vector<CellState> states;  // n x p
    std::vector<int> labels;        // target level index per record
    // Level the feature signal was generated from. Equals `labels` except for
    // records relabelled by a GroupBias; what an oracle reading the features sees.
    std::vector<int> signal_labels;

    std::size_t cols() const noexcept { return schema.size(); }
    CellState state(std::size_t i, std::size_t j) const { return states[i * cols() + j]; }
    double value(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

    friend bool operator==(const RawDataset& a, const RawDataset& b) {
        return a.n == b.n && a.values == b.values && a.states == b.states && a.labels == b.labels &&
               a.signal_labels == b.signal_labels;
    }
};

namespace detail {

inline std::size_t draw_index(Rng& rng, const std::vector<double>& weights) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) return k;
    }
    // rounding slack: last level with positive weight
    for (std::size_t k = weights.size(); k-- > 0;)
        if (weights[k] > 0.0) return k;
    return 0;
}

inline double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

// Per-feature missing probability for dense and sparse records, conditional on
// the cell not being NA.
struct MissingProbabilities {
    double dense = 0.0;
    double sparse = 0.0;
};

inline MissingProbabilities missing_probabilities(const FeatureSpec& f, const SparseRecords& sp) {
    if (f.na_rate >= 1.0) return {};
    const double c = std::min(1.0, f.missing_rate / (1.0 - f.na_rate));
    if (sp.rate <= 0.0) return {c, c};
    const double s = std::min(1.0, c * sp.missing_boost);
    const double d = std::max(0.0, (c - sp.rate * s) / (1.0 - sp.rate));
    return {d, s};
}

inline double draw_value(const FeatureSpec& f, double shift, Rng& rng) {
    if (f.uniform) {
        const double u = f.uniform->low + rng.uniform() * (f.uniform->high - f.uniform->low);
        return round_to(u, f.uniform->decimals);
    }
    switch (f.kind) {
        case FeatureKind::Binary: {
            const double p = std::clamp(f.mean + shift, 0.0, 1.0);
            return rng.uniform() < p ? 1.0 : 0.0;
        }
        case FeatureKind::NumericFraction: {
            const double z = f.std > 0.0 ? rng.normal() : 0.0;
            return std::clamp(f.mean + shift + f.std * z, 0.0, 1.0);
        }
        case FeatureKind::NumericCount: {
            const double z = f.std > 0.0 ? rng.normal() : 0.0;
            return std::max(0.0, std::round(f.mean + shift + f.std * z));
        }
        case FeatureKind::Categorical:
            return static_cast<double>(draw_index(rng, f.level_weights));
    }
    return 0.0;
}

}  // namespace detail

// Draws n records. Per record: the label from target_mix, a sparse-record flag,
// then each cell NA with probability na_rate, else MISSING with the
// conditional probability that reproduces missing_rate, else a value from the
// feature's marginal shifted by the signal for the record's (signal) label.
inline RawDataset synthesize(const FeatureSchema& schema, std::size_t n, const SignalSpec& signal, std::uint64_t seed) {
    if (n < 1) throw DataError("synthesize: n must be at least 1");
    schema.validate();
    signal.validate(schema);

    const std::size_t p = schema.size();
    const std::size_t levels = schema.target_levels.size();

    // shift[j * levels + level]
    std::vector<double> shift(p * levels, 0.0);
    for (const auto& e : signal.entries)
        shift[*schema.index_of(e.feature) * levels + *schema.target_index(e.target_level)] += e.mean_shift;

    std::vector<detail::MissingProbabilities> miss(p);
    for (std::size_t j = 0; j < p; ++j) miss[j] = detail::missing_probabilities(schema.features[j], schema.sparse);

    std::optional<std::size_t> group_col;
    double group_value = 0.0;
    int positive = -1, negative = -1;
    if (signal.group_bias) {
        const auto& g = *signal.group_bias;
        group_col = *schema.index_of(g.feature);
        const auto& f = schema.features[*group_col];
        group_value = f.kind == FeatureKind::Categorical ? static_cast<double>(*f.level_index(g.level))
                                                         : (g.level == "1" ? 1.0 : 0.0);
        positive = static_cast<int>(*schema.target_index(g.positive_level));
        negative = static_cast<int>(*schema.target_index(g.negative_level));
    }

    RawDataset ds;
    ds.schema = schema;
    ds.n = n;
    ds.values.assign(n * p, 0.0);
    ds.states.assign(n * p, CellState::Value);
    ds.labels.resize(n);
    ds.signal_labels.resize(n);

    Rng rng(seed);
    auto draw_cell = [&](std::size_t i, std::size_t j, bool sparse, int level) {
        const auto& f = schema.features[j];
        const double u_na = rng.uniform();
        const double u_miss = rng.uniform();
        auto& state = ds.states[i * p + j];
        if (u_na < f.na_rate) {
            state = CellState::NA;
        } else if (u_miss < (sparse ? miss[j].sparse : miss[j].dense)) {
            state = CellState::Missing;
        } else {
            ds.values[i * p + j] = detail::draw_value(f, shift[j * levels + level], rng);
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(detail::draw_index(rng, schema.target_mix));
        const bool sparse = rng.uniform() < schema.sparse.rate;
        int signal_label = label;
        if (group_col) {
            draw_cell(i, *group_col, sparse, label);
            const bool in_group =
                ds.states[i * p + *group_col] == CellState::Value && ds.values[i * p + *group_col] == group_value;
            const bool flip = rng.uniform() < signal.group_bias->label_noise_rate;
            if (in_group && label == positive && flip) signal_label = negative;
        }
        ds.labels[i] = label;
        ds.signal_labels[i] = signal_label;
        for (std::size_t j = 0; j < p; ++j) {
            if (group_col && j == *group_col) continue;
            draw_cell(i, j, sparse, signal_label);
        }
    }
    return ds;
}

// ------------------------------------------------------------
// CSV
// ------------------------------------------------------------

inline std::string format_cell(const FeatureSpec& f, CellState s, double v) {
    if (s == CellState::Missing) return "";
    if (s == CellState::NA) return "NA";
    if (f.kind == FeatureKind::Categorical) return f.levels.at(static_cast<std::size_t>(v));
    return format_double(v);
}

inline csv::Table dataset_table(const RawDataset& ds) {
    csv::Row header;
    for (const auto& f : ds.schema.features) header.push_back(f.name);
    header.push_back(ds.schema.target_name);
    csv::Table table(header);
    csv::Row row(header.size());
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (std::size_t j = 0; j < ds.cols(); ++j)
            row[j] = format_cell(ds.schema.features[j], ds.state(i, j), ds.value(i, j));
        row.back() = ds.schema.target_levels[static_cast<std::size_t>(ds.labels[i])];
        table.add(row);
    }
    return table;
}

inline void write_dataset_csv(const RawDataset& ds, const std::filesystem::path& path) { dataset_table(ds).save(path); }

// Reads a dataset CSV against a schema. Columns are matched by header name;
// every schema feature and the target column must be present.
inline RawDataset read_dataset_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    const auto rows = csv::read(path);
    const std::string file = path.string();
    if (rows.empty()) throw ParseError(file + ": empty file");
    const auto& header = rows.front();
    const std::size_t p = schema.size();
    std::vector<std::size_t> col(p);
    for (std::size_t j = 0; j < p; ++j) col[j] = csv::column(header, schema.features[j].name, file);
    const std::size_t target_col = csv::column(header, schema.target_name, file);

    RawDataset ds;
    ds.schema = schema;
    ds.n = rows.size() - 1;
    if (ds.n == 0) throw DataError(file + ": no records");
    ds.values.assign(ds.n * p, 0.0);
    ds.states.assign(ds.n * p, CellState::Value);
    ds.labels.resize(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const auto& r = rows[i + 1];
        const std::string where = file + " record " + std::to_string(i + 1);
        if (r.size() != header.size()) throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields");
        for (std::size_t j = 0; j < p; ++j) {
            const auto& f = schema.features[j];
            const auto& cell = r[col[j]];
            auto& state = ds.states[i * p + j];
            double& value = ds.values[i * p + j];
            if (cell.empty()) {
                state = CellState::Missing;
            } else if (cell == "NA") {
                state = CellState::NA;
            } else if (f.kind == FeatureKind::Categorical) {
                auto k = f.level_index(cell);
                if (!k) throw ParseError(where + ": feature '" + f.name + "' has unknown level '" + cell + "'");
                value = static_cast<double>(*k);
            } else {
                value = parse_double(cell, where + " feature '" + f.name + "'");
                if (!std::isfinite(value)) throw ParseError(where + ": feature '" + f.name + "' is not finite");
                if (f.kind == FeatureKind::Binary && value != 0.0 && value != 1.0)
                    throw ParseError(where + ": binary feature '" + f.name + "' must be 0 or 1");
            }
        }
        auto level = schema.target_index(r[target_col]);
        if (!level) throw ParseError(where + ": unknown target level '" + r[target_col] + "'");
        ds.labels[i] = static_cast<int>(*level);
    }
    ds.signal_labels = ds.labels;
    return ds;
}

}  // namespace fairtriage

#endif
