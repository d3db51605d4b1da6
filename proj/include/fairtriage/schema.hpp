#ifndef FAIRTRIAGE_SCHEMA_HPP
#define FAIRTRIAGE_SCHEMA_HPP

// ------------------------------------------------------------
// dataset schema: per-feature marginals, missingness, NA rates
// ------------------------------------------------------------
//
// Schema file grammar (JSON):
//
//   {
//     "format": "fairtriage-schema", "version": 1,
//     "target": {"name": str, "levels": [str...], "mix": [prob...]},
//     "sparse_records": {"rate": r, "missing_boost": k},        (optional)
//     "features": [
//       {"name": str, "kind": "numeric-fraction" | "numeric-count" | "binary" | "categorical",
//        "mean": x, "std": s, "missing_pct": m, "na_pct": a,
//        "levels": [str...], "level_weights": [w...],           (categorical only)
//        "uniform": {"low": lo, "high": hi, "decimals": d}}     (optional)
//     ]
//   }
//
// Percentages are on a 0-100 scale. Categorical level weights are
// normalized on load. "uniform" replaces the normal draw for a numeric
// feature by a rounded uniform draw on [lo, hi).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "csv.hpp"

namespace fairtriage {

using json = nlohmann::json;

enum class FeatureKind { NumericFraction, NumericCount, Binary, Categorical };

inline std::string_view to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::NumericFraction: return "numeric-fraction";
        case FeatureKind::NumericCount: return "numeric-count";
        case FeatureKind::Binary: return "binary";
        case FeatureKind::Categorical: return "categorical";
    }
    return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
    if (s == "numeric-fraction") return FeatureKind::NumericFraction;
    if (s == "numeric-count") return FeatureKind::NumericCount;
    if (s == "binary") return FeatureKind::Binary;
    if (s == "categorical") return FeatureKind::Categorical;
    throw ParseError("unknown feature kind '" + std::string(s) + "'");
}

struct UniformDraw {
    double low = 0.0;
    double high = 1.0;
    int decimals = 0;
};

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::NumericFraction;
    double mean = 0.0;
    double std = 0.0;
    double missing_rate = 0.0;  // fraction, not percent
    double na_rate = 0.0;
    std::vector<std::string> levels;     // categorical
    std::vector<double> level_weights;   // categorical, sums to 1
    std::optional<UniformDraw> uniform;

    // Index of a categorical level, or nullopt.
    std::optional<std::size_t> level_index(std::string_view level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i] == level) return i;
        return std::nullopt;
    }
};

// Record-level missingness structure: a fraction `rate` of records have their
// per-cell missing probability multiplied by `missing_boost` (capped at 1);
// the remaining records absorb the rest so that per-feature missing rates are
// unchanged. rate = 0 gives independent cells.
struct SparseRecords {
    double rate = 0.0;
    double missing_boost = 1.0;
};

struct FeatureSchema {
    std::vector<FeatureSpec> features;
    std::string target_name = "LABEL";
    std::vector<std::string> target_levels;
    std::vector<double> target_mix;
    SparseRecords sparse;

    std::size_t size() const noexcept { return features.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return i;
        return std::nullopt;
    }

    const FeatureSpec& feature(std::string_view name) const {
        auto i = index_of(name);
        if (!i) throw ValidationError("unknown feature '" + std::string(name) + "'");
        return features[*i];
    }

    std::optional<std::size_t> target_index(std::string_view level) const {
        for (std::size_t i = 0; i < target_levels.size(); ++i)
            if (target_levels[i] == level) return i;
        return std::nullopt;
    }

    // Columns in the one-hot layout of the descriptive-statistics table:
    // one per numeric/binary feature, one per categorical level, one per
    // target level.
    std::size_t one_hot_column_count() const {
        std::size_t n = target_levels.size();
        for (const auto& f : features) n += f.kind == FeatureKind::Categorical ? f.levels.size() : 1;
        return n;
    }

    void validate() const;
};

inline void validate_feature(const FeatureSpec& f) {
    auto fail = [&](const std::string& why) { throw ValidationError("feature '" + f.name + "': " + why); };
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!(f.missing_rate >= 0.0 && f.missing_rate <= 1.0)) fail("missing rate outside [0,1]");
    if (!(f.na_rate >= 0.0 && f.na_rate <= 1.0)) fail("NA rate outside [0,1]");
    if (f.missing_rate + f.na_rate > 1.0 + 1e-12) fail("missing rate + NA rate exceeds 1");
    if (!(f.std >= 0.0) || !std::isfinite(f.std)) fail("std must be finite and nonnegative");
    if (!std::isfinite(f.mean)) fail("mean must be finite");
    switch (f.kind) {
        case FeatureKind::NumericFraction:
        case FeatureKind::Binary:
            if (f.mean < 0.0 || f.mean > 1.0) fail("mean outside [0,1]");
            break;
        case FeatureKind::NumericCount:
            if (f.mean < 0.0 && !f.uniform) fail("count mean negative");
            break;
        case FeatureKind::Categorical: {
            if (f.levels.empty()) fail("categorical feature without levels");
            if (f.level_weights.size() != f.levels.size()) fail("level_weights length differs from levels");
            std::set<std::string> seen(f.levels.begin(), f.levels.end());
            if (seen.size() != f.levels.size()) fail("duplicate level");
            double total = 0.0;
            for (double w : f.level_weights) {
                if (!(w >= 0.0)) fail("negative level weight");
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-9) fail("level weights do not sum to 1");
            break;
        }
    }
    if (f.uniform) {
        if (f.kind == FeatureKind::Categorical || f.kind == FeatureKind::Binary) fail("uniform draw needs a numeric kind");
        if (!(f.uniform->high > f.uniform->low)) fail("uniform range is empty");
        if (f.uniform->decimals < 0 || f.uniform->decimals > 12) fail("uniform decimals outside [0,12]");
    }
}

inline void FeatureSchema::validate() const {
    std::set<std::string> names;
    for (const auto& f : features) {
        validate_feature(f);
        if (!names.insert(f.name).second) throw ValidationError("feature '" + f.name + "': duplicate name");
    }
    if (names.count(target_name)) throw ValidationError("target name '" + target_name + "' collides with a feature");
    if (target_levels.size() < 2) throw ValidationError("target needs at least two levels");
    if (std::set<std::string>(target_levels.begin(), target_levels.end()).size() != target_levels.size())
        throw ValidationError("duplicate target level");
    if (target_mix.size() != target_levels.size()) throw ValidationError("target mix length differs from target levels");
    double total = 0.0;
    for (double p : target_mix) {
        if (!(p >= 0.0)) throw ValidationError("negative target mix entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("target mix does not sum to 1");
    if (!(sparse.rate >= 0.0 && sparse.rate < 1.0)) throw ValidationError("sparse_records.rate outside [0,1)");
    if (!(sparse.missing_boost >= 1.0)) throw ValidationError("sparse_records.missing_boost below 1");
    if (sparse.rate * sparse.missing_boost > 1.0 + 1e-12)
        throw ValidationError("sparse_records.rate * missing_boost exceeds 1");
}

namespace detail {

template <typename T>
T get_field(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw ParseError(context + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(context + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& context) {
    if (!j.contains(key)) return fallback;
    return get_field<T>(j, key, context);
}

}  // namespace detail

inline FeatureSpec feature_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("feature entry is not an object");
    FeatureSpec f;
    f.name = detail::get_field<std::string>(j, "name", "feature");
    const std::string ctx = "feature '" + f.name + "'";
    try {
        f.kind = parse_feature_kind(detail::get_field<std::string>(j, "kind", ctx));
    } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    f.missing_rate = detail::get_or<double>(j, "missing_pct", 0.0, ctx) / 100.0;
    f.na_rate = detail::get_or<double>(j, "na_pct", 0.0, ctx) / 100.0;
    if (f.kind == FeatureKind::Categorical) {
        f.levels = detail::get_field<std::vector<std::string>>(j, "levels", ctx);
        f.level_weights = detail::get_field<std::vector<double>>(j, "level_weights", ctx);
        double total = 0.0;
        for (double w : f.level_weights) total += w;
        if (total > 0.0)
            for (double& w : f.level_weights) w /= total;
    } else {
        f.mean = detail::get_field<double>(j, "mean", ctx);
        f.std = detail::get_or<double>(j, "std", 0.0, ctx);
    }
    if (j.contains("uniform")) {
        const auto& u = j.at("uniform");
        f.uniform = UniformDraw{detail::get_field<double>(u, "low", ctx), detail::get_field<double>(u, "high", ctx),
                                detail::get_or<int>(u, "decimals", 0, ctx)};
    }
    return f;
}

inline json feature_to_json(const FeatureSpec& f) {
    json j;
    j["name"] = f.name;
    j["kind"] = std::string(to_string(f.kind));
    if (f.kind == FeatureKind::Categorical) {
        j["levels"] = f.levels;
        j["level_weights"] = f.level_weights;
    } else {
        j["mean"] = f.mean;
        j["std"] = f.std;
    }
    j["missing_pct"] = f.missing_rate * 100.0;
    j["na_pct"] = f.na_rate * 100.0;
    if (f.uniform) j["uniform"] = {{"low", f.uniform->low}, {"high", f.uniform->high}, {"decimals", f.uniform->decimals}};
    return j;
}

inline FeatureSchema schema_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("schema: top level is not an object");
    if (j.contains("format") && j.at("format") != "fairtriage-schema")
        throw ParseError("schema: unexpected format tag");
    FeatureSchema s;
    const auto& target = j.contains("target") ? j.at("target") : throw ParseError("schema: missing 'target'");
    s.target_name = detail::get_field<std::string>(target, "name", "target");
    s.target_levels = detail::get_field<std::vector<std::string>>(target, "levels", "target");
    s.target_mix = detail::get_field<std::vector<double>>(target, "mix", "target");
    if (j.contains("sparse_records")) {
        const auto& sp = j.at("sparse_records");
        s.sparse.rate = detail::get_or<double>(sp, "rate", 0.0, "sparse_records");
        s.sparse.missing_boost = detail::get_or<double>(sp, "missing_boost", 1.0, "sparse_records");
    }
    if (!j.contains("features") || !j.at("features").is_array()) throw ParseError("schema: missing 'features' array");
    for (const auto& fj : j.at("features")) s.features.push_back(feature_from_json(fj));
    s.validate();
    return s;
}

inline json schema_to_json(const FeatureSchema& s) {
    json j;
    j["format"] = "fairtriage-schema";
    j["version"] = 1;
    j["target"] = {{"name", s.target_name}, {"levels", s.target_levels}, {"mix", s.target_mix}};
    if (s.sparse.rate > 0.0) j["sparse_records"] = {{"rate", s.sparse.rate}, {"missing_boost", s.sparse.missing_boost}};
    j["features"] = json::array();
    for (const auto& f : s.features) j["features"].push_back(feature_to_json(f));
    return j;
}

inline json parse_json_text(const std::string& text, const std::string& context) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(context + ": " + e.what());
    }
}

inline FeatureSchema load_schema(const std::filesystem::path& path) {
    const json j = parse_json_text(csv::read_file(path), path.string());
    try {
        return schema_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ------------------------------------------------------------
// label-conditional signal for synthetic data
// ------------------------------------------------------------

struct SignalEntry {
    std::string feature;
    std::string target_level;
    double mean_shift = 0.0;
};

// Positive records of the disadvantaged group have their features generated
// as if they were `negative_level` with probability label_noise_rate; their
// recorded label is unchanged. Any fixed classifier then misses them more
// often, which shows up as a higher false negative rate for the group.
struct GroupBias {
    std::string feature;
    std::string level;  // categorical level name, or "0"/"1" for binary
    double label_noise_rate = 0.0;
    std::string positive_level;
    std::string negative_level;
};

struct SignalSpec {
    std::vector<SignalEntry> entries;
    std::optional<GroupBias> group_bias;

    void validate(const FeatureSchema& schema) const {
        for (const auto& e : entries) {
            auto idx = schema.index_of(e.feature);
            if (!idx) throw ValidationError("signal: unknown feature '" + e.feature + "'");
            if (schema.features[*idx].kind == FeatureKind::Categorical)
                throw ValidationError("signal: feature '" + e.feature + "' is categorical; mean shifts need a numeric or binary feature");
            if (!schema.target_index(e.target_level))
                throw ValidationError("signal: unknown target level '" + e.target_level + "'");
            if (!std::isfinite(e.mean_shift)) throw ValidationError("signal: non-finite mean shift");
        }
        if (group_bias) {
            const auto& g = *group_bias;
            auto idx = schema.index_of(g.feature);
            if (!idx) throw ValidationError("signal: unknown group feature '" + g.feature + "'");
            const auto& f = schema.features[*idx];
            if (f.kind == FeatureKind::Categorical) {
                if (!f.level_index(g.level))
                    throw ValidationError("signal: group feature '" + g.feature + "' has no level '" + g.level + "'");
            } else if (f.kind == FeatureKind::Binary) {
                if (g.level != "0" && g.level != "1")
                    throw ValidationError("signal: binary group level must be \"0\" or \"1\"");
            } else {
                throw ValidationError("signal: group feature '" + g.feature + "' must be binary or categorical");
            }
            for (const auto& e : entries)
                if (e.feature == g.feature)
                    throw ValidationError("signal: group feature '" + g.feature + "' cannot carry a mean shift");
            if (!(g.label_noise_rate >= 0.0 && g.label_noise_rate <= 0.5))
                throw ValidationError("signal: label_noise_rate outside [0, 0.5]");
            if (!schema.target_index(g.positive_level) || !schema.target_index(g.negative_level))
                throw ValidationError("signal: unknown positive/negative level in group_bias");
            if (g.positive_level == g.negative_level)
                throw ValidationError("signal: positive and negative level coincide");
        }
    }
};

// {"entries": [{"feature", "target_level", "mean_shift"}...],
//  "group_bias": {"feature", "level", "label_noise_rate", "positive_level", "negative_level"}}
inline SignalSpec signal_from_json(const json& j) {
    SignalSpec s;
    if (j.is_null()) return s;
    if (j.contains("entries")) {
        for (const auto& e : j.at("entries"))
            s.entries.push_back({detail::get_field<std::string>(e, "feature", "signal entry"),
                                 detail::get_field<std::string>(e, "target_level", "signal entry"),
                                 detail::get_field<double>(e, "mean_shift", "signal entry")});
    }
    if (j.contains("group_bias") && !j.at("group_bias").is_null()) {
        const auto& g = j.at("group_bias");
        s.group_bias = GroupBias{detail::get_field<std::string>(g, "feature", "group_bias"),
                                 detail::get_field<std::string>(g, "level", "group_bias"),
                                 detail::get_field<double>(g, "label_noise_rate", "group_bias"),
                                 detail::get_field<std::string>(g, "positive_level", "group_bias"),
                                 detail::get_field<std::string>(g, "negative_level", "group_bias")};
    }
    return s;
}

inline json signal_to_json(const SignalSpec& s) {
    json j;
    j["entries"] = json::array();
    for (const auto& e : s.entries)
        j["entries"].push_back({{"feature", e.feature}, {"target_level", e.target_level}, {"mean_shift", e.mean_shift}});
    if (s.group_bias) {
        const auto& g = *s.group_bias;
        j["group_bias"] = {{"feature", g.feature},
                           {"level", g.level},
                           {"label_noise_rate", g.label_noise_rate},
                           {"positive_level", g.positive_level},
                           {"negative_level", g.negative_level}};
    }
    return j;
}

}  // namespace fairtriage

#endif
