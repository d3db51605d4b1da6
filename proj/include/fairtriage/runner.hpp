#ifndef FAIRTRIAGE_RUNNER_HPP
#define FAIRTRIAGE_RUNNER_HPP

// ------------------------------------------------------------
// experiment orchestration: config -> stages -> report directory
// ------------------------------------------------------------
//
// Run config grammar (JSON). Relative paths resolve against the config file's
// directory. Only "data" and "target_level" are required.
//
//   {
//     "data": {"synthetic": {"schema": PATH, "n": N, "seed": S?, "signal": SIGNAL?}}
//           | {"csv": {"path": PATH, "schema": PATH}},
//     "drop_threshold": 0.30,
//     "target_level": "EH_SUPPORT",
//     "models": [MODEL_SPEC, ...],                 default [{"kind": "logistic_regression"}]
//     "base_seed": 0,
//     "threshold_policy": "f1_max" | "fixed(t)",
//     "cv": {"k": 10, "repetitions": 30},          omitted: no cross-validation
//     "holdout": {"test_fraction": 0.3},           implied by audit / mitigation / explain
//     "audit": {"features": [...], "alpha": 0.05, "min_category_fraction": 0.01},
//     "mitigation": {"methods": ["postprocessing", "reductions"], "feature": NAME,
//                    "grid_step": 0.01, "eg": {"epsilon", "iterations", "eta0", "B",
//                           "weighting": "best_mixture" | "uniform"}},
//     "explain": {"enabled": true, "K": 10, "n_samples": 1000, "instances": 20},
//     "output_dir": PATH
//   }
//
// Seeds: stage s, repetition r draws from base_seed + s * 10^6 + r with
// s = 0 synthesis, 1 cross-validation, 2 holdout split, 3 final fit,
// 4 mitigation, 5 explanation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "evaluation.hpp"
#include "explain.hpp"
#include "fairness.hpp"
#include "mitigation.hpp"
#include "models.hpp"
#include "preprocess.hpp"
#include "schema.hpp"
#include "synth.hpp"

namespace fairtriage {

namespace fs = std::filesystem;

enum Stage : std::uint64_t { kSynthStage = 0, kCvStage = 1, kSplitStage = 2, kFitStage = 3, kMitigationStage = 4, kExplainStage = 5 };

struct SyntheticSource {
    fs::path schema;
    std::size_t n = 0;
    std::optional<std::uint64_t> seed;
    SignalSpec signal;
};

struct CsvSource {
    fs::path path;
    fs::path schema;
};

struct RunConfig {
    std::optional<SyntheticSource> synthetic;
    std::optional<CsvSource> csv_source;
    double drop_threshold = 0.30;
    std::string target_level;
    std::vector<ModelSpec> models;
    std::uint64_t base_seed = 0;
    ThresholdPolicy policy = ThresholdPolicy::f1_max();
    std::optional<std::size_t> cv_k;
    std::size_t cv_repetitions = 30;
    bool holdout = false;
    double test_fraction = 0.3;
    std::vector<std::string> audit_features;
    double alpha = 0.05;
    double min_category_fraction = 0.01;
    std::vector<std::string> mitigation_methods;
    std::string mitigation_feature = "GENDER";
    double grid_step = 0.01;
    EGConfig eg;
    bool explain = false;
    ExplainSettings explain_settings;
    std::size_t explain_instances = 20;
    fs::path output_dir = "fairtriage-out";
    json echo;  // config as read, for the manifest

    bool audit_enabled() const { return !audit_features.empty(); }
    bool mitigation_enabled() const { return !mitigation_methods.empty(); }
    bool holdout_enabled() const { return holdout || audit_enabled() || mitigation_enabled() || explain; }

    void validate() const {
        if (synthetic.has_value() == csv_source.has_value())
            throw ValidationError("config field 'data': exactly one of 'synthetic' or 'csv' is required");
        if (synthetic && synthetic->n < 1) throw ValidationError("config field 'data.synthetic.n': must be at least 1");
        if (target_level.empty()) throw ValidationError("config field 'target_level': required");
        if (models.empty()) throw ValidationError("config field 'models': at least one model required");
        for (const auto& m : models) m.validate();
        if (cv_k && *cv_k < 2) throw ValidationError("config field 'cv.k': must be at least 2");
        if (cv_repetitions < 1) throw ValidationError("config field 'cv.repetitions': must be at least 1");
        if (!(test_fraction > 0.0 && test_fraction < 1.0))
            throw ValidationError("config field 'holdout.test_fraction': outside (0, 1)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("config field 'audit.alpha': outside (0, 1)");
        for (const auto& m : mitigation_methods)
            if (m != "postprocessing" && m != "reductions")
                throw ValidationError("config field 'mitigation.methods': unknown method '" + m + "'");
        if (!(grid_step > 0.0 && grid_step <= 0.5))
            throw ValidationError("config field 'mitigation.grid_step': outside (0, 0.5]");
        eg.validate();
        if (explain && (explain_settings.K < 1 || explain_settings.n_samples < 50))
            throw ValidationError("config field 'explain': K >= 1 and n_samples >= 50 required");
    }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T field(const json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + where + "." + key + "': wrong type");
    }
}

}  // namespace detail

inline RunConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
    if (!j.is_object()) throw ParseError("config: top level must be an object");
    RunConfig c;
    c.echo = j;
    if (!j.contains("data") || !j.at("data").is_object()) throw ValidationError("config field 'data': required object");
    const auto& data = j.at("data");
    if (data.contains("synthetic")) {
        const auto& s = data.at("synthetic");
        SyntheticSource src;
        src.schema = detail::resolve(base_dir, detail::field<std::string>(s, "schema", "", "data.synthetic"));
        src.n = detail::field<std::size_t>(s, "n", 0, "data.synthetic");
        if (s.contains("seed")) src.seed = detail::field<std::uint64_t>(s, "seed", 0, "data.synthetic");
        if (s.contains("signal")) {
            const auto& sig = s.at("signal");
            src.signal = sig.is_string()
                             ? signal_from_json(parse_json_text(
                                   csv::read_file(detail::resolve(base_dir, sig.get<std::string>())), "signal"))
                             : signal_from_json(sig);
        }
        c.synthetic = std::move(src);
    }
    if (data.contains("csv")) {
        const auto& s = data.at("csv");
        c.csv_source = CsvSource{detail::resolve(base_dir, detail::field<std::string>(s, "path", "", "data.csv")),
                                 detail::resolve(base_dir, detail::field<std::string>(s, "schema", "", "data.csv"))};
    }
    c.drop_threshold = detail::field<double>(j, "drop_threshold", c.drop_threshold, "config");
    c.target_level = detail::field<std::string>(j, "target_level", "", "config");
    if (j.contains("models")) {
        for (const auto& m : j.at("models")) c.models.push_back(spec_from_json(m));
    } else {
        c.models.push_back(ModelSpec{});
    }
    c.base_seed = detail::field<std::uint64_t>(j, "base_seed", c.base_seed, "config");
    if (j.contains("threshold_policy"))
        c.policy = parse_threshold_policy(detail::field<std::string>(j, "threshold_policy", "", "config"));
    if (j.contains("cv")) {
        const auto& cv = j.at("cv");
        c.cv_k = detail::field<std::size_t>(cv, "k", 10, "cv");
        c.cv_repetitions = detail::field<std::size_t>(cv, "repetitions", c.cv_repetitions, "cv");
    }
    if (j.contains("holdout")) {
        c.holdout = true;
        c.test_fraction = detail::field<double>(j.at("holdout"), "test_fraction", c.test_fraction, "holdout");
    }
    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        c.audit_features = detail::field<std::vector<std::string>>(a, "features", {}, "audit");
        c.alpha = detail::field<double>(a, "alpha", c.alpha, "audit");
        c.min_category_fraction = detail::field<double>(a, "min_category_fraction", c.min_category_fraction, "audit");
    }
    if (j.contains("mitigation")) {
        const auto& m = j.at("mitigation");
        c.mitigation_methods = detail::field<std::vector<std::string>>(m, "methods", {}, "mitigation");
        c.mitigation_feature = detail::field<std::string>(m, "feature", c.mitigation_feature, "mitigation");
        c.grid_step = detail::field<double>(m, "grid_step", c.grid_step, "mitigation");
        if (m.contains("eg")) {
            const auto& e = m.at("eg");
            c.eg.epsilon = detail::field<double>(e, "epsilon", c.eg.epsilon, "mitigation.eg");
            c.eg.iterations = detail::field<int>(e, "iterations", c.eg.iterations, "mitigation.eg");
            c.eg.eta0 = detail::field<double>(e, "eta0", c.eg.eta0, "mitigation.eg");
            c.eg.bound = detail::field<double>(e, "B", c.eg.bound, "mitigation.eg");
            if (e.contains("weighting"))
                c.eg.weighting = parse_eg_weighting(detail::field<std::string>(e, "weighting", "", "mitigation.eg"));
        }
    }
    if (j.contains("explain")) {
        const auto& e = j.at("explain");
        c.explain = detail::field<bool>(e, "enabled", true, "explain");
        c.explain_settings.K = detail::field<std::size_t>(e, "K", c.explain_settings.K, "explain");
        c.explain_settings.n_samples = detail::field<std::size_t>(e, "n_samples", c.explain_settings.n_samples, "explain");
        c.explain_instances = detail::field<std::size_t>(e, "instances", c.explain_instances, "explain");
    }
    if (j.contains("output_dir"))
        c.output_dir = detail::resolve(base_dir, detail::field<std::string>(j, "output_dir", "", "config"));
    c.eg.min_category_fraction = c.min_category_fraction;
    c.validate();
    return c;
}

inline RunConfig load_run_config(const fs::path& path) {
    const json j = parse_json_text(csv::read_file(path), path.string());
    return config_from_json(j, path.parent_path());
}

// ------------------------------------------------------------
// digests
// ------------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

// ------------------------------------------------------------
// run
// ------------------------------------------------------------

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct RunArtifacts {
    fs::path output_dir;
    std::map<std::string, std::string> digests;  // file name -> sha256
    std::vector<std::string> stages;             // completed, in order
    json summary;
    json manifest;
};

namespace detail {

class RunContext {
public:
    explicit RunContext(const RunConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(cfg.output_dir);
        art_.output_dir = cfg.output_dir;
    }

    template <typename Fn>
    void stage(const std::string& name, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            failed_ = name;
            write_manifest();
            throw StageError(name, e.what());
        }
        art_.stages.push_back(name);
    }

    void emit(const std::string& file, const std::string& text) {
        std::ofstream out(cfg_.output_dir / file, std::ios::binary);
        if (!out) throw Error("cannot write '" + (cfg_.output_dir / file).string() + "'");
        out << text;
        out.close();
        art_.digests[file] = sha256_hex(text);
    }

    void emit(const std::string& file, const csv::Table& table) { emit(file, table.text()); }

    void write_manifest() {
        json files = json::array();
        for (const auto& [name, digest] : art_.digests) files.push_back({{"file", name}, {"sha256", digest}});
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        art_.manifest = {{"tool", "fairtriage"},
                         {"version", std::string(kVersion)},
                         {"config", cfg_.echo},
                         {"base_seed", cfg_.base_seed},
                         {"seeds", seeds_},
                         {"stages_completed", art_.stages},
                         {"failed_stage", failed_ ? json(*failed_) : json(nullptr)},
                         {"files", files},
                         {"wall_time_seconds", wall}};
        std::ofstream out(cfg_.output_dir / "manifest.json", std::ios::binary);
        out << art_.manifest.dump(2) << '\n';
    }

    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

    RunArtifacts& artifacts() { return art_; }

private:
    const RunConfig& cfg_;
    std::chrono::steady_clock::time_point start_;
    RunArtifacts art_;
    std::optional<std::string> failed_;
    json seeds_ = json::object();
};

inline std::string model_label(const ModelSpec& spec, std::size_t index) {
    return std::string(to_string(spec.kind)) + (index ? "#" + std::to_string(index) : "");
}

}  // namespace detail

inline RunArtifacts run(const RunConfig& cfg) {
    cfg.validate();
    detail::RunContext ctx(cfg);
    json summary = json::object();

    EncodedData enc;
    ctx.stage("data", [&] {
        RawDataset raw;
        if (cfg.synthetic) {
            const auto schema = load_schema(cfg.synthetic->schema);
            const auto seed = cfg.synthetic->seed.value_or(derive_seed(cfg.base_seed, kSynthStage, 0));
            ctx.seed("synthesis", seed);
            raw = synthesize(schema, cfg.synthetic->n, cfg.synthetic->signal, seed);
        } else {
            raw = read_dataset_csv(cfg.csv_source->path, load_schema(cfg.csv_source->schema));
        }
        const auto kept = drop_sparse_records(raw, cfg.drop_threshold);
        enc = encode(kept, cfg.target_level);
        summary["data"] = {{"records_raw", raw.n},
                           {"records_kept", kept.n},
                           {"raw_features", raw.schema.size()},
                           {"encoded_columns", enc.design.d()},
                           {"positives", std::count(enc.design.y.begin(), enc.design.y.end(), 1)},
                           {"target_level", cfg.target_level}};
    });

    const auto& data = enc.design;
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < cfg.models.size(); ++m) labels.push_back(detail::model_label(cfg.models[m], m));

    Split split;
    if (cfg.holdout_enabled()) {
        ctx.stage("split", [&] {
            const auto seed = derive_seed(cfg.base_seed, kSplitStage, 0);
            ctx.seed("holdout", seed);
            split = stratified_split(data.y, cfg.test_fraction, seed);
            summary["holdout"] = {{"train", split.train.size()}, {"test", split.test.size()}};
        });
    } else {
        split.train.resize(data.n());
        std::iota(split.train.begin(), split.train.end(), 0);
    }
    const auto train = data.select_rows(split.train);
    const auto test = split.test.empty() ? DesignMatrix{} : data.select_rows(split.test);
    const auto train_groups = enc.groups.select_rows(split.train);
    const auto test_groups = enc.groups.select_rows(split.test);

    if (cfg.cv_k) {
        ctx.stage("cross_validation", [&] {
            const auto seed = derive_seed(cfg.base_seed, kCvStage, 0);
            ctx.seed("cross_validation", seed);
            std::vector<MetricSummary> summaries;
            json cv = json::array();
            for (std::size_t m = 0; m < cfg.models.size(); ++m) {
                auto s = cross_validate(cfg.models[m], train, {*cfg.cv_k, cfg.cv_repetitions, seed, cfg.policy, 0});
                s.model = labels[m];
                cv.push_back({{"model", labels[m]},
                              {"auc", {{"mean", s.auc.mean()}, {"std", s.auc.std()}}},
                              {"recall", {{"mean", s.recall.mean()}, {"std", s.recall.std()}}},
                              {"precision", {{"mean", s.precision.mean()}, {"std", s.precision.std()}}},
                              {"n_values", s.auc.values.size()}});
                summaries.push_back(std::move(s));
            }
            ctx.emit("metrics.csv", metrics_table(summaries));
            summary["cross_validation"] = {{"k", *cfg.cv_k}, {"repetitions", cfg.cv_repetitions}, {"models", cv}};
        });
    }

    if (!cfg.holdout_enabled()) {
        ctx.artifacts().summary = summary;
        ctx.emit("summary.json", summary.dump(2) + "\n");
        ctx.write_manifest();
        return ctx.artifacts();
    }

    std::vector<FittedModel> fitted;
    std::vector<std::vector<double>> test_scores, train_scores;
    std::vector<double> thresholds;
    ctx.stage("holdout_evaluation", [&] {
        csv::Table roc({"model", "fpr", "tpr", "threshold"});
        csv::Table pr({"model", "threshold", "precision", "recall", "f1"});
        json tests = json::array();
        for (std::size_t m = 0; m < cfg.models.size(); ++m) {
            ModelSpec spec = cfg.models[m];
            spec.seed = derive_seed(cfg.base_seed, kFitStage, m);
            fitted.push_back(fit(spec, train));
            train_scores.push_back(predict_proba(fitted.back(), train.X));
            test_scores.push_back(predict_proba(fitted.back(), test.X));
            thresholds.push_back(select_threshold(train.y, train_scores.back(), cfg.policy));
            const auto roc_curve = roc_points(test.y, test_scores.back());
            const auto pr_curve = pr_threshold_scan(test.y, test_scores.back());
            for (const auto& p : roc_curve.points)
                roc.add({labels[m], format_double(p.x), format_double(p.y), format_double(p.threshold)});
            for (const auto& p : pr_curve.points)
                pr.add({labels[m], format_double(p.threshold), format_double(p.y), format_double(p.x),
                        format_double(p.f1)});
            const auto cc = confusion(test.y, apply_threshold(test_scores.back(), thresholds.back()));
            const auto opt = optimal_point(roc_curve);
            tests.push_back({{"model", labels[m]},
                             {"threshold", thresholds.back()},
                             {"auc", auc(roc_curve)},
                             {"recall", cc.recall()},
                             {"precision", cc.precision()},
                             {"accuracy", cc.accuracy()},
                             {"optimal_roc_point", {{"fpr", opt.fpr}, {"tpr", opt.tpr}, {"threshold", opt.threshold}}}});
        }
        ctx.emit("roc.csv", roc);
        ctx.emit("pr_curve.csv", pr);
        summary["test"] = tests;
    });

    if (cfg.audit_enabled()) {
        ctx.stage("audit", [&] {
            csv::Table fnr({"model", "feature", "category", "n", "positives", "fnr", "fpr", "accuracy", "correct_pct",
                            "misclassified_pct"});
            csv::Table z({"model", "feature", "group_a", "group_b", "p1", "n1", "p2", "n2", "z", "p_value",
                          "significant"});
            json audits = json::array();
            std::string fnr_body, z_body;
            for (std::size_t m = 0; m < cfg.models.size(); ++m) {
                const auto y_hat = apply_threshold(test_scores[m], thresholds[m]);
                const auto report =
                    audit(test.y, y_hat, test_groups, {cfg.audit_features, cfg.alpha, cfg.min_category_fraction});
                const auto ft = fnr_table(report, labels[m]);
                const auto zt = ztest_table(report, labels[m]);
                // tables share one header; append bodies
                auto body = [](const std::string& text) { return text.substr(text.find('\n') + 1); };
                fnr_body += body(ft.text());
                z_body += body(zt.text());
                json verdicts = json::object();
                for (const auto& f : report.features) verdicts[f.stats.feature] = f.biased;
                audits.push_back({{"model", labels[m]}, {"biased", verdicts}});
            }
            ctx.emit("fnr_by_group.csv", fnr.text() + fnr_body);
            ctx.emit("ztests.csv", z.text() + z_body);
            summary["audit"] = {{"alpha", cfg.alpha}, {"models", audits}};
        });
    }

    if (cfg.mitigation_enabled()) {
        ctx.stage("mitigation", [&] {
            const Grouping& g_train = train_groups.at(cfg.mitigation_feature);
            const Grouping& g_test = test_groups.at(cfg.mitigation_feature);
            auto table = mitigation_table_header();
            json mit = json::object();
            mit["model"] = labels[0];
            mit["feature"] = cfg.mitigation_feature;

            auto record = [&](const std::string& variant, const std::vector<double>& p) {
                add_mitigation_rows(table, variant, test.y, p, g_test);
                const auto rates = soft_group_rates(test.y, p, g_test);
                mit[variant] = {{"fnr_gap", max_fnr_gap(rates, cfg.min_category_fraction)},
                                {"accuracy", soft_accuracy(test.y, p)}};
            };

            const auto base = apply_threshold(test_scores[0], thresholds[0]);
            record("unmitigated", std::vector<double>(base.begin(), base.end()));
            for (const auto& method : cfg.mitigation_methods) {
                if (method == "postprocessing") {
                    const auto gt =
                        fit_threshold_optimizer(train_scores[0], train.y, g_train,
                                                {cfg.grid_step, std::nullopt, cfg.min_category_fraction});
                    const auto pred = apply_group_thresholds(test_scores[0], g_test, gt);
                    record("postprocessing", std::vector<double>(pred.begin(), pred.end()));
                    json th = json::object();
                    for (const auto& [k, v] : gt.thresholds) th[k] = v;
                    mit["postprocessing"]["thresholds"] = th;
                    mit["postprocessing"]["training_gap"] = gt.achieved_gap;
                } else {
                    ModelSpec spec = cfg.models[0];
                    spec.seed = derive_seed(cfg.base_seed, kMitigationStage, 0);
                    ctx.seed("mitigation", spec.seed);
                    const auto rc = exponentiated_gradient(spec, train, g_train, cfg.eg);
                    record("reductions", positive_probability(rc, test.X));
                    mit["reductions"]["members"] = rc.members.size();
                    mit["reductions"]["training_gap"] = rc.training_gap;
                    mit["reductions"]["feasible"] = rc.feasible;
                }
            }
            ctx.emit("mitigation.csv", table);
            summary["mitigation"] = mit;
        });
    }

    if (cfg.explain) {
        ctx.stage("explain", [&] {
            const std::size_t count = std::min(cfg.explain_instances, test.n());
            std::vector<std::size_t> instances;
            for (std::size_t k = 0; k < count; ++k) instances.push_back(k * test.n() / count);
            ExplainSettings s = cfg.explain_settings;
            s.seed = derive_seed(cfg.base_seed, kExplainStage, 0);
            ctx.seed("explain", s.seed);
            const auto explanations = explain_many(fitted[0], test.X, instances, train.X, s);
            const auto y_hat = apply_threshold(test_scores[0], thresholds[0]);
            std::vector<Outcome> outcomes;
            for (auto i : instances) outcomes.push_back(outcome_of(test.y[i], y_hat[i]));
            const auto profiles = aggregate(explanations, outcomes, test.d());
            ctx.emit("explanations.csv", explanations_table(explanations, test.column_names));
            ctx.emit("importance_profiles.csv", profiles_table(profiles, test.column_names));
            double fid = 0.0;
            for (const auto& e : explanations) fid += e.local_fidelity;
            summary["explain"] = {{"model", labels[0]},
                                  {"instances", count},
                                  {"mean_fidelity", count ? fid / static_cast<double>(count) : 0.0}};
        });
    }

    ctx.artifacts().summary = summary;
    ctx.emit("summary.json", summary.dump(2) + "\n");
    ctx.write_manifest();
    return ctx.artifacts();
}

// ------------------------------------------------------------
// report
// ------------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace detail

// Human-readable summary of a run directory.
inline std::string render_report(const fs::path& run_dir) {
    const auto path = run_dir / "summary.json";
    if (!fs::exists(path)) throw Error("report: missing file '" + path.string() + "'");
    const json s = parse_json_text(csv::read_file(path), path.string());
    std::ostringstream out;
    if (s.contains("data")) {
        const auto& d = s.at("data");
        out << "Data: " << d.value("records_kept", 0) << " of " << d.value("records_raw", 0) << " records kept, "
            << d.value("encoded_columns", 0) << " encoded columns, target " << d.value("target_level", "") << "\n\n";
    }
    if (s.contains("cross_validation")) {
        const auto& cv = s.at("cross_validation");
        out << "Cross-validation (" << cv.value("k", 0) << "-fold, " << cv.value("repetitions", 0)
            << " repetitions), mean +- std\n";
        out << detail::pad("Classifier", 24) << detail::pad("AUC", 20) << detail::pad("Recall", 20) << "Precision\n";
        for (const auto& m : cv.at("models")) {
            auto cell = [&](const char* k) {
                return detail::fixed(m.at(k).at("mean")) + " +- " + detail::fixed(m.at(k).at("std"));
            };
            out << detail::pad(m.at("model"), 24) << detail::pad(cell("auc"), 20) << detail::pad(cell("recall"), 20)
                << cell("precision") << "\n";
        }
        out << "\n";
    }
    if (s.contains("test")) {
        out << "Test performance\n";
        out << detail::pad("Classifier", 24) << detail::pad("AUC", 10) << detail::pad("Recall", 10)
            << detail::pad("Precision", 11) << "Optimal ROC point (FPR, TPR)\n";
        for (const auto& m : s.at("test")) {
            const auto& o = m.at("optimal_roc_point");
            out << detail::pad(m.at("model"), 24) << detail::pad(detail::fixed(m.at("auc")), 10)
                << detail::pad(detail::fixed(m.at("recall")), 10) << detail::pad(detail::fixed(m.at("precision")), 11)
                << "(" << detail::fixed(o.at("fpr"), 2) << ", " << detail::fixed(o.at("tpr"), 2) << ")\n";
        }
        out << "\n";
    }
    if (s.contains("audit")) {
        out << "Bias audit (alpha = " << s.at("audit").at("alpha").get<double>() << ")\n";
        for (const auto& m : s.at("audit").at("models"))
            for (const auto& [feature, biased] : m.at("biased").items())
                out << "  " << detail::pad(m.at("model"), 22) << detail::pad(feature, 16)
                    << (biased.get<bool>() ? "significant FNR difference" : "no significant difference") << "\n";
        out << "\n";
    }
    if (s.contains("mitigation")) {
        const auto& m = s.at("mitigation");
        out << "Mitigation on " << m.at("feature").get<std::string>() << " (" << m.at("model").get<std::string>()
            << ")\n";
        for (const char* v : {"unmitigated", "postprocessing", "reductions"}) {
            if (!m.contains(v)) continue;
            out << "  " << detail::pad(v, 16) << "FNR gap " << detail::fixed(m.at(v).at("fnr_gap"))
                << "   accuracy " << detail::fixed(m.at(v).at("accuracy")) << "\n";
        }
        out << "\n";
    }
    if (s.contains("explain")) {
        const auto& e = s.at("explain");
        out << "Explanations: " << e.value("instances", 0) << " instances, mean local fidelity "
            << detail::fixed(e.value("mean_fidelity", 0.0)) << "\n";
    }
    return out.str();
}

}  // namespace fairtriage

#endif
