// fairtriage command-line front end.
//
// Every subcommand reads and writes plain files. On failure the process exits
// with status 1 and prints "fairtriage: stage '<name>': <reason>" on stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fairtriage/runner.hpp>

namespace fs = std::filesystem;
using namespace fairtriage;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw Error(what + " '" + p.string() + "' does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

ModelSpec model_spec(const std::string& kind, const std::string& spec_file) {
    if (!spec_file.empty()) {
        require_file(spec_file, "model spec");
        return spec_from_json(parse_json_text(csv::read_file(spec_file), spec_file));
    }
    ModelSpec spec;
    spec.kind = parse_model_kind(kind);
    return spec;
}

// y plus either y_hat, or score thresholded at `threshold`
struct Predictions {
    std::vector<int> y, y_hat;
};

Predictions read_predictions(const fs::path& path, std::optional<double> threshold) {
    require_file(path, "predictions file");
    const auto rows = csv::read(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty file");
    const auto& header = rows[0];
    const auto yc = csv::column(header, "y", path.string());
    const bool has_hat = std::find(header.begin(), header.end(), "y_hat") != header.end();
    const auto pc = has_hat ? csv::column(header, "y_hat", path.string()) : csv::column(header, "score", path.string());
    if (!has_hat && !threshold) throw ValidationError(path.string() + ": column 'score' needs --threshold");
    Predictions p;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string ctx = path.string() + " record " + std::to_string(i);
        if (rows[i].size() != header.size()) throw ParseError(ctx + ": wrong field count");
        p.y.push_back(parse_double(rows[i][yc], ctx) != 0.0 ? 1 : 0);
        const double v = parse_double(rows[i][pc], ctx);
        p.y_hat.push_back(has_hat ? (v != 0.0 ? 1 : 0) : (v >= *threshold ? 1 : 0));
    }
    return p;
}

template <typename Fn>
int guarded(const std::string& stage, Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const StageError& e) {
        std::cerr << "fairtriage: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "fairtriage: stage '" << stage << "': " << e.what() << '\n';
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairtriage: fairness-aware triage classification toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "draw a synthetic dataset from a schema");
    std::string synth_schema, synth_signal, synth_out = "synthetic.csv";
    std::size_t synth_n = 0;
    std::uint64_t synth_seed = 0;
    synth->add_option("--schema", synth_schema, "schema JSON")->required();
    synth->add_option("--n", synth_n, "record count")->required();
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--signal", synth_signal, "signal JSON");
    synth->add_option("--out", synth_out, "output CSV");

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "drop sparse records, encode, derive groups");
    std::string prep_schema, prep_data, prep_target, prep_out = ".";
    double prep_drop = 0.30;
    prep->add_option("--schema", prep_schema, "schema JSON")->required();
    prep->add_option("--data", prep_data, "dataset CSV")->required();
    prep->add_option("--target", prep_target, "positive target level")->required();
    prep->add_option("--drop-threshold", prep_drop, "missing-cell fraction above which a record is dropped");
    prep->add_option("--out-dir", prep_out, "writes design.csv and groups.csv here");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "repeated stratified cross-validation");
    std::string eval_design, eval_kind = "logistic_regression", eval_spec, eval_policy = "f1_max", eval_out = ".";
    std::string eval_save, eval_pred;
    std::size_t eval_k = 10, eval_reps = 30;
    std::uint64_t eval_seed = 0;
    eval->add_option("--design", eval_design, "design CSV (last column y)")->required();
    eval->add_option("--model-kind", eval_kind, "model kind");
    eval->add_option("--model", eval_spec, "model spec JSON (overrides --model-kind)");
    eval->add_option("--k", eval_k, "folds");
    eval->add_option("--repetitions", eval_reps, "repetitions");
    eval->add_option("--seed", eval_seed, "base seed");
    eval->add_option("--policy", eval_policy, "f1_max or fixed(t)");
    eval->add_option("--out", eval_out, "writes metrics.csv here");
    eval->add_option("--save-model", eval_save, "fit on all records and save the model JSON");
    eval->add_option("--predictions", eval_pred, "with --save-model: write y, score, y_hat for all records");

    // audit
    auto* aud = app.add_subcommand("audit", "group FNR table and pairwise Z-tests");
    std::string aud_pred, aud_groups, aud_features, aud_out = ".", aud_model = "model";
    double aud_alpha = 0.05, aud_min = 0.01;
    std::optional<double> aud_threshold;
    aud->add_option("--predictions", aud_pred, "CSV with y and y_hat (or score)")->required();
    aud->add_option("--groups", aud_groups, "groups CSV")->required();
    aud->add_option("--features", aud_features, "comma-separated features (default: all group columns)");
    aud->add_option("--alpha", aud_alpha, "significance level");
    aud->add_option("--min-category-fraction", aud_min, "categories below this share are excluded");
    aud->add_option("--threshold", aud_threshold, "threshold for a score column");
    aud->add_option("--label", aud_model, "model label written to the tables");
    aud->add_option("--out", aud_out, "writes fnr_by_group.csv and ztests.csv here");

    // mitigate
    auto* mit = app.add_subcommand("mitigate", "threshold optimizer and exponentiated gradient");
    std::string mit_design, mit_groups, mit_feature, mit_method = "both", mit_kind = "logistic_regression";
    std::string mit_spec, mit_policy = "f1_max", mit_out = ".";
    double mit_test = 0.3, mit_step = 0.01, mit_min = 0.01;
    std::uint64_t mit_seed = 0;
    EGConfig eg;
    mit->add_option("--design", mit_design, "design CSV")->required();
    mit->add_option("--groups", mit_groups, "groups CSV")->required();
    mit->add_option("--feature", mit_feature, "sensitive feature")->required();
    mit->add_option("--method", mit_method, "postprocessing, reductions or both")
        ->check(CLI::IsMember({"postprocessing", "reductions", "both"}));
    mit->add_option("--model-kind", mit_kind, "model kind");
    mit->add_option("--model", mit_spec, "model spec JSON");
    mit->add_option("--policy", mit_policy, "threshold policy for the unmitigated model");
    mit->add_option("--test-fraction", mit_test, "held-out share");
    mit->add_option("--grid-step", mit_step, "threshold grid step");
    mit->add_option("--min-category-fraction", mit_min, "categories below this share are unconstrained");
    mit->add_option("--epsilon", eg.epsilon, "FNR gap bound");
    mit->add_option("--iterations", eg.iterations, "exponentiated-gradient iterations");
    mit->add_option("--seed", mit_seed, "base seed");
    mit->add_option("--out", mit_out, "writes mitigation.csv here");

    // explain
    auto* exp = app.add_subcommand("explain", "local surrogate explanations");
    std::string exp_model, exp_design, exp_instances, exp_out = ".", exp_policy = "f1_max";
    ExplainSettings es;
    exp->add_option("--model", exp_model, "model JSON")->required();
    exp->add_option("--design", exp_design, "design CSV")->required();
    exp->add_option("--instances", exp_instances, "comma-separated row indices (default: first 20)");
    exp->add_option("--K", es.K, "columns per explanation");
    exp->add_option("--n-samples", es.n_samples, "perturbation samples");
    exp->add_option("--seed", es.seed, "seed");
    exp->add_option("--policy", exp_policy, "threshold policy for outcome grouping");
    exp->add_option("--out", exp_out, "writes explanations.csv and importance_profiles.csv here");

    // report
    auto* rep = app.add_subcommand("report", "render a run directory as text");
    std::string rep_dir;
    rep->add_option("--run", rep_dir, "run directory")->required();

    // run
    auto* runc = app.add_subcommand("run", "execute a full configured pipeline");
    std::string run_config, run_out;
    std::optional<std::uint64_t> run_seed;
    runc->add_option("--config", run_config, "run config JSON")->required();
    runc->add_option("--out", run_out, "output directory (overrides the config)");
    runc->add_option("--seed", run_seed, "base seed (overrides the config)");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        return guarded("synth", [&] {
            require_file(synth_schema, "schema");
            SignalSpec signal;
            if (!synth_signal.empty()) {
                require_file(synth_signal, "signal");
                signal = signal_from_json(parse_json_text(csv::read_file(synth_signal), synth_signal));
            }
            const auto ds = synthesize(load_schema(synth_schema), synth_n, signal, synth_seed);
            write_text(synth_out, dataset_table(ds).text());
            std::cout << synth_out << ": " << ds.n << " records\n";
        });
    }

    if (prep->parsed()) {
        return guarded("preprocess", [&] {
            require_file(prep_schema, "schema");
            require_file(prep_data, "dataset");
            const auto raw = read_dataset_csv(prep_data, load_schema(prep_schema));
            const auto kept = drop_sparse_records(raw, prep_drop);
            const auto enc = encode(kept, prep_target);
            const fs::path dir = prep_out;
            write_text(dir / "design.csv", design_table(enc.design).text());
            write_text(dir / "groups.csv", groups_table(enc.groups, enc.design.n()).text());
            std::cout << kept.n << " of " << raw.n << " records kept, " << enc.design.d() << " columns\n";
        });
    }

    if (eval->parsed()) {
        return guarded("evaluate", [&] {
            require_file(eval_design, "design file");
            const auto data = read_design_csv(eval_design);
            const auto spec = model_spec(eval_kind, eval_spec);
            const auto policy = parse_threshold_policy(eval_policy);
            auto s = cross_validate(spec, data, {eval_k, eval_reps, eval_seed, policy, 0});
            s.model = std::string(to_string(spec.kind));
            write_text(fs::path(eval_out) / "metrics.csv", metrics_table({s}).text());
            std::cout << s.model << " AUC " << s.auc.mean() << " recall " << s.recall.mean() << " precision "
                      << s.precision.mean() << '\n';
            if (!eval_save.empty()) {
                const auto model = fit(spec, data);
                save_model(model, eval_save);
                if (!eval_pred.empty()) {
                    const auto scores = predict_proba(model, data.X);
                    const double t = select_threshold(data.y, scores, policy);
                    csv::Table table({"y", "score", "y_hat"});
                    for (std::size_t i = 0; i < scores.size(); ++i)
                        table.add({std::to_string(data.y[i]), format_double(scores[i]), scores[i] >= t ? "1" : "0"});
                    write_text(eval_pred, table.text());
                }
            } else if (!eval_pred.empty()) {
                throw ValidationError("--predictions requires --save-model");
            }
        });
    }

    if (aud->parsed()) {
        return guarded("audit", [&] {
            const auto p = read_predictions(aud_pred, aud_threshold);
            require_file(aud_groups, "groups file");
            const auto groups = read_groups_csv(aud_groups);
            auto features = split_list(aud_features);
            if (features.empty())
                for (const auto& g : groups.groupings) features.push_back(g.name);
            const auto report = audit(p.y, p.y_hat, groups, {features, aud_alpha, aud_min});
            write_text(fs::path(aud_out) / "fnr_by_group.csv", fnr_table(report, aud_model).text());
            write_text(fs::path(aud_out) / "ztests.csv", ztest_table(report, aud_model).text());
            for (const auto& f : report.features)
                std::cout << f.stats.feature << ": " << (f.biased ? "significant FNR difference" : "no significant difference")
                          << '\n';
        });
    }

    if (mit->parsed()) {
        return guarded("mitigate", [&] {
            require_file(mit_design, "design file");
            require_file(mit_groups, "groups file");
            const auto data = read_design_csv(mit_design);
            const auto groups = read_groups_csv(mit_groups);
            if (groups.groupings.empty() || groups.groupings[0].codes.size() != data.n())
                throw DataError("groups file and design file differ in record count");
            auto spec = model_spec(mit_kind, mit_spec);
            const auto split = stratified_split(data.y, mit_test, derive_seed(mit_seed, kSplitStage, 0));
            const auto train = data.select_rows(split.train);
            const auto test = data.select_rows(split.test);
            const auto g_train = groups.select_rows(split.train).at(mit_feature);
            const auto g_test = groups.select_rows(split.test).at(mit_feature);

            spec.seed = derive_seed(mit_seed, kFitStage, 0);
            const auto model = fit(spec, train);
            const auto train_scores = predict_proba(model, train.X);
            const auto test_scores = predict_proba(model, test.X);
            const double t = select_threshold(train.y, train_scores, parse_threshold_policy(mit_policy));

            auto table = mitigation_table_header();
            auto record = [&](const std::string& variant, const std::vector<double>& p) {
                add_mitigation_rows(table, variant, test.y, p, g_test);
                std::cout << variant << ": FNR gap " << max_fnr_gap(soft_group_rates(test.y, p, g_test), mit_min)
                          << ", accuracy " << soft_accuracy(test.y, p) << '\n';
            };
            const auto base = apply_threshold(test_scores, t);
            record("unmitigated", {base.begin(), base.end()});
            if (mit_method != "reductions") {
                const auto gt = fit_threshold_optimizer(train_scores, train.y, g_train, {mit_step, std::nullopt, mit_min});
                const auto pred = apply_group_thresholds(test_scores, g_test, gt);
                record("postprocessing", {pred.begin(), pred.end()});
            }
            if (mit_method != "postprocessing") {
                EGConfig cfg = eg;
                cfg.min_category_fraction = mit_min;
                spec.seed = derive_seed(mit_seed, kMitigationStage, 0);
                const auto rc = exponentiated_gradient(spec, train, g_train, cfg);
                record("reductions", positive_probability(rc, test.X));
            }
            write_text(fs::path(mit_out) / "mitigation.csv", table.text());
        });
    }

    if (exp->parsed()) {
        return guarded("explain", [&] {
            require_file(exp_model, "model file");
            require_file(exp_design, "design file");
            const auto model = load_model(exp_model);
            const auto data = read_design_csv(exp_design);
            std::vector<std::size_t> instances;
            for (const auto& s : split_list(exp_instances)) {
                const double v = parse_double(s, "--instances");
                if (v < 0 || v != std::floor(v) || v >= static_cast<double>(data.n()))
                    throw ValidationError("--instances: index '" + s + "' out of range");
                instances.push_back(static_cast<std::size_t>(v));
            }
            if (instances.empty())
                for (std::size_t i = 0; i < std::min<std::size_t>(20, data.n()); ++i) instances.push_back(i);
            const auto explanations = explain_many(model, data.X, instances, data.X, es);
            const auto scores = predict_proba(model, data.X);
            const auto y_hat = apply_threshold(scores, select_threshold(data.y, scores, parse_threshold_policy(exp_policy)));
            std::vector<Outcome> outcomes;
            for (auto i : instances) outcomes.push_back(outcome_of(data.y[i], y_hat[i]));
            const fs::path dir = exp_out;
            write_text(dir / "explanations.csv", explanations_table(explanations, data.column_names).text());
            write_text(dir / "importance_profiles.csv",
                       profiles_table(aggregate(explanations, outcomes, data.d()), data.column_names).text());
            std::cout << explanations.size() << " explanations written\n";
        });
    }

    if (rep->parsed()) {
        return guarded("report", [&] {
            if (!fs::is_directory(rep_dir)) throw Error("run directory '" + rep_dir + "' does not exist");
            std::cout << render_report(rep_dir);
        });
    }

    if (runc->parsed()) {
        return guarded("config", [&] {
            require_file(run_config, "config");
            auto cfg = load_run_config(run_config);
            if (!run_out.empty()) cfg.output_dir = run_out;
            if (run_seed) cfg.base_seed = *run_seed;
            const auto art = run(cfg);
            std::cout << "stages: ";
            for (std::size_t i = 0; i < art.stages.size(); ++i) std::cout << (i ? ", " : "") << art.stages[i];
            std::cout << "\noutput: " << art.output_dir.string() << '\n';
        });
    }
    return 0;
}
