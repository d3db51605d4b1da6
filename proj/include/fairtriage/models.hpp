#ifndef FAIRTRIAGE_MODELS_HPP
#define FAIRTRIAGE_MODELS_HPP

// ------------------------------------------------------------
// uniform classifier contract: fit (optionally weighted) and
// predict_proba, plus JSON persistence
// ------------------------------------------------------------
//
// Model file grammar (JSON):
//
//   {"format": "fairtriage-model", "version": 1,
//    "spec": {"kind": ..., <hyperparameters>, "seed": N},
//    "n_features": d,
//    "parameters": <kind-specific, see model_to_json>}

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "csv.hpp"
#include "models/boosting.hpp"
#include "models/logistic.hpp"
#include "models/naive_bayes.hpp"
#include "models/tree.hpp"
#include "preprocess.hpp"

namespace fairtriage {

using json = nlohmann::json;

enum class ModelKind { LogisticRegression, GradientBoosting, DecisionTree, GaussianNB, Dummy };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LogisticRegression: return "logistic_regression";
        case ModelKind::GradientBoosting: return "gradient_boosting";
        case ModelKind::DecisionTree: return "decision_tree";
        case ModelKind::GaussianNB: return "gaussian_nb";
        case ModelKind::Dummy: return "dummy";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "logistic_regression") return ModelKind::LogisticRegression;
    if (s == "gradient_boosting") return ModelKind::GradientBoosting;
    if (s == "decision_tree") return ModelKind::DecisionTree;
    if (s == "gaussian_nb") return ModelKind::GaussianNB;
    if (s == "dummy") return ModelKind::Dummy;
    throw ValidationError("unknown model kind '" + std::string(s) + "'");
}

// Defaults follow the published hyperparameter table: LR C = 1.0 with an L2
// penalty; boosting learning rate 0.1, depth 3, 100 estimators; tree with
// Gini splits and unlimited depth; dummy predicting the prior.
struct ModelSpec {
    ModelKind kind = ModelKind::LogisticRegression;
    double C = 1.0;
    int max_iter = 5000;
    double tol = 1e-6;
    double learning_rate = 0.1;
    int max_depth = 3;
    int n_estimators = 100;
    std::optional<int> tree_max_depth;  // decision_tree; nullopt = unlimited
    std::uint64_t seed = 123;

    void validate() const {
        if (!(C > 0.0)) throw ValidationError("model: C must be positive");
        if (!(learning_rate > 0.0)) throw ValidationError("model: learning_rate must be positive");
        if (n_estimators < 1) throw ValidationError("model: n_estimators must be at least 1");
        if (max_depth < 1) throw ValidationError("model: max_depth must be at least 1");
        if (tree_max_depth && *tree_max_depth < 1) throw ValidationError("model: tree max_depth must be at least 1 or null");
        if (max_iter < 1) throw ValidationError("model: max_iter must be at least 1");
        if (!(tol > 0.0)) throw ValidationError("model: tol must be positive");
    }

    std::string name() const { return std::string(to_string(kind)); }
};

inline json spec_to_json(const ModelSpec& s) {
    json j{{"kind", std::string(to_string(s.kind))}, {"seed", s.seed}};
    switch (s.kind) {
        case ModelKind::LogisticRegression:
            j["C"] = s.C;
            j["penalty"] = "l2";
            j["max_iter"] = s.max_iter;
            j["tol"] = s.tol;
            break;
        case ModelKind::GradientBoosting:
            j["learning_rate"] = s.learning_rate;
            j["max_depth"] = s.max_depth;
            j["n_estimators"] = s.n_estimators;
            break;
        case ModelKind::DecisionTree:
            j["criterion"] = "gini";
            j["max_depth"] = s.tree_max_depth ? json(*s.tree_max_depth) : json(nullptr);
            break;
        case ModelKind::GaussianNB:
            break;
        case ModelKind::Dummy:
            j["strategy"] = "prior";
            break;
    }
    return j;
}

inline ModelSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("model spec is not an object");
    ModelSpec s;
    s.kind = parse_model_kind(detail::get_field<std::string>(j, "kind", "model spec"));
    s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed, "model spec");
    s.C = detail::get_or<double>(j, "C", s.C, "model spec");
    s.max_iter = detail::get_or<int>(j, "max_iter", s.max_iter, "model spec");
    s.tol = detail::get_or<double>(j, "tol", s.tol, "model spec");
    s.learning_rate = detail::get_or<double>(j, "learning_rate", s.learning_rate, "model spec");
    s.n_estimators = detail::get_or<int>(j, "n_estimators", s.n_estimators, "model spec");
    if (j.contains("penalty") && j.at("penalty") != "l2") throw ValidationError("model: only the l2 penalty is supported");
    if (j.contains("criterion") && j.at("criterion") != "gini") throw ValidationError("model: only the gini criterion is supported");
    if (j.contains("strategy") && j.at("strategy") != "prior") throw ValidationError("model: only the prior strategy is supported");
    if (s.kind == ModelKind::DecisionTree) {
        if (j.contains("max_depth") && !j.at("max_depth").is_null())
            s.tree_max_depth = detail::get_field<int>(j, "max_depth", "model spec");
    } else {
        s.max_depth = detail::get_or<int>(j, "max_depth", s.max_depth, "model spec");
    }
    s.validate();
    return s;
}

namespace models {

struct TreeModel {
    RegressionTree tree;  // leaf value = weighted positive fraction
    double score(std::span<const double> x) const { return tree.predict(x); }
};

struct DummyModel {
    double prior = 0.0;
    double score(std::span<const double>) const { return prior; }
};

}  // namespace models

using ModelParameters = std::variant<models::LogisticModel, models::BoostingModel, models::TreeModel,
                                     models::NaiveBayesModel, models::DummyModel>;

struct FittedModel {
    ModelSpec spec;
    std::size_t n_features = 0;
    ModelParameters parameters;

    double score(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.score(x); }, parameters);
    }
};

// Per-record weights; all ones when absent.
inline std::vector<double> resolve_weights(std::size_t n, std::span<const double> weights) {
    if (weights.empty()) return std::vector<double>(n, 1.0);
    if (weights.size() != n)
        throw DataError("fit: weight vector has length " + std::to_string(weights.size()) + ", expected " +
                        std::to_string(n));
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("fit: weights must be finite and nonnegative");
    return {weights.begin(), weights.end()};
}

inline FittedModel fit(const ModelSpec& spec, const Matrix& X, std::span<const int> y,
                       std::span<const double> weights = {}) {
    spec.validate();
    if (X.rows() == 0) throw DataError("fit: no records");
    if (y.size() != X.rows()) throw DataError("fit: label vector length differs from record count");
    for (double v : X.values())
        if (std::isnan(v)) throw DataError("fit: NaN in design matrix");
    const auto w = resolve_weights(X.rows(), weights);

    double wpos = 0.0, wneg = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw DataError("fit: labels must be 0 or 1");
        (y[i] ? wpos : wneg) += w[i];
    }
    if (wpos + wneg <= 0.0) throw DataError("fit: total weight is zero");
    const bool single_class = wpos <= 0.0 || wneg <= 0.0;

    FittedModel m;
    m.spec = spec;
    m.n_features = X.cols();
    switch (spec.kind) {
        case ModelKind::LogisticRegression:
            if (single_class) throw DataError("fit: logistic_regression needs both classes");
            m.parameters = models::fit_logistic(X, y, w, {spec.C, spec.max_iter, spec.tol});
            break;
        case ModelKind::GradientBoosting:
            if (single_class) throw DataError("fit: gradient_boosting needs both classes");
            m.parameters = models::fit_boosting(X, y, w, {spec.learning_rate, spec.max_depth, spec.n_estimators});
            break;
        case ModelKind::GaussianNB:
            if (single_class) throw DataError("fit: gaussian_nb needs both classes");
            m.parameters = models::fit_naive_bayes(X, y, w);
            break;
        case ModelKind::DecisionTree: {
            std::vector<double> target(y.begin(), y.end()), ones(y.size(), 1.0);
            const models::SortedColumns sorted(X);
            m.parameters = models::TreeModel{
                models::grow_tree(X, sorted, target, ones, w, {spec.tree_max_depth.value_or(-1)})};
            break;
        }
        case ModelKind::Dummy:
            m.parameters = models::DummyModel{wpos / (wpos + wneg)};
            break;
    }
    return m;
}

inline FittedModel fit(const ModelSpec& spec, const DesignMatrix& data, std::span<const double> weights = {}) {
    return fit(spec, data.X, data.y, weights);
}

inline std::vector<double> predict_proba(const FittedModel& model, const Matrix& X) {
    if (X.cols() != model.n_features)
        throw DataError("predict_proba: matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                        std::to_string(model.n_features));
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = model.score(X.row(i));
    return out;
}

// ------------------------------------------------------------
// persistence
// ------------------------------------------------------------

namespace detail {

inline json tree_to_json(const models::RegressionTree& t) {
    json nodes = json::array();
    for (const auto& nd : t.nodes) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
    return nodes;
}

inline models::RegressionTree tree_from_json(const json& j, std::size_t n_features) {
    models::RegressionTree t;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 5) throw ParseError("model: tree node must be [feature, threshold, left, right, value]");
        t.nodes.push_back({e[0].get<int>(), e[1].get<double>(), e[2].get<int>(), e[3].get<int>(), e[4].get<double>()});
    }
    if (t.nodes.empty()) throw ParseError("model: empty tree");
    const int count = static_cast<int>(t.nodes.size());
    for (const auto& nd : t.nodes) {
        if (nd.is_leaf()) continue;
        if (nd.feature >= static_cast<int>(n_features) || nd.left <= 0 || nd.right <= 0 || nd.left >= count ||
            nd.right >= count)
            throw ParseError("model: tree node references out of range");
    }
    return t;
}

struct ParametersToJson {
    json operator()(const models::LogisticModel& m) const {
        return {{"coef", m.coef}, {"intercept", m.intercept}, {"iterations", m.iterations}, {"converged", m.converged}};
    }
    json operator()(const models::BoostingModel& m) const {
        json stages = json::array();
        for (const auto& st : m.stages) stages.push_back({{"scale", st.scale}, {"tree", tree_to_json(st.tree)}});
        return {{"base_score", m.base_score}, {"stages", stages}, {"training_loss", m.training_loss}};
    }
    json operator()(const models::TreeModel& m) const { return {{"tree", tree_to_json(m.tree)}}; }
    json operator()(const models::NaiveBayesModel& m) const {
        return {{"prior", m.prior}, {"mean", m.mean}, {"var", m.var}};
    }
    json operator()(const models::DummyModel& m) const { return {{"prior", m.prior}}; }
};

}  // namespace detail

inline json model_to_json(const FittedModel& m) {
    return {{"format", "fairtriage-model"},
            {"version", 1},
            {"spec", spec_to_json(m.spec)},
            {"n_features", m.n_features},
            {"parameters", std::visit(detail::ParametersToJson{}, m.parameters)}};
}

inline FittedModel model_from_json(const json& j) {
    try {
        if (j.at("format") != "fairtriage-model") throw ParseError("model: unexpected format tag");
        if (j.at("version") != 1) throw ParseError("model: unsupported version");
        FittedModel m;
        m.spec = spec_from_json(j.at("spec"));
        m.n_features = j.at("n_features").get<std::size_t>();
        const auto& p = j.at("parameters");
        auto check_len = [&](std::size_t len) {
            if (len != m.n_features) throw ParseError("model: parameter length differs from n_features");
        };
        switch (m.spec.kind) {
            case ModelKind::LogisticRegression: {
                models::LogisticModel lr;
                lr.coef = p.at("coef").get<std::vector<double>>();
                lr.intercept = p.at("intercept").get<double>();
                lr.iterations = p.value("iterations", 0);
                lr.converged = p.value("converged", false);
                check_len(lr.coef.size());
                m.parameters = std::move(lr);
                break;
            }
            case ModelKind::GradientBoosting: {
                models::BoostingModel gb;
                gb.base_score = p.at("base_score").get<double>();
                for (const auto& st : p.at("stages"))
                    gb.stages.push_back({detail::tree_from_json(st.at("tree"), m.n_features), st.at("scale").get<double>()});
                gb.training_loss = p.value("training_loss", std::vector<double>{});
                m.parameters = std::move(gb);
                break;
            }
            case ModelKind::DecisionTree:
                m.parameters = models::TreeModel{detail::tree_from_json(p.at("tree"), m.n_features)};
                break;
            case ModelKind::GaussianNB: {
                models::NaiveBayesModel nb;
                nb.prior = p.at("prior").get<std::array<double, 2>>();
                nb.mean = p.at("mean").get<std::array<std::vector<double>, 2>>();
                nb.var = p.at("var").get<std::array<std::vector<double>, 2>>();
                for (int c = 0; c < 2; ++c) {
                    check_len(nb.mean[c].size());
                    check_len(nb.var[c].size());
                }
                m.parameters = std::move(nb);
                break;
            }
            case ModelKind::Dummy:
                m.parameters = models::DummyModel{p.at("prior").get<double>()};
                break;
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

inline void save_model(const FittedModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << model_to_json(m).dump(1) << '\n';
}

inline FittedModel load_model(const std::filesystem::path& path) {
    return model_from_json(parse_json_text(csv::read_file(path), path.string()));
}

}  // namespace fairtriage

#endif
