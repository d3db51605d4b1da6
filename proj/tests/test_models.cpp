#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairtriage;

namespace {

// The 12 x 3 design of tests/oracles/generate_oracles.py.
Matrix oracle_X() {
    const double v[12][3] = {{0.10, 1.20, 0.0}, {0.40, 0.30, 1.0}, {0.35, 2.10, 0.0}, {0.80, 0.90, 1.0},
                             {0.05, 1.70, 0.0}, {0.95, 0.20, 1.0}, {0.60, 1.10, 1.0}, {0.20, 0.40, 0.0},
                             {0.70, 1.90, 0.0}, {0.55, 0.60, 1.0}, {0.15, 0.80, 1.0}, {0.90, 1.40, 0.0}};
    Matrix X(12, 3);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 3; ++j) X(i, j) = v[i][j];
    return X;
}
const std::vector<int> kOracleY = {0, 1, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1};

struct Problem {
    Matrix X;
    std::vector<int> y;
};

Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    Problem p{Matrix(n, d), std::vector<int>(n)};
    std::vector<double> w(d);
    for (auto& v : w) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * (p.X(i, j) = rng.normal());
        p.y[i] = rng.uniform() < sigmoid(z) ? 1 : 0;
    }
    p.y[0] = 0;
    p.y[1] = 1;
    return p;
}

ModelSpec spec_of(ModelKind k) {
    ModelSpec s;
    s.kind = k;
    return s;
}

const auto& lr(const FittedModel& m) { return std::get<models::LogisticModel>(m.parameters); }

}  // namespace

TEST(Dummy, PredictsThePrior) {
    std::vector<int> y(1000, 0);
    for (std::size_t i = 0; i < 331; ++i) y[i] = 1;
    const auto m = fit(spec_of(ModelKind::Dummy), Matrix(1000, 2), y);
    for (double s : predict_proba(m, Matrix(5, 2))) EXPECT_DOUBLE_EQ(s, 0.331);
}

TEST(Logistic, MonotoneOnSeparableTwoPoints) {
    Matrix X(2, 1);
    X(1, 0) = 1.0;
    const auto m = fit(spec_of(ModelKind::LogisticRegression), X, std::vector<int>{0, 1});
    const auto s = predict_proba(m, X);
    EXPECT_GT(s[1], s[0]);
}

TEST(Logistic, ZeroParametersScoreHalf) {
    FittedModel m{spec_of(ModelKind::LogisticRegression), 3, models::LogisticModel{{0.0, 0.0, 0.0}, 0.0}};
    for (double s : predict_proba(m, oracle_X())) EXPECT_EQ(s, 0.5);
}

TEST(Logistic, MatchesReferenceOptimum) {
    // scikit-learn lbfgs at tol 1e-12, same penalty convention
    struct Case {
        double C;
        double coef[3];
        double intercept;
    } cases[] = {{1.0, {1.1092348651806516, -0.0755918853206333, 0.46456784720227207}, -0.6849740819716181},
                 {0.5, {0.6268067091761664, -0.08779942342615946, 0.3134430612397128}, -0.364946977461053}};
    for (const auto& c : cases) {
        auto spec = spec_of(ModelKind::LogisticRegression);
        spec.C = c.C;
        spec.tol = 1e-10;
        const auto m = fit(spec, oracle_X(), kOracleY);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(lr(m).coef[j], c.coef[j], 1e-6) << "C=" << c.C;
        EXPECT_NEAR(lr(m).intercept, c.intercept, 1e-6);
    }
}

TEST(Logistic, GradientMatchesCentralDifferences) {
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto p = random_problem(100 + t, 20, 5);
        std::vector<double> w(20);
        Rng rng(500 + t);
        for (auto& v : w) v = 0.5 + rng.uniform();
        models::LogisticObjective obj(p.X, p.y, w, 0.7);
        std::vector<double> theta(6), grad(6);
        for (auto& v : theta) v = rng.normal();
        obj.evaluate(theta, grad);
        const double h = 1e-5;
        for (std::size_t k = 0; k < 6; ++k) {
            auto up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            const double fd = (obj.value(up) - obj.value(down)) / (2 * h);
            EXPECT_LE(std::abs(fd - grad[k]) / std::max(1e-8, std::abs(grad[k])), 1e-5) << "trial " << t << " k " << k;
        }
    }
}

TEST(Logistic, ConvergesToStationaryPoint) {
    const auto p = random_problem(3, 200, 6);
    const auto m = fit(spec_of(ModelKind::LogisticRegression), p.X, p.y);
    std::vector<double> theta(lr(m).coef);
    theta.push_back(lr(m).intercept);
    std::vector<double> w(200, 1.0), grad(7);
    models::LogisticObjective(p.X, p.y, w, 1.0).evaluate(theta, grad);
    for (double g : grad) EXPECT_LT(std::abs(g), 1e-6);
}

TEST(Logistic, IntegerWeightsEqualDuplication) {
    const auto p = random_problem(9, 30, 3);
    std::vector<double> w(30);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 30; ++i) {
        w[i] = static_cast<double>(1 + i % 3);
        for (int k = 0; k < static_cast<int>(w[i]); ++k) rows.push_back(i);
    }
    auto spec = spec_of(ModelKind::LogisticRegression);
    spec.tol = 1e-10;
    const auto a = fit(spec, p.X, p.y, w);
    const auto b = fit(spec, p.X.select_rows(rows), gather<int>(p.y, rows));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(lr(a).coef[j], lr(b).coef[j], 1e-6);
    EXPECT_NEAR(lr(a).intercept, lr(b).intercept, 1e-6);
}

TEST(Tree, IntegerWeightsEqualDuplication) {
    const auto p = random_problem(10, 40, 3);
    std::vector<double> w(40);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 40; ++i) {
        w[i] = static_cast<double>(1 + (i * 7) % 3);
        for (int k = 0; k < static_cast<int>(w[i]); ++k) rows.push_back(i);
    }
    auto spec = spec_of(ModelKind::DecisionTree);
    spec.tree_max_depth = 4;
    const auto a = predict_proba(fit(spec, p.X, p.y, w), p.X);
    const auto b = predict_proba(fit(spec, p.X.select_rows(rows), gather<int>(p.y, rows)), p.X);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Tree, UnlimitedDepthFitsTrainingDataWithoutTies) {
    const auto p = random_problem(12, 60, 2);
    const auto s = predict_proba(fit(spec_of(ModelKind::DecisionTree), p.X, p.y), p.X);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(s[i], static_cast<double>(p.y[i]));
}

TEST(NaiveBayes, MatchesReferencePosterior) {
    const auto m = fit(spec_of(ModelKind::GaussianNB), oracle_X(), kOracleY);
    Matrix probe(2, 3);
    probe(0, 0) = 0.5, probe(0, 1) = 1.0, probe(0, 2) = 0.5;
    probe(1, 0) = 0.1, probe(1, 1) = 2.0, probe(1, 2) = 0.0;
    const auto s = predict_proba(m, probe);
    EXPECT_NEAR(s[0], 0.6110149947117753, 1e-10);
    EXPECT_NEAR(s[1], 0.0013331458828564297, 1e-10);
}

TEST(NaiveBayes, SymmetricClassesGiveHalfAtMidpoint) {
    Matrix X(6, 1);
    const double v[] = {-3, -2, -1, 1, 2, 3};
    for (std::size_t i = 0; i < 6; ++i) X(i, 0) = v[i];
    const auto m = fit(spec_of(ModelKind::GaussianNB), X, std::vector<int>{0, 0, 0, 1, 1, 1});
    EXPECT_NEAR(predict_proba(m, Matrix(1, 1))[0], 0.5, 1e-9);
}

TEST(NaiveBayes, IntegerWeightsEqualDuplication) {
    const auto p = random_problem(14, 30, 3);
    std::vector<double> w(30);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 30; ++i) {
        w[i] = static_cast<double>(1 + i % 4);
        for (int k = 0; k < static_cast<int>(w[i]); ++k) rows.push_back(i);
    }
    const auto a = predict_proba(fit(spec_of(ModelKind::GaussianNB), p.X, p.y, w), p.X);
    const auto b =
        predict_proba(fit(spec_of(ModelKind::GaussianNB), p.X.select_rows(rows), gather<int>(p.y, rows)), p.X);
    for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Boosting, ZeroTreesScoreIsTrainingPositiveRate) {
    models::BoostingModel b;
    b.base_score = std::log(0.331 / 0.669);
    FittedModel m{spec_of(ModelKind::GradientBoosting), 2, b};
    for (double s : predict_proba(m, Matrix(3, 2))) EXPECT_NEAR(s, 0.331, 1e-15);
}

TEST(Boosting, TrainingLossNeverIncreases) {
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto p = random_problem(200 + t, 80, 4);
        auto spec = spec_of(ModelKind::GradientBoosting);
        spec.n_estimators = 40;
        const auto m = fit(spec, p.X, p.y);
        const auto& loss = std::get<models::BoostingModel>(m.parameters).training_loss;
        ASSERT_EQ(loss.size(), 41u);
        for (std::size_t k = 1; k < loss.size(); ++k) EXPECT_LE(loss[k], loss[k - 1]) << "trial " << t;
        EXPECT_LT(loss.back(), loss.front());
    }
}

TEST(Boosting, TreesRespectMaxDepth) {
    const auto p = random_problem(31, 100, 3);
    auto spec = spec_of(ModelKind::GradientBoosting);
    spec.n_estimators = 10;
    spec.max_depth = 2;
    const auto m = fit(spec, p.X, p.y);
    for (const auto& st : std::get<models::BoostingModel>(m.parameters).stages) EXPECT_LE(st.tree.depth(), 2);
}

TEST(Models, FitsAreDeterministicAndScoresInUnitInterval) {
    const auto p = random_problem(40, 120, 4);
    for (auto k : {ModelKind::LogisticRegression, ModelKind::GradientBoosting, ModelKind::DecisionTree,
                   ModelKind::GaussianNB, ModelKind::Dummy}) {
        const auto a = model_to_json(fit(spec_of(k), p.X, p.y)).dump();
        const auto b = model_to_json(fit(spec_of(k), p.X, p.y)).dump();
        EXPECT_EQ(a, b) << to_string(k);
        for (double s : predict_proba(model_from_json(json::parse(a)), p.X)) ASSERT_TRUE(s >= 0.0 && s <= 1.0);
    }
}

TEST(Models, PersistenceRoundTrip) {
    const auto p = random_problem(41, 150, 5);
    const auto dir = ft_test::scratch_dir("model_io");
    for (auto k : {ModelKind::LogisticRegression, ModelKind::GradientBoosting, ModelKind::DecisionTree,
                   ModelKind::GaussianNB, ModelKind::Dummy}) {
        const auto m = fit(spec_of(k), p.X, p.y);
        const auto path = dir / (std::string(to_string(k)) + ".json");
        save_model(m, path);
        const auto back = load_model(path);
        EXPECT_EQ(back.spec.kind, k);
        const auto a = predict_proba(m, p.X), b = predict_proba(back, p.X);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12) << to_string(k);
    }
}

TEST(Models, RejectsBadInputs) {
    const auto p = random_problem(42, 20, 2);
    std::vector<int> single(20, 1);
    for (auto k : {ModelKind::LogisticRegression, ModelKind::GaussianNB, ModelKind::GradientBoosting})
        EXPECT_THROW(fit(spec_of(k), p.X, single), DataError) << to_string(k);
    Matrix bad = p.X;
    bad(3, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(fit(spec_of(ModelKind::LogisticRegression), bad, p.y), DataError);
    const auto m = fit(spec_of(ModelKind::LogisticRegression), p.X, p.y);
    EXPECT_THROW(predict_proba(m, Matrix(2, 3)), DataError);
    EXPECT_THROW(fit(spec_of(ModelKind::LogisticRegression), p.X, p.y, std::vector<double>(5, 1.0)), DataError);
    auto neg = spec_of(ModelKind::LogisticRegression);
    neg.C = -1.0;
    EXPECT_THROW(fit(neg, p.X, p.y), ValidationError);
}

TEST(Models, SpecJsonRoundTripAndDefaults) {
    const auto s = spec_from_json(json{{"kind", "gradient_boosting"}});
    EXPECT_DOUBLE_EQ(s.learning_rate, 0.1);
    EXPECT_EQ(s.max_depth, 3);
    EXPECT_EQ(s.n_estimators, 100);
    EXPECT_DOUBLE_EQ(spec_from_json(json{{"kind", "logistic_regression"}}).C, 1.0);
    EXPECT_FALSE(spec_from_json(json{{"kind", "decision_tree"}}).tree_max_depth.has_value());
    EXPECT_THROW(spec_from_json(json{{"kind", "svm"}}), Error);
    auto t = spec_of(ModelKind::DecisionTree);
    t.tree_max_depth = 5;
    EXPECT_EQ(spec_from_json(spec_to_json(t)).tree_max_depth, 5);
}
