#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairtriage;

namespace {

Matrix random_background(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    Matrix X(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) X(i, j) = j % 3 == 2 ? (rng.uniform() < 0.3 ? 1.0 : 0.0) : rng.normal();
    return X;
}

auto linear_scorer(std::vector<double> w, double b) {
    return [w = std::move(w), b](const Matrix& Z) {
        std::vector<double> out(Z.rows());
        for (std::size_t s = 0; s < Z.rows(); ++s) {
            out[s] = b;
            for (std::size_t j = 0; j < w.size(); ++j) out[s] += w[j] * Z(s, j);
        }
        return out;
    };
}

double weight_of(const Explanation& ex, std::size_t column) {
    for (const auto& c : ex.contributions)
        if (c.column == column) return c.weight;
    return 0.0;
}

}  // namespace

TEST(Explain, LinearBlackBoxSignsAndFidelity) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 6;
        std::vector<double> w(d);
        for (auto& v : w) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
        const Matrix bg = random_background(100 + trial, 300, d);
        ExplainSettings st;
        st.K = d;
        st.seed = 7 + trial;
        const auto ex = explain_instance(linear_scorer(w, 0.3), bg.row(0), Background(bg), st);
        ASSERT_EQ(ex.contributions.size(), d);
        for (std::size_t j = 0; j < d; ++j)
            EXPECT_EQ(std::signbit(weight_of(ex, j)), std::signbit(w[j])) << "trial " << trial << " col " << j;
        EXPECT_GE(ex.local_fidelity, 0.95);
        EXPECT_LE(ex.local_fidelity, 1.0 + 1e-12);
    }
}

TEST(Explain, ConstantBlackBoxGivesZeros) {
    const Matrix bg = random_background(2, 100, 5);
    ExplainSettings st;
    st.K = 3;
    const auto ex = explain_instance([](const Matrix& Z) { return std::vector<double>(Z.rows(), 0.42); }, bg.row(3),
                                     Background(bg), st);
    ASSERT_EQ(ex.contributions.size(), 3u);
    for (const auto& c : ex.contributions) EXPECT_EQ(c.weight, 0.0);
    EXPECT_EQ(ex.local_fidelity, 0.0);
    EXPECT_DOUBLE_EQ(ex.intercept, 0.42);
}

TEST(Explain, IndicatorColumnRanksFirst) {
    const Matrix bg = random_background(3, 400, 9);
    const std::size_t key = 5;  // a 0/1 column
    auto scorer = [&](const Matrix& Z) {
        std::vector<double> out(Z.rows());
        for (std::size_t s = 0; s < Z.rows(); ++s) out[s] = Z(s, key) > 0.5 ? 1.0 : 0.0;
        return out;
    };
    std::size_t row = 0;
    while (bg(row, key) != 1.0) ++row;
    ExplainSettings st;
    st.K = 4;
    const auto ex = explain_instance(scorer, bg.row(row), Background(bg), st);
    EXPECT_EQ(ex.contributions.front().column, key);
}

TEST(Explain, ContributionsScaleWithScores) {
    const Matrix bg = random_background(4, 200, 5);
    const std::vector<double> w{0.4, -0.2, 0.7, 0.1, -0.5};
    ExplainSettings st;
    st.K = 3;
    st.seed = 11;
    const auto a = explain_instance(linear_scorer(w, 0.1), bg.row(2), Background(bg), st);
    std::vector<double> w3(w);
    for (auto& v : w3) v *= 3.0;
    const auto b = explain_instance(linear_scorer(w3, 0.3), bg.row(2), Background(bg), st);
    ASSERT_EQ(a.contributions.size(), b.contributions.size());
    for (std::size_t k = 0; k < a.contributions.size(); ++k) {
        EXPECT_EQ(a.contributions[k].column, b.contributions[k].column);
        EXPECT_NEAR(b.contributions[k].weight, 3.0 * a.contributions[k].weight, 1e-9);
    }
}

TEST(Explain, BackgroundRowOrderIsIrrelevant) {
    const Matrix bg = random_background(5, 150, 6);
    std::vector<std::size_t> perm(150);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(6);
    rng.shuffle(perm);
    const Matrix shuffled = bg.select_rows(perm);
    const std::vector<double> w{1.0, -1.0, 0.5, 0.2, 0.0, 0.3};
    ExplainSettings st;
    st.seed = 8;
    const auto a = explain_instance(linear_scorer(w, 0.0), bg.row(7), Background(bg), st);
    const auto b = explain_instance(linear_scorer(w, 0.0), bg.row(7), Background(shuffled), st);
    ASSERT_EQ(a.contributions.size(), b.contributions.size());
    for (std::size_t k = 0; k < a.contributions.size(); ++k) {
        EXPECT_EQ(a.contributions[k].column, b.contributions[k].column);
        EXPECT_EQ(a.contributions[k].weight, b.contributions[k].weight);
    }
}

TEST(Explain, DeterministicAndValidated) {
    const Matrix bg = random_background(7, 100, 4);
    const std::vector<double> w{1.0, 2.0, -1.0, 0.5};
    ExplainSettings st;
    st.seed = 3;
    const auto a = explain_instance(linear_scorer(w, 0.0), bg.row(1), Background(bg), st);
    const auto b = explain_instance(linear_scorer(w, 0.0), bg.row(1), Background(bg), st);
    EXPECT_EQ(a.intercept, b.intercept);
    EXPECT_EQ(a.contributions.size(), 4u);  // K capped at the column count
    st.K = 0;
    EXPECT_THROW(explain_instance(linear_scorer(w, 0.0), bg.row(1), Background(bg), st), ValidationError);
    st.K = 2;
    st.n_samples = 49;
    EXPECT_THROW(explain_instance(linear_scorer(w, 0.0), bg.row(1), Background(bg), st), ValidationError);
}

TEST(Explain, ManyMatchesSingleCallsWithDerivedSeeds) {
    const auto data = ft_test::biased_data(0.0, 0.5, 0.3, 0.35, 600, 4);
    ModelSpec spec;
    spec.kind = ModelKind::LogisticRegression;
    const auto model = fit(spec, data.design);
    ExplainSettings st;
    st.K = 3;
    st.n_samples = 200;
    st.seed = 21;
    const std::vector<std::size_t> idx{4, 9, 17};
    const auto many = explain_many(model, data.design.X, idx, data.design.X, st, 2);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        ExplainSettings one = st;
        one.seed = derive_seed(st.seed, 0, idx[k]);
        const auto ex = explain_instance(model, data.design.X.row(idx[k]), data.design.X, one, idx[k]);
        EXPECT_EQ(many[k].instance_index, idx[k]);
        EXPECT_EQ(many[k].intercept, ex.intercept);
    }
}

TEST(Aggregate, SingleExplanationIsItsOwnProfile) {
    Explanation ex{0, {{2, 0.5}, {0, -0.25}}, 0.1, 0.9};
    const std::vector<Outcome> o{Outcome::TP};
    const auto profiles = aggregate({ex}, o, 3);
    ASSERT_EQ(profiles.size(), 4u);
    const auto& tp = profiles[0];
    EXPECT_EQ(tp.group, Outcome::TP);
    EXPECT_EQ(tp.instances, 1u);
    EXPECT_EQ(tp.mean_contribution, (std::vector<double>{-0.25, 0.0, 0.5}));
    EXPECT_EQ(tp.frequency, (std::vector<double>{1.0, 0.0, 1.0}));
    for (std::size_t g = 1; g < 4; ++g) EXPECT_TRUE(profiles[g].empty());
}

TEST(Aggregate, OppositeContributionsCancel) {
    Explanation a{0, {{1, 0.7}}, 0.0, 1.0}, b{1, {{1, -0.7}, {0, 0.2}}, 0.0, 1.0};
    const std::vector<Outcome> o{Outcome::TN, Outcome::TN};
    const auto tn = aggregate({a, b}, o, 2)[1];
    EXPECT_EQ(tn.mean_contribution[1], 0.0);
    EXPECT_DOUBLE_EQ(tn.mean_contribution[0], 0.1);
    EXPECT_DOUBLE_EQ(tn.frequency[0], 0.5);
    EXPECT_DOUBLE_EQ(tn.frequency[1], 1.0);
}

TEST(Aggregate, EmptyGroupGetsMarkerRow) {
    Explanation ex{0, {{0, 0.3}}, 0.0, 1.0};
    const std::vector<Outcome> o{Outcome::FN};
    const auto table = profiles_table(aggregate({ex}, o, 1), {"c0"});
    const auto rows = csv::parse(table.text());
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[1], (csv::Row{"TP", "0", "(empty)", "NA", "NA"}));
    EXPECT_EQ(rows[4][0], "FN");
    EXPECT_EQ(rows[4][2], "c0");
    EXPECT_THROW(aggregate({ex}, std::vector<Outcome>{}, 1), DataError);
}

TEST(Aggregate, DeterminingColumnTopsTheTruePositiveProfile) {
    // the label is a copy of column 0; everything else is noise
    Rng rng(9);
    const std::size_t n = 400, d = 5;
    DesignMatrix dm{{"key", "a", "b", "c", "e"}, Matrix(n, d), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        dm.y[i] = rng.uniform() < 0.4;
        dm.X(i, 0) = dm.y[i];
        for (std::size_t j = 1; j < d; ++j) dm.X(i, j) = rng.normal();
    }
    ModelSpec spec;
    spec.kind = ModelKind::LogisticRegression;
    const auto model = fit(spec, dm);
    const auto pred = apply_threshold(predict_proba(model, dm.X), 0.5);
    std::vector<std::size_t> idx;
    std::vector<Outcome> outcomes;
    for (std::size_t i = 0; i < 60; ++i) {
        idx.push_back(i);
        outcomes.push_back(outcome_of(dm.y[i], pred[i]));
    }
    ExplainSettings st;
    st.K = 3;
    st.n_samples = 500;
    const auto profiles = aggregate(explain_many(model, dm.X, idx, dm.X, st), outcomes, d);
    const auto& tp = profiles[0];
    ASSERT_FALSE(tp.empty());
    const auto top = std::max_element(tp.mean_contribution.begin(), tp.mean_contribution.end(),
                                      [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_EQ(top - tp.mean_contribution.begin(), 0);
    EXPECT_GT(tp.mean_contribution[0], 0.0);
}
