#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairtriage;

namespace {

std::vector<int> labels(std::size_t pos, std::size_t neg) {
    std::vector<int> y(pos + neg, 0);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(pos), 1);
    return y;
}

// fraction of (positive, negative) pairs ordered correctly, ties count half
double concordance(const std::vector<int>& y, const std::vector<double>& s) {
    double good = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1.0;
                good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return good / pairs;
}

DesignMatrix small_design(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    DesignMatrix d{{"a", "b"}, Matrix(n, 2), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.X(i, 0) = rng.normal();
        d.X(i, 1) = rng.normal();
        d.y[i] = rng.uniform() < sigmoid(1.5 * d.X(i, 0) - d.X(i, 1)) ? 1 : 0;
    }
    return d;
}

}  // namespace

TEST(Folds, ThreeSevenSplitIsExact) {
    const auto y = labels(30, 70);
    const auto plan = stratified_folds(y, 10, 4);
    for (int f = 0; f < 10; ++f) {
        const auto m = plan.members(f);
        ASSERT_EQ(m.size(), 10u);
        std::size_t pos = 0;
        for (auto i : m) pos += y[i];
        EXPECT_EQ(pos, 3u);
    }
}

TEST(Folds, UnevenClassesStayBalanced) {
    const auto y = labels(31, 101);
    const auto plan = stratified_folds(y, 10, 9);
    std::size_t lo = 1000, hi = 0, total = 0;
    for (int f = 0; f < 10; ++f) {
        const auto m = plan.members(f);
        std::size_t pos = 0;
        for (auto i : m) pos += y[i];
        EXPECT_TRUE(pos == 3 || pos == 4);
        lo = std::min(lo, m.size());
        hi = std::max(hi, m.size());
        total += m.size();
        EXPECT_EQ(plan.complement(f).size() + m.size(), y.size());
    }
    EXPECT_EQ(total, y.size());
    EXPECT_LE(hi - lo, 1u);
}

TEST(Folds, SeedControlsAssignment) {
    const auto y = labels(40, 60);
    EXPECT_EQ(stratified_folds(y, 5, 1).assignments, stratified_folds(y, 5, 1).assignments);
    EXPECT_NE(stratified_folds(y, 5, 1).assignments, stratified_folds(y, 5, 2).assignments);
}

TEST(Folds, RejectsTooFewRecords) {
    EXPECT_THROW(stratified_folds(labels(3, 50), 10, 0), DataError);
    EXPECT_THROW(stratified_folds(labels(30, 50), 1, 0), ValidationError);
}

TEST(Holdout, StratifiedFractions) {
    const auto y = labels(100, 300);
    const auto s = stratified_split(y, 0.3, 5);
    EXPECT_EQ(s.test.size(), 120u);
    std::size_t pos = 0;
    for (auto i : s.test) pos += y[i];
    EXPECT_EQ(pos, 30u);
    EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    EXPECT_THROW(stratified_split(y, 1.0, 5), ValidationError);
}

TEST(Confusion, WorkedExample) {
    const std::vector<int> y{1, 1, 1, 0, 0, 0, 0, 1};
    const std::vector<int> p{1, 0, 1, 1, 0, 0, 0, 0};
    const auto c = confusion(y, p);
    EXPECT_EQ(c, (ConfusionCounts{2, 1, 3, 2}));
    EXPECT_DOUBLE_EQ(c.recall(), 0.5);
    EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.fnr(), 0.5);
    EXPECT_DOUBLE_EQ(c.fpr(), 0.25);
    EXPECT_DOUBLE_EQ(c.accuracy(), 5.0 / 8.0);
    EXPECT_DOUBLE_EQ(c.f1(), 4.0 / 7.0);
}

TEST(Confusion, EmptyDenominatorsAreZero) {
    const auto c = confusion(std::vector<int>{0, 0}, std::vector<int>{0, 0});
    EXPECT_EQ(c.recall(), 0.0);
    EXPECT_EQ(c.precision(), 0.0);
    EXPECT_EQ(c.f1(), 0.0);
    EXPECT_THROW(confusion(std::vector<int>{0}, std::vector<int>{0, 1}), DataError);
}

TEST(Threshold, InclusiveAtBoundary) {
    EXPECT_EQ(apply_threshold(std::vector<double>{0.2, 0.5, 0.7}, 0.5), (std::vector<int>{0, 1, 1}));
}

TEST(Auc, SmallExample) {
    const std::vector<int> y{1, 0, 1, 0};
    const std::vector<double> s{0.9, 0.8, 0.4, 0.3};
    EXPECT_DOUBLE_EQ(auc(roc_points(y, s)), 0.75);
}

TEST(Auc, TiedScoresMatchReference) {
    const std::vector<int> y{0, 1, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0};
    const std::vector<double> s{0.0, 1.0, 0.7, 0.2, 0.4, 1.0, 0.9, 0.8, 0.4, 0.5, 0.7, 0.1, 0.6, 0.3, 0.9, 0.1};
    EXPECT_NEAR(auc(roc_points(y, s)), 0.7166666666666667, 1e-12);
}

TEST(Auc, ConstantScoresGiveDiagonal) {
    const std::vector<int> y{1, 0, 0, 1, 0};
    const auto roc = roc_points(y, std::vector<double>(5, 0.3));
    ASSERT_EQ(roc.points.size(), 2u);
    EXPECT_EQ(roc.points[0].x, 0.0);
    EXPECT_EQ(roc.points[0].y, 0.0);
    EXPECT_EQ(roc.points[1].x, 1.0);
    EXPECT_EQ(roc.points[1].y, 1.0);
    EXPECT_DOUBLE_EQ(auc(roc), 0.5);
}

TEST(Auc, EqualsPairwiseConcordance) {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<int> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform() < 0.4 ? 1 : 0;
            s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // plenty of ties
        }
        y[0] = 1;
        y[1] = 0;
        ASSERT_NEAR(auc(roc_points(y, s)), concordance(y, s), 1e-12) << "case " << t;
    }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
    Rng rng(78);
    std::vector<int> y(300);
    std::vector<double> s(300), t(300);
    for (std::size_t i = 0; i < 300; ++i) {
        y[i] = rng.uniform() < 0.3 ? 1 : 0;
        s[i] = rng.uniform() + 0.3 * y[i];
        t[i] = std::exp(3.0 * s[i]) - 7.0;
    }
    EXPECT_DOUBLE_EQ(auc(roc_points(y, s)), auc(roc_points(y, t)));
}

TEST(Auc, CurveShape) {
    Rng rng(79);
    std::vector<int> y(100);
    std::vector<double> s(100);
    for (std::size_t i = 0; i < 100; ++i) {
        y[i] = i % 3 == 0;
        s[i] = rng.uniform();
    }
    const auto roc = roc_points(y, s);
    EXPECT_TRUE(std::isinf(roc.points.front().threshold));
    EXPECT_EQ(roc.points.back().x, 1.0);
    EXPECT_EQ(roc.points.back().y, 1.0);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
        EXPECT_LT(roc.points[k].threshold, roc.points[k - 1].threshold);
        EXPECT_GE(roc.points[k].x, roc.points[k - 1].x);
        EXPECT_GE(roc.points[k].y, roc.points[k - 1].y);
    }
    EXPECT_THROW(roc_points(std::vector<int>(4, 1), std::vector<double>(4, 0.1)), DataError);
}

TEST(Auc, YoudenPoint) {
    const std::vector<int> y{1, 1, 0, 1, 0, 0};
    const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.2, 0.1};
    const auto p = optimal_point(roc_points(y, s));
    EXPECT_DOUBLE_EQ(p.tpr, 1.0);
    EXPECT_DOUBLE_EQ(p.fpr, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.threshold, 0.6);
}

TEST(F1Max, MatchesBruteForce) {
    Rng rng(80);
    for (int t = 0; t < 50; ++t) {
        std::vector<int> y(60);
        std::vector<double> s(60);
        for (std::size_t i = 0; i < 60; ++i) {
            y[i] = rng.uniform() < 0.35 ? 1 : 0;
            s[i] = std::round((rng.uniform() + 0.4 * y[i]) * 20.0) / 20.0;
        }
        y[0] = 1;
        y[1] = 0;
        double best = -1.0, best_t = 0.0;
        std::vector<double> cand = s;
        std::sort(cand.begin(), cand.end());
        for (double c : cand) {
            const double f = confusion(y, apply_threshold(s, c)).f1();
            if (f > best) best = f, best_t = c;  // ascending: first hit is the smallest threshold
        }
        const double chosen = select_threshold(y, s, ThresholdPolicy::f1_max());
        EXPECT_DOUBLE_EQ(chosen, best_t);
        EXPECT_DOUBLE_EQ(confusion(y, apply_threshold(s, chosen)).f1(), best);
    }
}

TEST(F1Max, SeparatedScoresPickLowestPositive) {
    const std::vector<int> y{0, 0, 0, 1, 1};
    const std::vector<double> s{0.1, 0.2, 0.3, 0.7, 0.9};
    EXPECT_DOUBLE_EQ(select_threshold(y, s, ThresholdPolicy::f1_max()), 0.7);
    EXPECT_DOUBLE_EQ(select_threshold(y, s, ThresholdPolicy::fixed(0.42)), 0.42);
}

TEST(F1Max, RecallNonIncreasingInThreshold) {
    Rng rng(81);
    std::vector<int> y(200);
    std::vector<double> s(200);
    for (std::size_t i = 0; i < 200; ++i) {
        y[i] = rng.uniform() < 0.3;
        s[i] = rng.uniform();
    }
    double prev = 2.0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const double r = confusion(y, apply_threshold(s, t)).recall();
        EXPECT_LE(r, prev);
        prev = r;
    }
}

TEST(Policy, Parsing) {
    EXPECT_EQ(parse_threshold_policy("f1_max").type, ThresholdPolicy::Type::F1Max);
    const auto p = parse_threshold_policy("fixed(0.25)");
    EXPECT_EQ(p.type, ThresholdPolicy::Type::Fixed);
    EXPECT_DOUBLE_EQ(p.value, 0.25);
    EXPECT_THROW(parse_threshold_policy("youden"), ValidationError);
}

TEST(CrossValidation, ProducesOneValuePerFoldAndRepetition) {
    const auto d = small_design(3, 200);
    ModelSpec spec;
    spec.kind = ModelKind::LogisticRegression;
    CvSettings cv;
    cv.base_seed = 17;
    const auto s = cross_validate(spec, d, cv);
    EXPECT_EQ(s.auc.values.size(), 300u);
    EXPECT_EQ(s.recall.values.size(), 300u);
    EXPECT_EQ(s.precision.values.size(), 300u);
    EXPECT_GT(s.auc.mean(), 0.7);
    const auto again = cross_validate(spec, d, cv);
    EXPECT_EQ(s.auc.values, again.auc.values);
    cv.workers = 1;
    EXPECT_EQ(cross_validate(spec, d, cv).auc.values, s.auc.values);
}

TEST(CrossValidation, DummyHasZeroRecallSpread) {
    const auto d = small_design(4, 150);
    ModelSpec spec;
    spec.kind = ModelKind::Dummy;
    CvSettings cv;
    cv.k = 5;
    cv.repetitions = 4;
    const auto s = cross_validate(spec, d, cv);
    EXPECT_EQ(s.recall.std(), 0.0);
    EXPECT_DOUBLE_EQ(s.auc.mean(), 0.5);
}

TEST(CrossValidation, MetricsTableLayout) {
    MetricSummary s;
    s.model = "m";
    s.auc.values = {0.7, 0.9};
    s.recall.values = {0.5, 0.5};
    s.precision.values = {0.2, 0.4};
    const auto t = metrics_table({s});
    EXPECT_EQ(t.text().substr(0, t.text().find('\n')), "model,metric,mean,std,n_values");
    EXPECT_NE(t.text().find("m,auc,0.8,"), std::string::npos);
}
