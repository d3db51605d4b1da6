#ifndef FAIRTRIAGE_EVALUATION_HPP
#define FAIRTRIAGE_EVALUATION_HPP

// ------------------------------------------------------------
// confusion metrics, ROC / PR curves, threshold selection and
// repeated stratified cross-validation
// ------------------------------------------------------------

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace fairtriage {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t n() const noexcept { return tp + fp + tn + fn; }

    // 0 when the denominator is empty
    double recall() const noexcept { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
    double precision() const noexcept { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
    double fnr() const noexcept { return tp + fn ? static_cast<double>(fn) / static_cast<double>(tp + fn) : 0.0; }
    double fpr() const noexcept { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }
    double accuracy() const noexcept { return n() ? static_cast<double>(tp + tn) / static_cast<double>(n()) : 0.0; }
    double f1() const noexcept {
        const double p = precision(), r = recall();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(std::span<const int> y, std::span<const int> y_hat) {
    if (y.size() != y_hat.size())
        throw DataError("confusion: label vectors differ in length (" + std::to_string(y.size()) + " vs " +
                        std::to_string(y_hat.size()) + ")");
    ConfusionCounts c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) {
            (y_hat[i] ? c.tp : c.fn)++;
        } else {
            (y_hat[i] ? c.fp : c.tn)++;
        }
    }
    return c;
}

// positive iff score >= threshold
inline std::vector<int> apply_threshold(std::span<const double> scores, double threshold) {
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
    return out;
}

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double threshold = 0.0;
    double f1 = 0.0;  // PR curves only
};

enum class CurveKind { Roc, Pr };

// ROC: x = FPR, y = TPR, starting at (0, 0) with threshold +inf.
// PR:  x = recall, y = precision, one point per distinct score.
// Thresholds strictly decrease along the list.
struct Curve {
    CurveKind kind = CurveKind::Roc;
    std::vector<CurvePoint> points;
};

namespace detail {

inline void require_both_classes(std::span<const int> y, std::span<const double> scores, const char* op) {
    if (y.size() != scores.size()) throw DataError(std::string(op) + ": labels and scores differ in length");
    std::size_t pos = 0;
    for (int v : y) pos += v != 0;
    if (pos == 0 || pos == y.size()) throw DataError(std::string(op) + ": both classes must be present");
}

// Cumulative (tp, fp) after admitting every record with score >= each distinct
// score, visited in decreasing order.
struct Sweep {
    std::vector<double> thresholds;
    std::vector<std::size_t> tp, fp;
    std::size_t positives = 0, negatives = 0;
};

inline Sweep sweep(std::span<const int> y, std::span<const double> scores) {
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    Sweep s;
    for (int v : y) (v ? s.positives : s.negatives)++;
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        (y[i] ? tp : fp)++;
        if (k + 1 == order.size() || scores[order[k + 1]] != scores[i]) {
            s.thresholds.push_back(scores[i]);
            s.tp.push_back(tp);
            s.fp.push_back(fp);
        }
    }
    return s;
}

}  // namespace detail

inline Curve roc_points(std::span<const int> y, std::span<const double> scores) {
    detail::require_both_classes(y, scores, "roc_points");
    const auto s = detail::sweep(y, scores);
    Curve c{CurveKind::Roc, {}};
    c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0});
    const auto P = static_cast<double>(s.positives), N = static_cast<double>(s.negatives);
    for (std::size_t k = 0; k < s.thresholds.size(); ++k)
        c.points.push_back({static_cast<double>(s.fp[k]) / N, static_cast<double>(s.tp[k]) / P, s.thresholds[k], 0.0});
    return c;
}

inline double auc(const Curve& roc) {
    double area = 0.0;
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
        const auto& a = roc.points[k - 1];
        const auto& b = roc.points[k];
        area += (b.x - a.x) * (a.y + b.y) * 0.5;
    }
    return area;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

// Maximizes Youden's J = TPR - FPR; ties go to the lowest FPR.
inline RocPoint optimal_point(const Curve& roc) {
    if (roc.points.empty()) throw DataError("optimal_point: empty curve");
    const CurvePoint* best = &roc.points.front();
    for (const auto& p : roc.points) {
        const double j = p.y - p.x, jb = best->y - best->x;
        if (j > jb || (j == jb && p.x < best->x)) best = &p;
    }
    return {best->x, best->y, best->threshold};
}

inline Curve pr_threshold_scan(std::span<const int> y, std::span<const double> scores) {
    detail::require_both_classes(y, scores, "pr_threshold_scan");
    const auto s = detail::sweep(y, scores);
    Curve c{CurveKind::Pr, {}};
    for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
        ConfusionCounts cc{s.tp[k], s.fp[k], s.negatives - s.fp[k], s.positives - s.tp[k]};
        c.points.push_back({cc.recall(), cc.precision(), s.thresholds[k], cc.f1()});
    }
    return c;
}

struct ThresholdPolicy {
    enum class Type { F1Max, Fixed };
    Type type = Type::F1Max;
    double value = 0.5;

    static ThresholdPolicy f1_max() { return {Type::F1Max, 0.0}; }
    static ThresholdPolicy fixed(double t) { return {Type::Fixed, t}; }

    std::string describe() const { return type == Type::F1Max ? "f1_max" : "fixed(" + format_double(value) + ")"; }
};

// Parses "f1_max" or "fixed(<t>)".
inline ThresholdPolicy parse_threshold_policy(std::string_view s) {
    if (s == "f1_max") return ThresholdPolicy::f1_max();
    if (s.starts_with("fixed(") && s.ends_with(")"))
        return ThresholdPolicy::fixed(parse_double(s.substr(6, s.size() - 7), "threshold policy"));
    throw ValidationError("threshold policy must be f1_max or fixed(t), got '" + std::string(s) + "'");
}

// f1_max: largest F1 on the PR curve, ties to the smallest threshold.
inline double select_threshold(const Curve& pr, const ThresholdPolicy& policy) {
    if (policy.type == ThresholdPolicy::Type::Fixed) return policy.value;
    if (pr.points.empty()) throw DataError("select_threshold: empty curve");
    const CurvePoint* best = &pr.points.front();
    for (const auto& p : pr.points)
        if (p.f1 > best->f1 || (p.f1 == best->f1 && p.threshold < best->threshold)) best = &p;
    return best->threshold;
}

inline double select_threshold(std::span<const int> y, std::span<const double> scores, const ThresholdPolicy& policy) {
    if (policy.type == ThresholdPolicy::Type::Fixed) return policy.value;
    return select_threshold(pr_threshold_scan(y, scores), policy);
}

// ------------------------------------------------------------
// stratified folds
// ------------------------------------------------------------

struct FoldPlan {
    std::size_t k = 0;
    std::vector<int> assignments;
    std::uint64_t seed = 0;

    std::vector<std::size_t> members(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> complement(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }
};

// Each class is shuffled (positives first, then negatives, from one RNG) and
// dealt round-robin. Negatives continue the deal where positives stopped, so
// fold sizes also differ by at most one.
inline FoldPlan stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("stratified_folds: k must be at least 2");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k)
        throw DataError("stratified_folds: class sizes (" + std::to_string(pos.size()) + " positive, " +
                        std::to_string(neg.size()) + " negative) smaller than k = " + std::to_string(k));
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    FoldPlan plan{k, std::vector<int>(y.size(), -1), seed};
    for (std::size_t r = 0; r < pos.size(); ++r) plan.assignments[pos[r]] = static_cast<int>(r % k);
    const std::size_t offset = pos.size() % k;
    for (std::size_t r = 0; r < neg.size(); ++r) plan.assignments[neg[r]] = static_cast<int>((offset + r) % k);
    return plan;
}

struct Split {
    std::vector<std::size_t> train, test;
};

// Each class shuffled by seed; the first round(fraction * class size) records
// of each go to the test part. Both parts keep ascending record order.
inline Split stratified_split(std::span<const int> y, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("holdout: test_fraction outside (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<char> in_test(y.size(), 0);
    for (auto* cls : {&pos, &neg}) {
        const auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(cls->size())));
        for (std::size_t r = 0; r < take; ++r) in_test[(*cls)[r]] = 1;
    }
    Split s;
    for (std::size_t i = 0; i < y.size(); ++i) (in_test[i] ? s.test : s.train).push_back(i);
    if (s.train.empty() || s.test.empty()) throw DataError("holdout: split leaves an empty part");
    return s;
}

// ------------------------------------------------------------
// cross-validation
// ------------------------------------------------------------

struct MetricValues {
    std::vector<double> values;  // (repetition, fold) order

    double mean() const { return fairtriage::mean(values); }
    double std() const { return sample_std(values); }
};

struct MetricSummary {
    std::string model;
    MetricValues auc, recall, precision;
    std::vector<double> thresholds;
    std::size_t k = 0, repetitions = 0;
};

struct CvSettings {
    std::size_t k = 10;
    std::size_t repetitions = 30;
    std::uint64_t base_seed = 0;
    ThresholdPolicy policy = ThresholdPolicy::f1_max();
    unsigned workers = 0;  // 0: worker_count()
};

// Repetition r uses fold seed base_seed + r and model seed base_seed + r.
// Thresholds are tuned on training-fold scores; the held-out fold is only
// scored.
inline MetricSummary cross_validate(const ModelSpec& spec, const DesignMatrix& data, const CvSettings& cv) {
    if (cv.k < 2) throw ValidationError("cross_validate: k must be at least 2");
    if (cv.repetitions < 1) throw ValidationError("cross_validate: repetitions must be at least 1");

    std::vector<FoldPlan> plans;
    for (std::size_t r = 0; r < cv.repetitions; ++r) plans.push_back(stratified_folds(data.y, cv.k, cv.base_seed + r));

    struct Result {
        double auc = 0.0, recall = 0.0, precision = 0.0, threshold = 0.0;
    };
    std::vector<Result> results(cv.k * cv.repetitions);
    parallel_for(
        results.size(),
        [&](std::size_t job) {
            const std::size_t r = job / cv.k;
            const int fold = static_cast<int>(job % cv.k);
            try {
                const auto train_idx = plans[r].complement(fold);
                const auto test_idx = plans[r].members(fold);
                const auto train = data.select_rows(train_idx);
                const auto test = data.select_rows(test_idx);
                ModelSpec s = spec;
                s.seed = cv.base_seed + r;
                const auto model = fit(s, train);
                const auto train_scores = predict_proba(model, train.X);
                const double t = select_threshold(train.y, train_scores, cv.policy);
                const auto scores = predict_proba(model, test.X);
                const auto cc = confusion(test.y, apply_threshold(scores, t));
                results[job] = {auc(roc_points(test.y, scores)), cc.recall(), cc.precision(), t};
            } catch (const Error& e) {
                throw DataError("cross_validate (repetition " + std::to_string(r) + ", fold " + std::to_string(fold) +
                                "): " + e.what());
            }
        },
        cv.workers ? cv.workers : worker_count());

    MetricSummary summary;
    summary.model = spec.name();
    summary.k = cv.k;
    summary.repetitions = cv.repetitions;
    for (const auto& res : results) {
        summary.auc.values.push_back(res.auc);
        summary.recall.values.push_back(res.recall);
        summary.precision.values.push_back(res.precision);
        summary.thresholds.push_back(res.threshold);
    }
    return summary;
}

// ------------------------------------------------------------
// CSV writers
// ------------------------------------------------------------

inline void add_metric_rows(csv::Table& table, const MetricSummary& s) {
    auto add = [&](const char* name, const MetricValues& m) {
        table.add({s.model, name, format_double(m.mean()), format_double(m.std()), std::to_string(m.values.size())});
    };
    add("auc", s.auc);
    add("recall", s.recall);
    add("precision", s.precision);
}

inline csv::Table metrics_table(const std::vector<MetricSummary>& summaries) {
    csv::Table table({"model", "metric", "mean", "std", "n_values"});
    for (const auto& s : summaries) add_metric_rows(table, s);
    return table;
}

inline csv::Table curve_table(const std::string& model, const Curve& curve) {
    if (curve.kind == CurveKind::Roc) {
        csv::Table table({"model", "fpr", "tpr", "threshold"});
        for (const auto& p : curve.points)
            table.add({model, format_double(p.x), format_double(p.y), format_double(p.threshold)});
        return table;
    }
    csv::Table table({"model", "threshold", "precision", "recall", "f1"});
    for (const auto& p : curve.points)
        table.add({model, format_double(p.threshold), format_double(p.y), format_double(p.x), format_double(p.f1)});
    return table;
}

}  // namespace fairtriage

#endif
