#ifndef FAIRTRIAGE_FAIRNESS_HPP
#define FAIRTRIAGE_FAIRNESS_HPP

// ------------------------------------------------------------
// group-wise error rates and the two-proportion Z-test audit
// ------------------------------------------------------------

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "csv.hpp"
#include "evaluation.hpp"
#include "preprocess.hpp"

namespace fairtriage {

struct CategoryStats {
    std::string category;
    std::size_t n = 0;          // records in the category
    std::size_t positives = 0;  // actual positives (the FNR denominator)
    ConfusionCounts counts;
    std::optional<double> fnr;  // nullopt when the category has no positives
    std::optional<double> fpr;  // nullopt when the category has no negatives
    double accuracy = 0.0;

    double correct_pct() const { return 100.0 * accuracy; }
    double misclassified_pct() const { return 100.0 - correct_pct(); }
};

struct GroupStats {
    std::string feature;
    std::vector<CategoryStats> categories;  // in grouping category order
};

inline GroupStats group_rates(std::span<const int> y, std::span<const int> y_hat, const GroupAssignments& groups,
                              std::string_view feature) {
    const Grouping& g = groups.at(feature);
    if (y.size() != y_hat.size() || y.size() != g.codes.size())
        throw DataError("group_rates: labels, predictions and groups differ in length");
    GroupStats out;
    out.feature = std::string(feature);
    out.categories.resize(g.categories.size());
    for (std::size_t c = 0; c < g.categories.size(); ++c) out.categories[c].category = g.categories[c];
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto& cc = out.categories[static_cast<std::size_t>(g.codes[i])].counts;
        if (y[i]) {
            (y_hat[i] ? cc.tp : cc.fn)++;
        } else {
            (y_hat[i] ? cc.fp : cc.tn)++;
        }
    }
    for (auto& c : out.categories) {
        c.n = c.counts.n();
        c.positives = c.counts.tp + c.counts.fn;
        if (c.positives) c.fnr = c.counts.fnr();
        if (c.counts.fp + c.counts.tn) c.fpr = c.counts.fpr();
        c.accuracy = c.counts.accuracy();
    }
    return out;
}

// Standard normal CDF from the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct ZTestResult {
    double p1 = 0.0, p2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    double z_abs = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

// Unpooled two-sample test for proportions:
//   |Z| = |p1 - p2| / sqrt(p1 (1 - p1) / n1 + p2 (1 - p2) / n2)
//   p   = 2 (1 - Phi(|Z|))
// With zero variance (both proportions in {0, 1}) the result is |Z| = 0,
// p = 1 when p1 = p2, and |Z| = inf, p = 0 otherwise.
inline ZTestResult two_proportion_ztest(double p1, std::size_t n1, double p2, std::size_t n2, double alpha = 0.05) {
    if (n1 < 1 || n2 < 1) throw ValidationError("ztest: sample sizes must be at least 1");
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) throw ValidationError("ztest: proportions outside [0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("ztest: alpha outside (0, 1)");
    ZTestResult r{p1, p2, n1, n2, 0.0, 1.0, false};
    const double var = p1 * (1.0 - p1) / static_cast<double>(n1) + p2 * (1.0 - p2) / static_cast<double>(n2);
    if (var <= 0.0) {
        if (p1 != p2) {
            r.z_abs = std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
    } else {
        r.z_abs = std::abs(p1 - p2) / std::sqrt(var);
        r.p_value = std::erfc(r.z_abs / std::sqrt(2.0));
    }
    r.significant = r.p_value < alpha;
    return r;
}

// "< 0.001" below a thousandth, otherwise three decimals
inline std::string format_p_value(double p) {
    if (p < 0.001) return "< 0.001";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p);
    return buf;
}

struct PairTest {
    std::string feature;
    std::string group_a, group_b;
    ZTestResult test;
};

struct FeatureAudit {
    GroupStats stats;
    std::vector<std::string> excluded;  // too small, or without positives
    std::vector<PairTest> pairs;
    bool biased = false;
};

struct BiasReport {
    double alpha = 0.05;
    double min_category_fraction = 0.01;
    std::vector<FeatureAudit> features;

    const FeatureAudit& at(std::string_view feature) const {
        for (const auto& f : features)
            if (f.stats.feature == feature) return f;
        throw ValidationError("bias report has no feature '" + std::string(feature) + "'");
    }
};

struct AuditSettings {
    std::vector<std::string> features;
    double alpha = 0.05;
    double min_category_fraction = 0.01;
};

// Pairwise Z-tests on FNR between every two retained categories of each
// feature; n in each test is the category's count of actual positives.
inline BiasReport audit(std::span<const int> y, std::span<const int> y_hat, const GroupAssignments& groups,
                        const AuditSettings& settings) {
    if (!(settings.alpha > 0.0 && settings.alpha < 1.0)) throw ValidationError("audit: alpha outside (0, 1)");
    if (!(settings.min_category_fraction >= 0.0 && settings.min_category_fraction < 1.0))
        throw ValidationError("audit: min_category_fraction outside [0, 1)");
    BiasReport report{settings.alpha, settings.min_category_fraction, {}};
    const double total = static_cast<double>(y.size());
    for (const auto& feature : settings.features) {
        FeatureAudit fa;
        fa.stats = group_rates(y, y_hat, groups, feature);
        std::vector<const CategoryStats*> kept;
        for (const auto& c : fa.stats.categories) {
            if (c.n == 0) continue;
            if (static_cast<double>(c.n) < settings.min_category_fraction * total || !c.fnr)
                fa.excluded.push_back(c.category);
            else
                kept.push_back(&c);
        }
        for (std::size_t a = 0; a < kept.size(); ++a) {
            for (std::size_t b = a + 1; b < kept.size(); ++b) {
                const auto t = two_proportion_ztest(*kept[a]->fnr, kept[a]->positives, *kept[b]->fnr,
                                                    kept[b]->positives, settings.alpha);
                fa.biased = fa.biased || t.significant;
                fa.pairs.push_back({feature, kept[a]->category, kept[b]->category, t});
            }
        }
        report.features.push_back(std::move(fa));
    }
    return report;
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline csv::Table fnr_table(const BiasReport& report, const std::string& model) {
    csv::Table table({"model", "feature", "category", "n", "positives", "fnr", "fpr", "accuracy", "correct_pct",
                      "misclassified_pct"});
    for (const auto& f : report.features)
        for (const auto& c : f.stats.categories)
            table.add({model, f.stats.feature, c.category, std::to_string(c.n), std::to_string(c.positives),
                       optional_cell(c.fnr), optional_cell(c.fpr), format_double(c.accuracy),
                       format_double(c.correct_pct()), format_double(c.misclassified_pct())});
    return table;
}

inline csv::Table ztest_table(const BiasReport& report, const std::string& model) {
    csv::Table table({"model", "feature", "group_a", "group_b", "p1", "n1", "p2", "n2", "z", "p_value", "significant"});
    for (const auto& f : report.features)
        for (const auto& p : f.pairs)
            table.add({model, p.feature, p.group_a, p.group_b, format_double(p.test.p1), std::to_string(p.test.n1),
                       format_double(p.test.p2), std::to_string(p.test.n2), format_double(p.test.z_abs),
                       format_double(p.test.p_value), p.test.significant ? "1" : "0"});
    return table;
}

}  // namespace fairtriage

#endif
