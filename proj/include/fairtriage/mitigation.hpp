#ifndef FAIRTRIAGE_MITIGATION_HPP
#define FAIRTRIAGE_MITIGATION_HPP

// ------------------------------------------------------------
// bias mitigation: per-group threshold post-processing and the
// exponentiated-gradient reduction for FNR parity
// ------------------------------------------------------------

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "csv.hpp"
#include "models.hpp"
#include "preprocess.hpp"

namespace fairtriage {

// ------------------------------------------------------------
// soft group rates
// ------------------------------------------------------------

// Rates of a classifier that predicts positive with probability p_i;
// hard predictions are the special case p_i in {0, 1}.
struct SoftRates {
    std::string category;
    std::size_t n = 0, positives = 0;
    std::optional<double> fnr, fpr;
    double accuracy = 0.0;
};

inline std::vector<SoftRates> soft_group_rates(std::span<const int> y, std::span<const double> p, const Grouping& g) {
    if (y.size() != p.size() || y.size() != g.codes.size())
        throw DataError("group rates: labels, predictions and groups differ in length");
    const std::size_t C = g.categories.size();
    std::vector<double> miss(C, 0.0), false_alarm(C, 0.0), correct(C, 0.0);
    std::vector<SoftRates> out(C);
    for (std::size_t c = 0; c < C; ++c) out[c].category = g.categories[c];
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto c = static_cast<std::size_t>(g.codes[i]);
        ++out[c].n;
        if (y[i]) {
            ++out[c].positives;
            miss[c] += 1.0 - p[i];
            correct[c] += p[i];
        } else {
            false_alarm[c] += p[i];
            correct[c] += 1.0 - p[i];
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        auto& r = out[c];
        if (r.positives) r.fnr = miss[c] / static_cast<double>(r.positives);
        if (r.n > r.positives) r.fpr = false_alarm[c] / static_cast<double>(r.n - r.positives);
        if (r.n) r.accuracy = correct[c] / static_cast<double>(r.n);
    }
    return out;
}

// Largest pairwise |FNR_a - FNR_b| over categories with positives and with at
// least min_fraction of the records.
inline double max_fnr_gap(const std::vector<SoftRates>& rates, double min_fraction = 0.0) {
    std::size_t total = 0;
    for (const auto& r : rates) total += r.n;
    double lo = 1.0, hi = 0.0;
    bool any = false;
    for (const auto& r : rates) {
        if (!r.fnr || static_cast<double>(r.n) < min_fraction * static_cast<double>(total)) continue;
        lo = std::min(lo, *r.fnr);
        hi = std::max(hi, *r.fnr);
        any = true;
    }
    return any ? hi - lo : 0.0;
}

inline double soft_accuracy(std::span<const int> y, std::span<const double> p) {
    double correct = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += y[i] ? p[i] : 1.0 - p[i];
    return y.empty() ? 0.0 : correct / static_cast<double>(y.size());
}

// ------------------------------------------------------------
// threshold optimizer
// ------------------------------------------------------------

struct GroupThresholds {
    std::string feature;
    std::map<std::string, double> thresholds;
    double target_rate = 0.0;
    double achieved_gap = 0.0;
    double error_rate = 0.0;
};

struct ThresholdOptimizerSettings {
    double grid_step = 0.01;
    std::optional<double> gap_tolerance;  // default: grid_step
    double min_category_fraction = 0.0;
};

// Grid t_k = k * grid_step on [0, 1]. Candidate targets are every FNR some
// category reaches on the grid. For each target, every category takes the
// grid threshold whose FNR is closest to it (ties to the lower threshold).
// Gaps are compared up to gap_tolerance: among candidates whose max pairwise
// gap is within max(smallest gap, gap_tolerance), the winner has the lowest
// overall error, then the lowest gap, then the lowest threshold vector.
// Categories holding less than
// min_category_fraction of the records stay out of the gap and take their own
// error-minimizing threshold.
inline GroupThresholds fit_threshold_optimizer(std::span<const double> scores, std::span<const int> y,
                                               const Grouping& g, const ThresholdOptimizerSettings& settings) {
    const double grid_step = settings.grid_step;
    const double min_category_fraction = settings.min_category_fraction;
    if (!(grid_step > 0.0 && grid_step <= 0.5)) throw ValidationError("threshold optimizer: grid_step outside (0, 0.5]");
    if (scores.size() != y.size() || y.size() != g.codes.size())
        throw DataError("threshold optimizer: scores, labels and groups differ in length");

    const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
    std::vector<double> grid;
    for (std::size_t k = 0; k <= steps; ++k) grid.push_back(std::min(1.0, static_cast<double>(k) * grid_step));
    if (grid.back() < 1.0) grid.push_back(1.0);

    // categories present in the fitting data
    std::vector<std::size_t> cats;
    std::vector<std::size_t> size(g.categories.size(), 0), positives(g.categories.size(), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        ++size[static_cast<std::size_t>(g.codes[i])];
        positives[static_cast<std::size_t>(g.codes[i])] += y[i] != 0;
    }
    std::vector<char> constrained;
    for (std::size_t c = 0; c < g.categories.size(); ++c) {
        if (!size[c]) continue;
        const bool tiny = static_cast<double>(size[c]) < min_category_fraction * static_cast<double>(y.size());
        if (!positives[c] && !tiny)
            throw DataError("threshold optimizer: category '" + g.categories[c] + "' of '" + g.name +
                            "' has no actual positives");
        cats.push_back(c);
        constrained.push_back(tiny ? 0 : 1);
    }
    if (std::find(constrained.begin(), constrained.end(), 1) == constrained.end())
        throw DataError("threshold optimizer: no category to equalize");

    // fnr[c][k], errors[c][k]
    const std::size_t K = grid.size();
    std::vector<std::vector<double>> fnr(cats.size(), std::vector<double>(K));
    std::vector<std::vector<std::size_t>> errors(cats.size(), std::vector<std::size_t>(K));
    for (std::size_t a = 0; a < cats.size(); ++a) {
        for (std::size_t k = 0; k < K; ++k) {
            std::size_t fn = 0, fp = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (static_cast<std::size_t>(g.codes[i]) != cats[a]) continue;
                const bool pos = scores[i] >= grid[k];
                fn += y[i] && !pos;
                fp += !y[i] && pos;
            }
            fnr[a][k] = positives[cats[a]] ? static_cast<double>(fn) / static_cast<double>(positives[cats[a]]) : 0.0;
            errors[a][k] = fn + fp;
        }
    }

    std::vector<double> targets;
    for (std::size_t a = 0; a < cats.size(); ++a)
        if (constrained[a]) targets.insert(targets.end(), fnr[a].begin(), fnr[a].end());
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    struct Choice {
        double gap = 0.0;
        std::size_t errors = 0;
        std::vector<std::size_t> k;
        double target = 0.0;
    };
    std::vector<Choice> choices;
    for (double target : targets) {
        Choice ch{0.0, 0, std::vector<std::size_t>(cats.size()), target};
        double lo = 1.0, hi = 0.0;
        for (std::size_t a = 0; a < cats.size(); ++a) {
            std::size_t pick = 0;
            if (constrained[a]) {
                for (std::size_t k = 1; k < K; ++k)
                    if (std::abs(fnr[a][k] - target) < std::abs(fnr[a][pick] - target)) pick = k;
                lo = std::min(lo, fnr[a][pick]);
                hi = std::max(hi, fnr[a][pick]);
            } else {
                for (std::size_t k = 1; k < K; ++k)
                    if (errors[a][k] < errors[a][pick]) pick = k;
            }
            ch.k[a] = pick;
            ch.errors += errors[a][pick];
        }
        ch.gap = hi - lo;
        choices.push_back(std::move(ch));
    }
    double min_gap = 1.0;
    for (const auto& ch : choices) min_gap = std::min(min_gap, ch.gap);
    const double limit = std::max(min_gap, settings.gap_tolerance.value_or(grid_step)) + 1e-12;
    const Choice* best = nullptr;
    for (const auto& ch : choices) {
        if (ch.gap > limit) continue;
        if (!best || std::tie(ch.errors, ch.gap, ch.k) < std::tie(best->errors, best->gap, best->k)) best = &ch;
    }

    GroupThresholds out;
    out.feature = g.name;
    out.target_rate = best->target;
    out.achieved_gap = best->gap;
    out.error_rate = static_cast<double>(best->errors) / static_cast<double>(y.size());
    for (std::size_t a = 0; a < cats.size(); ++a) out.thresholds[g.categories[cats[a]]] = grid[best->k[a]];
    return out;
}

inline GroupThresholds fit_threshold_optimizer(std::span<const double> scores, std::span<const int> y,
                                               const Grouping& g, double grid_step = 0.01) {
    return fit_threshold_optimizer(scores, y, g, ThresholdOptimizerSettings{grid_step, std::nullopt, 0.0});
}

inline std::vector<int> apply_group_thresholds(std::span<const double> scores, const Grouping& g,
                                               const GroupThresholds& gt) {
    if (scores.size() != g.codes.size()) throw DataError("apply_group_thresholds: scores and groups differ in length");
    std::vector<double> by_code(g.categories.size(), 0.0);
    std::vector<char> known(g.categories.size(), 0);
    for (std::size_t c = 0; c < g.categories.size(); ++c) {
        auto it = gt.thresholds.find(g.categories[c]);
        if (it != gt.thresholds.end()) {
            by_code[c] = it->second;
            known[c] = 1;
        }
    }
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto c = static_cast<std::size_t>(g.codes[i]);
        if (!known[c])
            throw DataError("apply_group_thresholds: no threshold for category '" + g.categories[c] + "' of '" +
                            g.name + "'");
        out[i] = scores[i] >= by_code[c] ? 1 : 0;
    }
    return out;
}

// ------------------------------------------------------------
// exponentiated gradient
// ------------------------------------------------------------

// How the final member weights are chosen: the plain average of the T best
// responses, or the mixture over those members minimizing training error plus
// B times the worst constraint violation (a small linear program).
enum class EGWeighting { Uniform, BestMixture };

inline EGWeighting parse_eg_weighting(std::string_view s) {
    if (s == "uniform") return EGWeighting::Uniform;
    if (s == "best_mixture") return EGWeighting::BestMixture;
    throw ValidationError("eg: unknown weighting '" + std::string(s) + "'");
}

struct EGConfig {
    double epsilon = 0.02;
    int iterations = 50;
    double eta0 = 2.0;
    double bound = 100.0;
    double min_category_fraction = 0.0;  // smaller categories are left unconstrained
    EGWeighting weighting = EGWeighting::Uniform;

    void validate() const {
        if (!(epsilon >= 0.0)) throw ValidationError("eg: epsilon must be nonnegative");
        if (iterations < 1) throw ValidationError("eg: iterations must be at least 1");
        if (!(eta0 > 0.0)) throw ValidationError("eg: eta0 must be positive");
        if (!(bound > 0.0)) throw ValidationError("eg: B must be positive");
        if (!(min_category_fraction >= 0.0 && min_category_fraction < 1.0))
            throw ValidationError("eg: min_category_fraction outside [0, 1)");
    }
};

struct RandomizedClassifier {
    std::vector<FittedModel> members;
    std::vector<double> weights;
    std::vector<std::vector<double>> duals_history;  // lambda used for each best response
    std::vector<std::string> constraints;            // "<category>+" / "<category>-", one per dual entry
    std::vector<double> averaged_violation;          // max constraint value of the averaged play, per T
    double training_gap = 0.0;
    bool feasible = false;
};

// Probability that the randomized classifier labels each record positive,
// each member deciding at score >= 0.5.
inline std::vector<double> positive_probability(const RandomizedClassifier& rc, const Matrix& X) {
    std::vector<double> p(X.rows(), 0.0);
    for (std::size_t m = 0; m < rc.members.size(); ++m) {
        if (rc.weights[m] == 0.0) continue;
        const auto s = predict_proba(rc.members[m], X);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += rc.weights[m] * (s[i] >= 0.5 ? 1.0 : 0.0);
    }
    return p;
}

inline std::vector<double> predict_expected(const RandomizedClassifier& rc, const Matrix& X) {
    std::vector<double> out(X.rows(), 0.0);
    for (std::size_t m = 0; m < rc.members.size(); ++m) {
        if (rc.weights[m] == 0.0) continue;
        const auto s = predict_proba(rc.members[m], X);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += rc.weights[m] * s[i];
    }
    return out;
}

// One member per record, drawn by weight; label = member score >= 0.5.
inline std::vector<int> predict_sampled(const RandomizedClassifier& rc, const Matrix& X, std::uint64_t seed) {
    std::vector<std::vector<double>> scores;
    for (const auto& m : rc.members) scores.push_back(predict_proba(m, X));
    Rng rng(seed);
    std::vector<int> out(X.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = rc.members.size() - 1;
        for (std::size_t m = 0; m < rc.members.size(); ++m) {
            acc += rc.weights[m];
            if (u < acc) {
                pick = m;
                break;
            }
        }
        while (rc.weights[pick] == 0.0 && pick > 0) --pick;
        out[i] = scores[pick][i] >= 0.5 ? 1 : 0;
    }
    return out;
}

enum class PredictMode { ExpectedScore, Sampled };

inline std::vector<double> predict_randomized(const RandomizedClassifier& rc, const Matrix& X, PredictMode mode,
                                              std::uint64_t seed = 0) {
    if (mode == PredictMode::ExpectedScore) return predict_expected(rc, X);
    const auto labels = predict_sampled(rc, X, seed);
    return {labels.begin(), labels.end()};
}

namespace detail {

struct FnrConstraints {
    std::vector<std::size_t> cats;       // constrained category codes
    std::vector<std::size_t> positives;  // per constrained category
    std::size_t total_positives = 0;

    // gamma_{c+} = FNR_c - FNR_all - eps, gamma_{c-} = FNR_all - FNR_c - eps
    std::vector<double> values(std::span<const int> y, std::span<const double> p, const Grouping& g, double eps) const {
        std::vector<double> miss(g.categories.size(), 0.0);
        double miss_all = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!y[i]) continue;
            miss[static_cast<std::size_t>(g.codes[i])] += 1.0 - p[i];
            miss_all += 1.0 - p[i];
        }
        const double fnr_all = miss_all / static_cast<double>(total_positives);
        std::vector<double> out;
        for (std::size_t a = 0; a < cats.size(); ++a) {
            const double fnr = miss[cats[a]] / static_cast<double>(positives[a]);
            out.push_back(fnr - fnr_all - eps);
            out.push_back(fnr_all - fnr - eps);
        }
        return out;
    }
};


// Dense two-phase simplex with Bland's rule for
//   min c'x  s.t.  A x <= b (b >= 0),  sum(x[0..m_eq)) = 1,  x >= 0.
// Sized for a few dozen columns and a handful of rows.
inline std::vector<double> solve_simplex_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                                            const std::vector<double>& b, std::size_t m_eq) {
    const std::size_t nv = c.size(), nr = A.size();
    // columns: x (nv), slacks (nr), artificial (1), rhs
    const std::size_t cols = nv + nr + 2, rhs = cols - 1, art = nv + nr;
    const std::size_t rows = nr + 1;
    std::vector<std::vector<double>> T(rows, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(rows);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t j = 0; j < nv; ++j) T[r][j] = A[r][j];
        T[r][nv + r] = 1.0;
        T[r][rhs] = b[r];
        basis[r] = nv + r;
    }
    for (std::size_t j = 0; j < m_eq; ++j) T[nr][j] = 1.0;
    T[nr][art] = 1.0;
    T[nr][rhs] = 1.0;
    basis[nr] = art;

    constexpr double tol = 1e-12;
    auto pivot = [&](std::size_t pr, std::size_t pc) {
        const double d = T[pr][pc];
        for (auto& v : T[pr]) v /= d;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr || T[r][pc] == 0.0) continue;
            const double f = T[r][pc];
            for (std::size_t j = 0; j < cols; ++j) T[r][j] -= f * T[pr][j];
        }
        basis[pr] = pc;
    };
    auto optimize = [&](const std::vector<double>& cost, std::size_t allowed) {
        for (int guard = 0; guard < 10000; ++guard) {
            std::size_t enter = allowed;
            for (std::size_t j = 0; j < allowed; ++j) {
                double reduced = cost[j];
                for (std::size_t r = 0; r < rows; ++r) reduced -= cost[basis[r]] * T[r][j];
                if (reduced < -tol) {
                    enter = j;
                    break;
                }
            }
            if (enter == allowed) return;
            std::size_t leave = rows;
            double best = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                if (T[r][enter] <= tol) continue;
                const double ratio = T[r][rhs] / T[r][enter];
                if (leave == rows || ratio < best - tol || (ratio <= best + tol && basis[r] < basis[leave])) {
                    leave = r;
                    best = ratio;
                }
            }
            if (leave == rows) throw Error("simplex: unbounded program");
            pivot(leave, enter);
        }
        throw Error("simplex: iteration limit reached");
    };

    std::vector<double> phase1(cols - 1, 0.0);
    phase1[art] = 1.0;
    optimize(phase1, cols - 1);
    if (basis[nr] == art && T[nr][rhs] > 1e-9) throw Error("simplex: infeasible program");
    // drive a zero-level artificial out of the basis
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] != art) continue;
        for (std::size_t j = 0; j < art; ++j)
            if (std::abs(T[r][j]) > tol) {
                pivot(r, j);
                break;
            }
    }
    std::vector<double> phase2(cols - 1, 0.0);
    for (std::size_t j = 0; j < nv; ++j) phase2[j] = c[j];
    optimize(phase2, art);

    std::vector<double> x(nv, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        if (basis[r] < nv) x[basis[r]] = T[r][rhs];
    return x;
}

}  // namespace detail

// Saddle-point game for  min err(Q)  s.t.  |FNR_c(Q) - FNR(Q)| <= eps.
// Duals: lambda_k = B exp(theta_k) / (1 + sum exp(theta)), theta_0 = 0,
// theta += eta_t * gamma(h_t) with eta_t = eta0 / (B sqrt(t)). Dividing by B
// keeps the change in lambda per step independent of the bound.
// Best response to lambda: a cost-sensitive fit where positive record i of
// constrained category c costs 1/n + mu_i if predicted negative, with
//   mu_i = (l_{c+} - l_{c-}) / P_c - sum_c' (l_{c'+} - l_{c'-}) / P,
// and a negative record costs 1/n if predicted positive. Each record gets the
// cheaper label and weight |cost difference|, scaled by n so that lambda = 0
// reproduces the unweighted fit (the learner's penalty is not rescaled).
// If the first (unconstrained) response already satisfies every constraint it
// is returned alone. Otherwise the members are weighted per cfg.weighting.
inline RandomizedClassifier exponentiated_gradient(const ModelSpec& learner, const DesignMatrix& data,
                                                   const Grouping& g, const EGConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.n();
    if (g.codes.size() != n) throw DataError("eg: groups and data differ in length");

    detail::FnrConstraints con;
    std::vector<std::size_t> size(g.categories.size(), 0), pos(g.categories.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++size[static_cast<std::size_t>(g.codes[i])];
        pos[static_cast<std::size_t>(g.codes[i])] += data.y[i] != 0;
        con.total_positives += data.y[i] != 0;
    }
    RandomizedClassifier rc;
    for (std::size_t c = 0; c < g.categories.size(); ++c) {
        if (!size[c] || static_cast<double>(size[c]) < cfg.min_category_fraction * static_cast<double>(n)) continue;
        if (!pos[c])
            throw DataError("eg: category '" + g.categories[c] + "' of '" + g.name + "' has no actual positives");
        con.cats.push_back(c);
        con.positives.push_back(pos[c]);
        rc.constraints.push_back(g.categories[c] + "+");
        rc.constraints.push_back(g.categories[c] + "-");
    }
    if (con.cats.empty()) throw DataError("eg: no category to constrain");

    const std::size_t K = rc.constraints.size();
    std::vector<double> theta(K, 0.0);
    std::vector<double> avg_p(n, 0.0);
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    std::vector<double> mu_cat(g.categories.size(), 0.0);
    std::vector<std::vector<double>> member_hard, member_gamma;
    std::vector<double> member_err;
    const double unit = 1.0 / static_cast<double>(n);
    const double scale = static_cast<double>(n);

    for (int t = 1; t <= cfg.iterations; ++t) {
        double denom = 1.0;
        for (double v : theta) denom += std::exp(v);
        std::vector<double> lambda(K);
        for (std::size_t k = 0; k < K; ++k) lambda[k] = cfg.bound * std::exp(theta[k]) / denom;

        double shared = 0.0;
        std::fill(mu_cat.begin(), mu_cat.end(), 0.0);
        for (std::size_t a = 0; a < con.cats.size(); ++a) {
            const double diff = lambda[2 * a] - lambda[2 * a + 1];
            mu_cat[con.cats[a]] = diff / static_cast<double>(con.positives[a]);
            shared += diff;
        }
        shared /= static_cast<double>(con.total_positives);

        double w_pos = 0.0, w_neg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double cost0 = 0.0, cost1 = 0.0;
            if (data.y[i]) {
                cost0 = unit + mu_cat[static_cast<std::size_t>(g.codes[i])] - shared;
            } else {
                cost1 = unit;
            }
            labels[i] = cost0 > cost1 ? 1 : 0;
            weights[i] = scale * std::abs(cost0 - cost1);
            (labels[i] ? w_pos : w_neg) += weights[i];
        }

        FittedModel h;
        try {
            if (w_pos <= 0.0 || w_neg <= 0.0) {
                ModelSpec dummy;
                dummy.kind = ModelKind::Dummy;
                dummy.seed = learner.seed;
                h.spec = dummy;
                h.n_features = data.d();
                h.parameters = models::DummyModel{w_pos > 0.0 ? 1.0 : 0.0};
            } else {
                h = fit(learner, data.X, labels, weights);
            }
        } catch (const Error& e) {
            throw DataError("eg iteration " + std::to_string(t) + ": " + e.what());
        }

        const auto s = predict_proba(h, data.X);
        std::vector<double> hard(n);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            hard[i] = s[i] >= 0.5 ? 1.0 : 0.0;
            err += hard[i] != static_cast<double>(data.y[i]);
        }
        const auto gamma = con.values(data.y, hard, g, cfg.epsilon);

        rc.members.push_back(std::move(h));
        rc.duals_history.push_back(lambda);
        member_hard.push_back(hard);
        member_gamma.push_back(gamma);
        member_err.push_back(err / static_cast<double>(n));

        if (t == 1 && *std::max_element(gamma.begin(), gamma.end()) <= 0.0) {
            rc.averaged_violation.push_back(*std::max_element(gamma.begin(), gamma.end()));
            break;
        }

        for (std::size_t i = 0; i < n; ++i) avg_p[i] += (hard[i] - avg_p[i]) / static_cast<double>(t);
        const auto avg_gamma = con.values(data.y, avg_p, g, cfg.epsilon);
        rc.averaged_violation.push_back(*std::max_element(avg_gamma.begin(), avg_gamma.end()));

        const double eta = cfg.eta0 / (cfg.bound * std::sqrt(static_cast<double>(t)));
        for (std::size_t k = 0; k < K; ++k) theta[k] += eta * gamma[k];
    }

    const std::size_t M = rc.members.size();
    rc.weights.assign(M, 1.0 / static_cast<double>(M));
    if (cfg.weighting == EGWeighting::BestMixture && M > 1) {
        // variables: q_1..q_M, s;  min err.q + B s  s.t.  gamma_k.q - s <= 0,  sum q = 1
        std::vector<double> c(member_err);
        c.push_back(cfg.bound);
        std::vector<std::vector<double>> A(K, std::vector<double>(M + 1, -1.0));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t m = 0; m < M; ++m) A[k][m] = member_gamma[m][k];
        const auto q = detail::solve_simplex_lp(c, A, std::vector<double>(K, 0.0), M);
        double total = 0.0;
        for (std::size_t m = 0; m < M; ++m) total += rc.weights[m] = std::max(0.0, q[m]);
        for (auto& w : rc.weights) w /= total;
    }
    std::vector<double> mix(n, 0.0);
    for (std::size_t m = 0; m < M; ++m)
        if (rc.weights[m] > 0.0)
            for (std::size_t i = 0; i < n; ++i) mix[i] += rc.weights[m] * member_hard[m][i];

    const auto final_gamma = con.values(data.y, mix, g, cfg.epsilon);
    rc.feasible = *std::max_element(final_gamma.begin(), final_gamma.end()) <= 1e-9;
    double lo = 1.0, hi = 0.0;
    for (std::size_t a = 0; a < con.cats.size(); ++a) {
        const double fnr = final_gamma[2 * a] + cfg.epsilon;  // relative to overall FNR
        lo = std::min(lo, fnr);
        hi = std::max(hi, fnr);
    }
    rc.training_gap = hi - lo;
    return rc;
}

// ------------------------------------------------------------
// mitigation.csv
// ------------------------------------------------------------

inline void add_mitigation_rows(csv::Table& table, const std::string& variant, std::span<const int> y,
                                std::span<const double> p, const Grouping& g) {
    for (const auto& r : soft_group_rates(y, p, g)) {
        if (!r.n) continue;
        table.add({variant, g.name, r.category, std::to_string(r.n), std::to_string(r.positives),
                   r.fnr ? format_double(*r.fnr) : "NA", r.fpr ? format_double(*r.fpr) : "NA",
                   format_double(r.accuracy)});
    }
}

inline csv::Table mitigation_table_header() {
    return csv::Table({"variant", "feature", "category", "n", "positives", "fnr", "fpr", "accuracy"});
}

}  // namespace fairtriage

#endif
