#ifndef FAIRTRIAGE_EXPLAIN_HPP
#define FAIRTRIAGE_EXPLAIN_HPP

// ------------------------------------------------------------
// local surrogate explanations (LIME-style) and importance
// profiles aggregated over TP / TN / FP / FN populations
// ------------------------------------------------------------

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "csv.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace fairtriage {

struct Contribution {
    std::size_t column = 0;
    double weight = 0.0;
};

struct Explanation {
    std::size_t instance_index = 0;
    std::vector<Contribution> contributions;  // by decreasing |weight|
    double intercept = 0.0;                   // surrogate value at the instance
    double local_fidelity = 0.0;              // weighted R^2
};

struct ExplainSettings {
    std::size_t K = 10;
    std::size_t n_samples = 1000;
    std::uint64_t seed = 0;
    double ridge = 1e-3;
};

// Per-column sorted background values and their standard deviation. Both are
// independent of background row order.
class Background {
public:
    explicit Background(const Matrix& X) : sorted_(X.cols()), scale_(X.cols(), 1.0) {
        if (X.rows() == 0) throw DataError("explain: empty background");
        for (std::size_t j = 0; j < X.cols(); ++j) {
            auto& col = sorted_[j];
            col.resize(X.rows());
            for (std::size_t i = 0; i < X.rows(); ++i) col[i] = X(i, j);
            std::sort(col.begin(), col.end());
            const double s = sample_std(col);
            scale_[j] = s > 0.0 ? s : 1.0;
        }
    }

    std::size_t cols() const noexcept { return sorted_.size(); }
    std::size_t rows() const noexcept { return sorted_.empty() ? 0 : sorted_[0].size(); }
    double draw(std::size_t j, Rng& rng) const { return sorted_[j][rng.below(sorted_[j].size())]; }
    double scale(std::size_t j) const { return scale_[j]; }

private:
    std::vector<std::vector<double>> sorted_;
    std::vector<double> scale_;
};

// Perturbations: row 0 is x itself; in every other row each column is
// independently replaced, with probability 1/2, by a background draw.
// Kernel: exp(-D^2 / sigma^2), D the Euclidean distance in background-std
// units, sigma = 0.75 sqrt(d).
// Surrogate: ridge-damped weighted least squares on the K columns with the
// largest weighted |correlation| with the scores, in background-std units
// centred at x, so each contribution is the score change per standard
// deviation of its column and the intercept is the local value at x.
template <typename Scorer>
Explanation explain_instance(const Scorer& score, std::span<const double> x, const Background& bg,
                             const ExplainSettings& settings, std::size_t instance_index = 0) {
    if (settings.K < 1) throw ValidationError("explain: K must be at least 1");
    if (settings.n_samples < 50) throw ValidationError("explain: n_samples must be at least 50");
    const std::size_t d = bg.cols();
    if (x.size() != d) throw DataError("explain: instance and background differ in column count");
    const std::size_t m = settings.n_samples;

    Rng rng(settings.seed);
    Matrix Z(m, d);
    std::copy(x.begin(), x.end(), Z.row(0).begin());
    for (std::size_t s = 1; s < m; ++s) {
        auto row = Z.row(s);
        for (std::size_t j = 0; j < d; ++j) row[j] = rng.bernoulli(0.5) ? bg.draw(j, rng) : x[j];
    }
    const std::vector<double> f = score(Z);

    // standardized offsets and kernel weights
    Matrix U(m, d);
    std::vector<double> w(m);
    const double sigma2 = 0.5625 * static_cast<double>(d);
    double wsum = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double u = (Z(s, j) - x[j]) / bg.scale(j);
            U(s, j) = u;
            dist2 += u * u;
        }
        w[s] = std::exp(-dist2 / sigma2);
        wsum += w[s];
    }

    Explanation ex;
    ex.instance_index = instance_index;

    double fbar = 0.0;
    for (std::size_t s = 0; s < m; ++s) fbar += w[s] * f[s];
    fbar /= wsum;
    double fvar = 0.0;
    for (std::size_t s = 0; s < m; ++s) fvar += w[s] * (f[s] - fbar) * (f[s] - fbar);
    const std::size_t K = std::min(settings.K, d);
    if (!(fvar > 1e-24 * wsum)) {
        for (std::size_t j = 0; j < K; ++j) ex.contributions.push_back({j, 0.0});
        ex.intercept = f[0];
        ex.local_fidelity = 0.0;
        return ex;
    }

    // weighted |correlation| per column
    std::vector<double> corr(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double ubar = 0.0;
        for (std::size_t s = 0; s < m; ++s) ubar += w[s] * U(s, j);
        ubar /= wsum;
        double cov = 0.0, uvar = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
            const double du = U(s, j) - ubar;
            cov += w[s] * du * (f[s] - fbar);
            uvar += w[s] * du * du;
        }
        corr[j] = uvar > 0.0 ? std::abs(cov) / std::sqrt(uvar * fvar) : 0.0;
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corr[a] > corr[b]; });
    order.resize(K);

    // weighted ridge: [intercept, beta] with the intercept unpenalized
    Eigen::MatrixXd A(m, K + 1);
    Eigen::VectorXd b(m), sw(m);
    for (std::size_t s = 0; s < m; ++s) {
        sw(static_cast<Eigen::Index>(s)) = std::sqrt(w[s]);
        A(static_cast<Eigen::Index>(s), 0) = 1.0;
        for (std::size_t k = 0; k < K; ++k)
            A(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k + 1)) = U(s, order[k]);
        b(static_cast<Eigen::Index>(s)) = f[s];
    }
    const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
    const Eigen::VectorXd bw = sw.asDiagonal() * b;
    Eigen::MatrixXd normal = Aw.transpose() * Aw;
    for (std::size_t k = 1; k <= K; ++k)
        normal(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += settings.ridge * wsum;
    const Eigen::VectorXd coef = normal.ldlt().solve(Aw.transpose() * bw);

    const Eigen::VectorXd fitted = A * coef;
    double rss = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        const double r = f[s] - fitted(static_cast<Eigen::Index>(s));
        rss += w[s] * r * r;
    }
    ex.local_fidelity = 1.0 - rss / fvar;
    ex.intercept = coef(0);
    for (std::size_t k = 0; k < K; ++k) ex.contributions.push_back({order[k], coef(static_cast<Eigen::Index>(k + 1))});
    std::stable_sort(ex.contributions.begin(), ex.contributions.end(), [](const Contribution& a, const Contribution& c) {
        return std::abs(a.weight) > std::abs(c.weight) || (std::abs(a.weight) == std::abs(c.weight) && a.column < c.column);
    });
    return ex;
}

inline auto model_scorer(const FittedModel& model) {
    return [&model](const Matrix& Z) { return predict_proba(model, Z); };
}

inline Explanation explain_instance(const FittedModel& model, std::span<const double> x, const Matrix& background,
                                    const ExplainSettings& settings, std::size_t instance_index = 0) {
    return explain_instance(model_scorer(model), x, Background(background), settings, instance_index);
}

// Explains rows `instances` of X; instance k uses seed derive_seed(seed, 0, index).
inline std::vector<Explanation> explain_many(const FittedModel& model, const Matrix& X,
                                             std::span<const std::size_t> instances, const Matrix& background,
                                             const ExplainSettings& settings, unsigned workers = 0) {
    const Background bg(background);
    std::vector<Explanation> out(instances.size());
    parallel_for(
        instances.size(),
        [&](std::size_t k) {
            ExplainSettings s = settings;
            s.seed = derive_seed(settings.seed, 0, instances[k]);
            out[k] = explain_instance(model_scorer(model), X.row(instances[k]), bg, s, instances[k]);
        },
        workers ? workers : worker_count());
    return out;
}

// ------------------------------------------------------------
// importance profiles
// ------------------------------------------------------------

enum class Outcome { TP, TN, FP, FN };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::TP: return "TP";
        case Outcome::TN: return "TN";
        case Outcome::FP: return "FP";
        case Outcome::FN: return "FN";
    }
    return "?";
}

inline Outcome outcome_of(int y, int y_hat) {
    if (y) return y_hat ? Outcome::TP : Outcome::FN;
    return y_hat ? Outcome::FP : Outcome::TN;
}

struct ImportanceProfile {
    Outcome group = Outcome::TP;
    std::size_t instances = 0;  // 0 marks an empty profile
    std::vector<double> mean_contribution;  // per column, 0 where never selected
    std::vector<double> frequency;          // fraction of instances selecting the column

    bool empty() const noexcept { return instances == 0; }
};

// Mean signed contribution per column over each outcome group. Positive means
// push toward the positive class.
inline std::vector<ImportanceProfile> aggregate(const std::vector<Explanation>& explanations,
                                                std::span<const Outcome> outcomes, std::size_t columns) {
    if (explanations.size() != outcomes.size()) throw DataError("aggregate: one outcome per explanation required");
    std::vector<ImportanceProfile> out;
    for (Outcome o : {Outcome::TP, Outcome::TN, Outcome::FP, Outcome::FN}) {
        ImportanceProfile p{o, 0, std::vector<double>(columns, 0.0), std::vector<double>(columns, 0.0)};
        for (std::size_t e = 0; e < explanations.size(); ++e) {
            if (outcomes[e] != o) continue;
            ++p.instances;
            for (const auto& c : explanations[e].contributions) {
                if (c.column >= columns) throw DataError("aggregate: contribution column out of range");
                p.mean_contribution[c.column] += c.weight;
                p.frequency[c.column] += 1.0;
            }
        }
        if (p.instances)
            for (std::size_t j = 0; j < columns; ++j) {
                p.mean_contribution[j] /= static_cast<double>(p.instances);
                p.frequency[j] /= static_cast<double>(p.instances);
            }
        out.push_back(std::move(p));
    }
    return out;
}

inline csv::Table explanations_table(const std::vector<Explanation>& explanations,
                                     const std::vector<std::string>& column_names) {
    csv::Table table({"instance", "rank", "column", "contribution", "intercept", "fidelity"});
    for (const auto& ex : explanations)
        for (std::size_t r = 0; r < ex.contributions.size(); ++r)
            table.add({std::to_string(ex.instance_index), std::to_string(r + 1),
                       column_names.at(ex.contributions[r].column), format_double(ex.contributions[r].weight),
                       format_double(ex.intercept), format_double(ex.local_fidelity)});
    return table;
}

// Selected columns only, by decreasing |mean contribution|. A group without
// instances gets one marker row: instances 0, column "(empty)", values NA.
inline csv::Table profiles_table(const std::vector<ImportanceProfile>& profiles,
                                 const std::vector<std::string>& column_names) {
    csv::Table table({"group", "instances", "column", "mean_contribution", "frequency"});
    for (const auto& p : profiles) {
        if (p.empty()) {
            table.add({std::string(to_string(p.group)), "0", "(empty)", "NA", "NA"});
            continue;
        }
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < p.frequency.size(); ++j)
            if (p.frequency[j] > 0.0) cols.push_back(j);
        std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(p.mean_contribution[a]) > std::abs(p.mean_contribution[b]);
        });
        for (std::size_t j : cols)
            table.add({std::string(to_string(p.group)), std::to_string(p.instances), column_names.at(j),
                       format_double(p.mean_contribution[j]), format_double(p.frequency[j])});
    }
    return table;
}

}  // namespace fairtriage

#endif
