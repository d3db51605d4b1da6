#ifndef FAIRTRIAGE_MODELS_BOOSTING_HPP
#define FAIRTRIAGE_MODELS_BOOSTING_HPP

// ------------------------------------------------------------
// gradient boosting for binary log-loss
// ------------------------------------------------------------

#include <cmath>
#include <span>
#include <vector>

#include "../core.hpp"
#include "tree.hpp"

namespace fairtriage::models {

struct BoostingParams {
    double learning_rate = 0.1;
    int max_depth = 3;
    int n_estimators = 100;
    int max_halvings = 10;
};

struct BoostingStage {
    RegressionTree tree;
    double scale = 0.0;  // learning rate after any halvings; 0 if the stage was rejected
};

struct BoostingModel {
    double base_score = 0.0;  // log-odds of the weighted positive rate
    std::vector<BoostingStage> stages;
    std::vector<double> training_loss;  // entry 0: base score only; entry m: after stage m

    double raw_score(std::span<const double> x) const {
        double f = base_score;
        for (const auto& st : stages)
            if (st.scale != 0.0) f += st.scale * st.tree.predict(x);
        return f;
    }

    double score(std::span<const double> x) const { return sigmoid(raw_score(x)); }
};

inline double weighted_log_loss(std::span<const double> raw, std::span<const int> y, std::span<const double> w) {
    double loss = 0.0, total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        loss += w[i] * (log1p_exp(raw[i]) - y[i] * raw[i]);
        total += w[i];
    }
    return loss / total;
}

// Each stage fits a depth-limited regression tree to the negative gradient
// y - p, with Newton leaf values sum(w (y - p)) / sum(w p (1 - p)). The stage
// is added at the learning rate, halved until the training log-loss does not
// increase; after max_halvings failed halvings the stage contributes nothing.
inline BoostingModel fit_boosting(const Matrix& X, std::span<const int> y, std::span<const double> w,
                                  const BoostingParams& params) {
    const std::size_t n = X.rows();
    double wsum = 0.0, wpos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += w[i];
        wpos += w[i] * y[i];
    }
    const double prior = wpos / wsum;

    BoostingModel model;
    model.base_score = std::log(prior / (1.0 - prior));
    std::vector<double> raw(n, model.base_score), trial(n), residual(n), hess(n), step(n);
    double loss = weighted_log_loss(raw, y, w);
    model.training_loss.push_back(loss);

    const SortedColumns sorted(X);
    const TreeGrowth growth{params.max_depth};
    for (int m = 0; m < params.n_estimators; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            residual[i] = y[i] - p;
            hess[i] = p * (1.0 - p);
        }
        BoostingStage stage{grow_tree(X, sorted, residual, hess, w, growth), 0.0};
        for (std::size_t i = 0; i < n; ++i) step[i] = stage.tree.predict(X.row(i));

        double scale = params.learning_rate;
        for (int h = 0; h <= params.max_halvings; ++h, scale *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = raw[i] + scale * step[i];
            const double trial_loss = weighted_log_loss(trial, y, w);
            if (trial_loss <= loss) {
                stage.scale = scale;
                raw.swap(trial);
                loss = trial_loss;
                break;
            }
        }
        model.training_loss.push_back(loss);
        model.stages.push_back(std::move(stage));
    }
    return model;
}

}  // namespace fairtriage::models

#endif
