#ifndef FAIRTRIAGE_MODELS_NAIVE_BAYES_HPP
#define FAIRTRIAGE_MODELS_NAIVE_BAYES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "../core.hpp"

namespace fairtriage::models {

struct NaiveBayesModel {
    std::array<double, 2> prior{};
    std::array<std::vector<double>, 2> mean;
    std::array<std::vector<double>, 2> var;

    double log_joint(int c, std::span<const double> x) const {
        double s = std::log(prior[c]);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - mean[c][j];
            s -= 0.5 * (std::log(2.0 * std::numbers::pi * var[c][j]) + diff * diff / var[c][j]);
        }
        return s;
    }

    double score(std::span<const double> x) const { return sigmoid(log_joint(1, x) - log_joint(0, x)); }
};

// Weighted Gaussian naive Bayes. Every class variance is smoothed by adding
// 1e-9 * (largest per-feature variance over all records).
inline NaiveBayesModel fit_naive_bayes(const Matrix& X, std::span<const int> y, std::span<const double> w) {
    const std::size_t n = X.rows(), d = X.cols();
    NaiveBayesModel m;
    std::array<double, 2> wc{};
    std::vector<double> all_mean(d, 0.0), all_var(d, 0.0);
    double wsum = 0.0;
    for (int c = 0; c < 2; ++c) {
        m.mean[c].assign(d, 0.0);
        m.var[c].assign(d, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int c = y[i];
        wc[c] += w[i];
        wsum += w[i];
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            m.mean[c][j] += w[i] * row[j];
            all_mean[j] += w[i] * row[j];
        }
    }
    for (int c = 0; c < 2; ++c)
        for (auto& v : m.mean[c]) v /= wc[c];
    for (auto& v : all_mean) v /= wsum;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = y[i];
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dc = row[j] - m.mean[c][j];
            const double da = row[j] - all_mean[j];
            m.var[c][j] += w[i] * dc * dc;
            all_var[j] += w[i] * da * da;
        }
    }
    double max_var = 0.0;
    for (auto v : all_var) max_var = std::max(max_var, v / wsum);
    const double smoothing = max_var > 0.0 ? 1e-9 * max_var : 1e-9;
    for (int c = 0; c < 2; ++c) {
        m.prior[c] = wc[c] / wsum;
        for (auto& v : m.var[c]) v = v / wc[c] + smoothing;
    }
    return m;
}

}  // namespace fairtriage::models

#endif
