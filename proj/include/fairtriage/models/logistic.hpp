#ifndef FAIRTRIAGE_MODELS_LOGISTIC_HPP
#define FAIRTRIAGE_MODELS_LOGISTIC_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <vector>

#include "../core.hpp"

namespace fairtriage::models {

struct LogisticParams {
    double C = 1.0;
    int max_iter = 5000;
    double tol = 1e-6;  // gradient max-norm
};

struct LogisticModel {
    std::vector<double> coef;
    double intercept = 0.0;
    int iterations = 0;
    bool converged = false;

    double score(std::span<const double> x) const;
};

namespace detail {

// Four interleaved partial sums in a fixed order: deterministic, and free of
// the single-accumulator latency chain.
inline double dot(std::span<const double> a, std::span<const double> b) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t n = a.size(), n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (std::size_t i = n4; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace detail

inline double LogisticModel::score(std::span<const double> x) const {
    return sigmoid(intercept + detail::dot(coef, x.first(coef.size())));
}

// Weighted L2-regularized logistic loss, normalized by total weight:
//
//   J(b, w) = (1/W) sum_i w_i [log(1 + e^{z_i}) - y_i z_i] + ||w||^2 / (2 C W),
//   z_i = b + x_i . w
//
// Parameter layout: [w_0 .. w_{d-1}, b]; the intercept is not penalized.
// Same minimizer as the unnormalized C-weighted form; integer weights are
// equivalent to duplicated records.
//
// `penalty` (optional, one factor per coefficient) replaces w_j^2 by
// penalty_j * w_j^2; the solver uses it for its internal column scaling.
struct LogisticObjective {
    const Matrix& X;
    std::span<const int> y;
    std::span<const double> w;
    double C;
    double total_weight;
    std::vector<double> penalty;

    LogisticObjective(const Matrix& X_, std::span<const int> y_, std::span<const double> w_, double C_,
                      std::vector<double> penalty_ = {})
        : X(X_), y(y_), w(w_), C(C_), total_weight(0.0), penalty(std::move(penalty_)) {
        for (double v : w) total_weight += v;
        if (penalty.empty()) penalty.assign(X.cols(), 1.0);
    }

    std::size_t dim() const { return X.cols() + 1; }

    double value(std::span<const double> theta) const {
        const std::size_t d = X.cols();
        double loss = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            if (w[i] == 0.0) continue;
            const double z = theta[d] + detail::dot(X.row(i), theta.first(d));
            loss += w[i] * (log1p_exp(z) - y[i] * z);
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) reg += penalty[j] * theta[j] * theta[j];
        return loss / total_weight + reg / (2.0 * C * total_weight);
    }

    // value and gradient in one pass
    double evaluate(std::span<const double> theta, std::span<double> grad) const {
        const std::size_t d = X.cols();
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            if (w[i] == 0.0) continue;
            auto row = X.row(i);
            const double z = theta[d] + detail::dot(row, theta.first(d));
            loss += w[i] * (log1p_exp(z) - y[i] * z);
            const double r = w[i] * (sigmoid(z) - y[i]);
            for (std::size_t j = 0; j < d; ++j) grad[j] += r * row[j];
            grad[d] += r;
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            reg += penalty[j] * theta[j] * theta[j];
            grad[j] = grad[j] / total_weight + penalty[j] * theta[j] / (C * total_weight);
        }
        grad[d] /= total_weight;
        return loss / total_weight + reg / (2.0 * C * total_weight);
    }
};


// Descent with backtracking (Armijo) line search. Search directions come from
// the L-BFGS two-loop recursion over the last 10 curvature pairs; the method
// falls back to steepest descent whenever that direction is not a descent
// direction.
//
// The search runs on standardized columns x'_j = (x_j - m_j) / s_j (weighted
// mean and std; s_j = 1 for constant columns) with coefficients v_j = s_j w_j,
// so the penalty becomes sum v_j^2 / s_j^2. This is a reparametrization with
// the same optimum. Convergence is tested on the gradient in the original
// parametrization: max-norm below tol.
inline LogisticModel fit_logistic(const Matrix& X, std::span<const int> y, std::span<const double> w,
                                  const LogisticParams& params) {
    const std::size_t rows = X.rows(), d = X.cols();
    double wsum = 0.0;
    for (double v : w) wsum += v;
    std::vector<double> m(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) m[j] += w[i] * row[j];
    }
    for (auto& v : m) v /= wsum;
    for (std::size_t i = 0; i < rows; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) sd[j] += w[i] * (row[j] - m[j]) * (row[j] - m[j]);
    }
    std::vector<double> penalty(d);
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j] / wsum);
        if (!(sd[j] > 1e-12)) {
            sd[j] = 1.0;
            m[j] = 0.0;
        }
        penalty[j] = 1.0 / (sd[j] * sd[j]);
    }
    Matrix Xs(rows, d);
    for (std::size_t i = 0; i < rows; ++i) {
        auto src = X.row(i);
        auto dst = Xs.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = (src[j] - m[j]) / sd[j];
    }

    LogisticObjective obj(Xs, y, w, params.C, penalty);
    const std::size_t n = obj.dim();
    constexpr std::size_t memory = 10;

    std::vector<double> theta(n, 0.0), grad(n), next(n), next_grad(n), dir(n), alpha(memory);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;

    // gradient in the original parametrization
    auto original_norm = [&](std::span<const double> g) {
        double worst = std::abs(g[d]);
        for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(sd[j] * g[j] + m[j] * g[d]));
        return worst;
    };

    double f = obj.evaluate(theta, grad);
    LogisticModel model;
    int it = 0;
    for (; it < params.max_iter; ++it) {
        if (original_norm(grad) < params.tol) {
            model.converged = true;
            break;
        }
        // two-loop recursion
        for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k];
        for (std::size_t q = S.size(); q-- > 0;) {
            alpha[q] = rho[q] * detail::dot(S[q], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[q] * Y[q][k];
        }
        if (!S.empty()) {
            const double gamma = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), Y.back());
            for (auto& v : dir) v *= gamma;
        }
        for (std::size_t q = 0; q < S.size(); ++q) {
            const double beta = rho[q] * detail::dot(Y[q], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] += S[q][k] * (alpha[q] - beta);
        }
        double slope = detail::dot(grad, dir);
        if (!(slope < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k];
            slope = detail::dot(grad, dir);
        }

        double step = 1.0;
        double f_next = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t k = 0; k < n; ++k) next[k] = theta[k] + step * dir[k];
            f_next = obj.evaluate(next, next_grad);
            if (f_next <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no progress possible at double precision

        std::vector<double> s(n), yv(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = next[k] - theta[k];
            yv[k] = next_grad[k] - grad[k];
        }
        const double sy = detail::dot(s, yv);
        if (sy > 1e-12 * detail::dot(yv, yv)) {
            if (S.size() == memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
            S.push_back(std::move(s));
            Y.push_back(std::move(yv));
            rho.push_back(1.0 / sy);
        }
        theta.swap(next);
        grad.swap(next_grad);
        f = f_next;
    }
    if (!model.converged && original_norm(grad) < params.tol) model.converged = true;
    model.iterations = it;
    model.coef.resize(d);
    model.intercept = theta[d];
    for (std::size_t j = 0; j < d; ++j) {
        model.coef[j] = theta[j] / sd[j];
        model.intercept -= m[j] * model.coef[j];
    }
    return model;
}

}  // namespace fairtriage::models

#endif
