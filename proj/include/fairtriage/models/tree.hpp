#ifndef FAIRTRIAGE_MODELS_TREE_HPP
#define FAIRTRIAGE_MODELS_TREE_HPP

// ------------------------------------------------------------
// exact greedy CART, grown level by level over presorted columns
// ------------------------------------------------------------

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "../core.hpp"

namespace fairtriage::models {

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int k = 0;
        while (!nodes[k].is_leaf()) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
        return nodes[k].value;
    }

    int depth() const {
        std::vector<int> d(nodes.size(), 0);
        int best = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (nodes[k].is_leaf()) continue;
            d[nodes[k].left] = d[nodes[k].right] = d[k] + 1;
            best = std::max(best, d[k] + 1);
        }
        return best;
    }
};

// Per-column record order by ascending value (ties by record index).
// Shared by every tree grown on the same matrix.
class SortedColumns {
public:
    explicit SortedColumns(const Matrix& X) : rows_(X.rows()), order_(X.cols()) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            auto& o = order_[j];
            o.resize(rows_);
            std::iota(o.begin(), o.end(), 0u);
            std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, j) < X(b, j); });
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::span<const std::uint32_t> column(std::size_t j) const { return order_[j]; }

private:
    std::size_t rows_;
    std::vector<std::vector<std::uint32_t>> order_;
};

struct TreeGrowth {
    int max_depth = -1;  // -1: grow until no split improves
};

// Split criterion: weighted squared-error reduction of `target`,
//   gain = S_L^2 / W_L + S_R^2 / W_R - S^2 / W,
// which for a 0/1 target is proportional to the Gini decrease. Candidate
// thresholds are midpoints between consecutive distinct values; the first
// best gain wins, so ties go to the lowest column, then the lowest threshold.
// Leaf value = sum(w * target) / sum(w * denom).
inline RegressionTree grow_tree(const Matrix& X, const SortedColumns& sorted, std::span<const double> target,
                                std::span<const double> denom, std::span<const double> weight,
                                const TreeGrowth& growth) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();

    struct Stats {
        double w = 0.0, s = 0.0, q = 0.0, den = 0.0;
    };
    struct Candidate {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
    };

    RegressionTree tree;
    std::vector<int> node_of(n, 0);
    std::vector<Stats> totals(1);
    for (std::size_t i = 0; i < n; ++i) {
        totals[0].w += weight[i];
        totals[0].s += weight[i] * target[i];
        totals[0].q += weight[i] * target[i] * target[i];
        totals[0].den += weight[i] * denom[i];
    }
    tree.nodes.push_back({});
    std::vector<int> frontier{0};

    auto leaf_value = [](const Stats& st) { return st.den > 0.0 ? st.s / st.den : 0.0; };

    for (int depth = 0; !frontier.empty(); ++depth) {
        for (int k : frontier) tree.nodes[k].value = leaf_value(totals[k]);
        if (growth.max_depth >= 0 && depth >= growth.max_depth) break;

        const std::size_t node_count = tree.nodes.size();
        std::vector<char> active(node_count, 0);
        for (int k : frontier) active[k] = totals[k].w > 0.0 ? 1 : 0;
        std::vector<Candidate> best(node_count);
        std::vector<Stats> run(node_count);
        std::vector<double> last(node_count);
        std::vector<char> seen(node_count);

        for (std::size_t j = 0; j < d; ++j) {
            for (int k : frontier) {
                run[k] = {};
                seen[k] = 0;
            }
            for (std::uint32_t i : sorted.column(j)) {
                const int k = node_of[i];
                if (k < 0 || !active[k]) continue;
                const double v = X(i, j);
                if (seen[k] && v > last[k]) {
                    const Stats& tot = totals[k];
                    const Stats& l = run[k];
                    const double wr = tot.w - l.w;
                    if (l.w > 0.0 && wr > 0.0) {
                        const double sr = tot.s - l.s;
                        const double gain = l.s * l.s / l.w + sr * sr / wr - tot.s * tot.s / tot.w;
                        if (gain > best[k].gain) {
                            double thr = last[k] + (v - last[k]) * 0.5;
                            if (!(thr < v)) thr = last[k];
                            best[k] = {gain, static_cast<int>(j), thr};
                        }
                    }
                }
                run[k].w += weight[i];
                run[k].s += weight[i] * target[i];
                last[k] = v;
                seen[k] = 1;
            }
        }

        std::vector<int> next_frontier;
        std::vector<int> left_of(node_count, -1);
        for (int k : frontier) {
            const Stats& tot = totals[k];
            // residual sum of squares bounds any gain; ignore float noise
            const double sse = tot.q - (tot.w > 0.0 ? tot.s * tot.s / tot.w : 0.0);
            if (best[k].feature < 0 || !(best[k].gain > 1e-12 * std::max(sse, 1e-300)) || sse <= 0.0) continue;
            auto& node = tree.nodes[k];
            node.feature = best[k].feature;
            node.threshold = best[k].threshold;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            left_of[k] = node.left;
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            totals.resize(tree.nodes.size());
            next_frontier.push_back(node.left);
            next_frontier.push_back(node.right);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int k = node_of[i];
            if (k < 0) continue;
            if (static_cast<std::size_t>(k) >= node_count || left_of[k] < 0) {
                node_of[i] = -1;  // settled in a leaf
                continue;
            }
            const auto& node = tree.nodes[k];
            const int child = X(i, node.feature) <= node.threshold ? node.left : node.right;
            node_of[i] = child;
            auto& st = totals[child];
            st.w += weight[i];
            st.s += weight[i] * target[i];
            st.q += weight[i] * target[i] * target[i];
            st.den += weight[i] * denom[i];
        }
        frontier.swap(next_frontier);
    }
    return tree;
}

}  // namespace fairtriage::models

#endif
