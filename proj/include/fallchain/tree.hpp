#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fallchain/common.hpp"

namespace fallchain {

struct TreeConfig {
    std::size_t max_depth = 12;
    std::size_t leaf_min = 2;
    // features tried per split; 0 = all, otherwise a random subset (forests
    // pass floor(sqrt(N)))
    std::size_t feature_subsample = 0;
};

namespace tree_detail {

struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0, right = 0;   // child indices
    std::vector<double> value;         // regression: mean target; classification: class histogram
};

inline std::vector<std::size_t> candidate_features(std::size_t n_features, std::size_t subsample,
                                                   std::mt19937_64& rng) {
    std::vector<std::size_t> feats(n_features);
    std::iota(feats.begin(), feats.end(), 0);
    if (subsample == 0 || subsample >= n_features) return feats;
    for (std::size_t i = 0; i < subsample; ++i) {
        std::uniform_int_distribution<std::size_t> dist(i, feats.size() - 1);
        std::swap(feats[i], feats[dist(rng)]);
    }
    feats.resize(subsample);
    return feats;
}

}  // namespace tree_detail

// Axis-aligned regression tree with variance-reduction splits; supports
// multi-output targets (impurity = summed per-output SSE).
class RegressionTree {
  public:
    void fit(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
             const TreeConfig& cfg, std::uint64_t seed = 0) {
        if (x.empty() || x.size() != y.size()) throw invalid_argument_error("tree: empty or mismatched training set");
        cfg_ = cfg;
        nodes_.clear();
        std::mt19937_64 rng(derive_seed(seed, "regression_tree"));
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        build(x, y, idx, 0, rng);
        fitted_ = true;
    }

    std::vector<double> predict(const std::vector<double>& features) const {
        if (!fitted_) throw not_fitted_error("tree: predict before fit");
        std::size_t n = 0;
        while (!nodes_[n].leaf)
            n = features[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
        return nodes_[n].value;
    }

  private:
    std::size_t build(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                      const std::vector<std::size_t>& idx, std::size_t depth, std::mt19937_64& rng) {
        const std::size_t outputs = y.front().size();
        std::vector<double> mean(outputs, 0.0);
        for (std::size_t i : idx)
            for (std::size_t o = 0; o < outputs; ++o) mean[o] += y[i][o];
        for (auto& v : mean) v /= static_cast<double>(idx.size());

        const std::size_t me = nodes_.size();
        nodes_.push_back({});
        nodes_[me].value = mean;

        if (depth >= cfg_.max_depth || idx.size() < 2 * cfg_.leaf_min) return me;

        double parent_sse = 0.0;
        for (std::size_t i : idx)
            for (std::size_t o = 0; o < outputs; ++o) {
                const double d = y[i][o] - mean[o];
                parent_sse += d * d;
            }
        if (parent_sse <= 1e-12) return me;

        double best_gain = 0.0;
        std::size_t best_feat = 0;
        double best_thresh = 0.0;
        const auto feats = tree_detail::candidate_features(x.front().size(), cfg_.feature_subsample, rng);
        std::vector<std::size_t> order = idx;
        for (std::size_t f : feats) {
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
            // prefix sums for O(n) split evaluation
            std::vector<double> lsum(outputs, 0.0), lsq(outputs, 0.0), tsum(outputs, 0.0), tsq(outputs, 0.0);
            for (std::size_t i : order)
                for (std::size_t o = 0; o < outputs; ++o) {
                    tsum[o] += y[i][o];
                    tsq[o] += y[i][o] * y[i][o];
                }
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                for (std::size_t o = 0; o < outputs; ++o) {
                    const double v = y[order[pos]][o];
                    lsum[o] += v;
                    lsq[o] += v * v;
                }
                if (x[order[pos]][f] == x[order[pos + 1]][f]) continue;
                const std::size_t nl = pos + 1, nr = order.size() - nl;
                if (nl < cfg_.leaf_min || nr < cfg_.leaf_min) continue;
                double child_sse = 0.0;
                for (std::size_t o = 0; o < outputs; ++o) {
                    const double rsum = tsum[o] - lsum[o], rsq = tsq[o] - lsq[o];
                    child_sse += lsq[o] - lsum[o] * lsum[o] / static_cast<double>(nl);
                    child_sse += rsq - rsum * rsum / static_cast<double>(nr);
                }
                const double gain = parent_sse - child_sse;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feat = f;
                    best_thresh = 0.5 * (x[order[pos]][f] + x[order[pos + 1]][f]);
                }
            }
        }
        if (best_gain <= 1e-12) return me;

        std::vector<std::size_t> li, ri;
        for (std::size_t i : idx) (x[i][best_feat] <= best_thresh ? li : ri).push_back(i);
        // the midpoint of two adjacent doubles can round onto the upper value,
        // sending every sample one way; keep a leaf rather than recurse on
        // an empty side
        if (li.empty() || ri.empty()) return me;
        nodes_[me].leaf = false;
        nodes_[me].feature = best_feat;
        nodes_[me].threshold = best_thresh;
        const std::size_t l = build(x, y, li, depth + 1, rng);
        const std::size_t r = build(x, y, ri, depth + 1, rng);
        nodes_[me].left = l;
        nodes_[me].right = r;
        return me;
    }

    TreeConfig cfg_;
    std::vector<tree_detail::Node> nodes_;
    bool fitted_ = false;
};

// Gini-impurity classification tree over integer labels.
class ClassificationTree {
  public:
    void fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int num_classes,
             const TreeConfig& cfg, std::uint64_t seed = 0) {
        if (x.empty() || x.size() != y.size()) throw invalid_argument_error("tree: empty or mismatched training set");
        cfg_ = cfg;
        classes_ = num_classes;
        nodes_.clear();
        std::mt19937_64 rng(derive_seed(seed, "classification_tree"));
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        build(x, y, idx, 0, rng);
        fitted_ = true;
    }

    int predict(const std::vector<double>& features) const {
        const auto hist = predict_histogram(features);
        return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    }

    std::vector<double> predict_histogram(const std::vector<double>& features) const {
        if (!fitted_) throw not_fitted_error("tree: predict before fit");
        std::size_t n = 0;
        while (!nodes_[n].leaf)
            n = features[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
        return nodes_[n].value;
    }

  private:
    static double gini(const std::vector<double>& counts, double n) {
        double g = 1.0;
        for (double c : counts) g -= (c / n) * (c / n);
        return g;
    }

    std::size_t build(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                      const std::vector<std::size_t>& idx, std::size_t depth, std::mt19937_64& rng) {
        std::vector<double> counts(static_cast<std::size_t>(classes_), 0.0);
        for (std::size_t i : idx) counts[static_cast<std::size_t>(y[i])] += 1.0;

        const std::size_t me = nodes_.size();
        nodes_.push_back({});
        nodes_[me].value = counts;

        const double n = static_cast<double>(idx.size());
        const double parent_gini = gini(counts, n);
        if (depth >= cfg_.max_depth || idx.size() < 2 * cfg_.leaf_min || parent_gini <= 1e-12) return me;

        double best_gain = 0.0;
        std::size_t best_feat = 0;
        double best_thresh = 0.0;
        const auto feats = tree_detail::candidate_features(x.front().size(), cfg_.feature_subsample, rng);
        std::vector<std::size_t> order = idx;
        for (std::size_t f : feats) {
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
            std::vector<double> left(static_cast<std::size_t>(classes_), 0.0);
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                left[static_cast<std::size_t>(y[order[pos]])] += 1.0;
                if (x[order[pos]][f] == x[order[pos + 1]][f]) continue;
                const double nl = static_cast<double>(pos + 1);
                const double nr = n - nl;
                if (nl < static_cast<double>(cfg_.leaf_min) || nr < static_cast<double>(cfg_.leaf_min)) continue;
                std::vector<double> right(counts);
                for (std::size_t c = 0; c < right.size(); ++c) right[c] -= left[c];
                const double child = (nl / n) * gini(left, nl) + (nr / n) * gini(right, nr);
                const double gain = parent_gini - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feat = f;
                    best_thresh = 0.5 * (x[order[pos]][f] + x[order[pos + 1]][f]);
                }
            }
        }
        if (best_gain <= 1e-12) return me;

        std::vector<std::size_t> li, ri;
        for (std::size_t i : idx) (x[i][best_feat] <= best_thresh ? li : ri).push_back(i);
        // same midpoint-rounding guard as the regression tree
        if (li.empty() || ri.empty()) return me;
        nodes_[me].leaf = false;
        nodes_[me].feature = best_feat;
        nodes_[me].threshold = best_thresh;
        const std::size_t l = build(x, y, li, depth + 1, rng);
        const std::size_t r = build(x, y, ri, depth + 1, rng);
        nodes_[me].left = l;
        nodes_[me].right = r;
        return me;
    }

    TreeConfig cfg_;
    int classes_ = 2;
    std::vector<tree_detail::Node> nodes_;
    bool fitted_ = false;
};

}  // namespace fallchain
