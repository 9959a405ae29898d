#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fallchain/common.hpp"
#include "fallchain/nnkernel.hpp"
#include "fallchain/tree.hpp"

namespace fallchain {

// One training/inference row: raw per-anchor RSSI plus the engineered
// mean / population-std / visible-anchor-count features.
struct FeatureRow {
    std::vector<double> rssi;
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t anchors_visible = 0;
    std::array<double, 2> target{};  // (x, y), training only

    std::vector<double> raw_features() const { return rssi; }

    std::vector<double> engineered_features() const {
        std::vector<double> f = rssi;
        f.push_back(mean);
        f.push_back(std_dev);
        f.push_back(static_cast<double>(anchors_visible));
        return f;
    }
};

// Visible means strictly above the floor, so filled cells never count.
inline FeatureRow engineer_features(const std::vector<double>& rssi, double floor_dbm = -100.0) {
    if (rssi.empty()) throw invalid_argument_error("engineer_features: empty rssi vector");
    FeatureRow row;
    row.rssi = rssi;
    double sum = 0.0;
    for (double v : rssi) {
        sum += v;
        if (v > floor_dbm) ++row.anchors_visible;
    }
    row.mean = sum / static_cast<double>(rssi.size());
    double sq = 0.0;
    for (double v : rssi) sq += (v - row.mean) * (v - row.mean);
    row.std_dev = std::sqrt(sq / static_cast<double>(rssi.size()));
    return row;
}

// Per-feature min-max scaler onto [-1, 1]; bounds are frozen after fit.
class FeatureScaler {
  public:
    void fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw invalid_argument_error("scaler: empty training set");
        const std::size_t n = rows.front().size();
        min_.assign(n, std::numeric_limits<double>::infinity());
        max_.assign(n, -std::numeric_limits<double>::infinity());
        for (const auto& r : rows)
            for (std::size_t i = 0; i < n; ++i) {
                min_[i] = std::min(min_[i], r[i]);
                max_[i] = std::max(max_[i], r[i]);
            }
        fitted_ = true;
    }

    std::vector<double> transform(const std::vector<double>& row) const {
        if (!fitted_) throw not_fitted_error("scaler: transform before fit");
        std::vector<double> out(row.size());
        for (std::size_t i = 0; i < row.size(); ++i)
            out[i] = min_[i] == max_[i] ? 0.0 : 2.0 * (row[i] - min_[i]) / (max_[i] - min_[i]) - 1.0;
        return out;
    }

    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }

  private:
    std::vector<double> min_, max_;
    bool fitted_ = false;
};

// Regressor interface: feature vector in, (x, y) out. The evaluation harness
// accepts anything implementing this, so further model kinds can be added.
class Regressor {
  public:
    virtual ~Regressor() = default;
    virtual void fit(const std::vector<std::vector<double>>& x,
                     const std::vector<std::array<double, 2>>& y) = 0;
    virtual std::array<double, 2> predict(const std::vector<double>& features) const = 0;
    virtual std::string name() const = 0;
};

class KnnRegressor final : public Regressor {
  public:
    explicit KnnRegressor(std::size_t k = 5) : k_(k) {}

    void fit(const std::vector<std::vector<double>>& x,
             const std::vector<std::array<double, 2>>& y) override {
        if (x.empty() || x.size() != y.size()) throw invalid_argument_error("knn: empty or mismatched training set");
        x_ = x;
        y_ = y;
    }

    std::array<double, 2> predict(const std::vector<double>& features) const override {
        if (x_.empty()) throw not_fitted_error("knn: predict before fit");
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < features.size(); ++j) {
                const double d = features[j] - x_[i][j];
                d2 += d * d;
            }
            dist.emplace_back(d2, i);
        }
        const std::size_t k = std::min(k_, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::array<double, 2> out{0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i) {
            out[0] += y_[dist[i].second][0];
            out[1] += y_[dist[i].second][1];
        }
        out[0] /= static_cast<double>(k);
        out[1] /= static_cast<double>(k);
        return out;
    }

    std::string name() const override { return "knn"; }

  private:
    std::size_t k_;
    std::vector<std::vector<double>> x_;
    std::vector<std::array<double, 2>> y_;
};

class DecisionTreeRegressor final : public Regressor {
  public:
    explicit DecisionTreeRegressor(TreeConfig cfg = {}, std::uint64_t seed = 0) : cfg_(cfg), seed_(seed) {}

    void fit(const std::vector<std::vector<double>>& x,
             const std::vector<std::array<double, 2>>& y) override {
        std::vector<std::vector<double>> targets(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) targets[i] = {y[i][0], y[i][1]};
        tree_.fit(x, targets, cfg_, seed_);
    }

    std::array<double, 2> predict(const std::vector<double>& features) const override {
        const auto v = tree_.predict(features);
        return {v[0], v[1]};
    }

    std::string name() const override { return "decision_tree"; }

  private:
    TreeConfig cfg_;
    std::uint64_t seed_;
    RegressionTree tree_;
};

class RandomForestRegressor final : public Regressor {
  public:
    explicit RandomForestRegressor(std::size_t n_trees = 50, TreeConfig cfg = {}, std::uint64_t seed = 0)
        : n_trees_(n_trees), cfg_(cfg), seed_(seed) {}

    void fit(const std::vector<std::vector<double>>& x,
             const std::vector<std::array<double, 2>>& y) override {
        if (x.empty() || x.size() != y.size()) throw invalid_argument_error("forest: empty or mismatched training set");
        std::vector<std::vector<double>> targets(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) targets[i] = {y[i][0], y[i][1]};

        TreeConfig cfg = cfg_;
        if (cfg.feature_subsample == 0)
            cfg.feature_subsample = static_cast<std::size_t>(std::sqrt(static_cast<double>(x.front().size())));
        trees_.assign(n_trees_, RegressionTree{});
        for (std::size_t b = 0; b < n_trees_; ++b) {
            // bootstrap ratio 1.0, per-tree seed (global seed, tree index)
            std::mt19937_64 rng(derive_seed(seed_, "forest_bootstrap", b));
            std::uniform_int_distribution<std::size_t> dist(0, x.size() - 1);
            std::vector<std::vector<double>> bx(x.size());
            std::vector<std::vector<double>> by(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const std::size_t pick = dist(rng);
                bx[i] = x[pick];
                by[i] = targets[pick];
            }
            trees_[b].fit(bx, by, cfg, derive_seed(seed_, "forest_tree", b));
        }
        fitted_ = true;
    }

    std::array<double, 2> predict(const std::vector<double>& features) const override {
        if (!fitted_) throw not_fitted_error("forest: predict before fit");
        std::array<double, 2> out{0.0, 0.0};
        for (const auto& t : trees_) {
            const auto v = t.predict(features);
            out[0] += v[0];
            out[1] += v[1];
        }
        out[0] /= static_cast<double>(trees_.size());
        out[1] /= static_cast<double>(trees_.size());
        return out;
    }

    std::size_t tree_count() const { return trees_.size(); }
    std::array<double, 2> tree_predict(std::size_t i, const std::vector<double>& features) const {
        const auto v = trees_[i].predict(features);
        return {v[0], v[1]};
    }

    std::string name() const override { return "random_forest"; }

  private:
    std::size_t n_trees_;
    TreeConfig cfg_;
    std::uint64_t seed_;
    std::vector<RegressionTree> trees_;
    bool fitted_ = false;
};

// Small dense net (tanh hidden layers, linear 2-output head) trained with SGD
// on squared error.
class MlpRegressor final : public Regressor {
  public:
    explicit MlpRegressor(std::vector<std::size_t> hidden = {32, 16}, std::size_t epochs = 200,
                          double lr = 0.01, std::uint64_t seed = 0)
        : hidden_(std::move(hidden)), epochs_(epochs), lr_(lr), seed_(seed) {}

    void fit(const std::vector<std::vector<double>>& x,
             const std::vector<std::array<double, 2>>& y) override {
        if (x.empty() || x.size() != y.size()) throw invalid_argument_error("mlp: empty or mismatched training set");
        std::mt19937_64 rng(derive_seed(seed_, "mlp_init"));
        layers_.clear();
        std::size_t in = x.front().size();
        for (std::size_t h : hidden_) {
            nn::Dense d;
            d.init(in, h, rng);
            layers_.push_back(std::move(d));
            in = h;
        }
        nn::Dense out;
        out.init(in, 2, rng);
        layers_.push_back(std::move(out));

        for (std::size_t epoch = 0; epoch < epochs_; ++epoch) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                std::vector<std::vector<double>> acts;  // post-activation per layer input
                acts.push_back(x[i]);
                for (std::size_t l = 0; l < layers_.size(); ++l) {
                    auto z = layers_[l].forward(acts.back());
                    if (l + 1 < layers_.size())
                        for (auto& v : z) v = std::tanh(v);
                    acts.push_back(std::move(z));
                }
                std::vector<double> dy(2);
                for (std::size_t o = 0; o < 2; ++o) dy[o] = acts.back()[o] - y[i][o];
                for (std::size_t l = layers_.size(); l-- > 0;) {
                    layers_[l].zero_grads();
                    auto dx = layers_[l].backward(acts[l], dy);
                    if (l > 0)
                        for (std::size_t u = 0; u < dx.size(); ++u)
                            dx[u] *= 1.0 - acts[l][u] * acts[l][u];
                    for (std::size_t j = 0; j < layers_[l].w.size(); ++j)
                        layers_[l].w[j] -= lr_ * layers_[l].gw[j];
                    for (std::size_t j = 0; j < layers_[l].b.size(); ++j)
                        layers_[l].b[j] -= lr_ * layers_[l].gb[j];
                    dy = std::move(dx);
                }
            }
        }
        fitted_ = true;
    }

    std::array<double, 2> predict(const std::vector<double>& features) const override {
        if (!fitted_) throw not_fitted_error("mlp: predict before fit");
        std::vector<double> a = features;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            a = layers_[l].forward(a);
            if (l + 1 < layers_.size())
                for (auto& v : a) v = std::tanh(v);
        }
        return {a[0], a[1]};
    }

    std::string name() const override { return "mlp"; }

  private:
    std::vector<std::size_t> hidden_;
    std::size_t epochs_;
    double lr_;
    std::uint64_t seed_;
    std::vector<nn::Dense> layers_;
    bool fitted_ = false;
};

inline std::unique_ptr<Regressor> make_regressor(const std::string& kind, std::uint64_t seed = 0) {
    if (kind == "knn") return std::make_unique<KnnRegressor>();
    if (kind == "decision_tree") return std::make_unique<DecisionTreeRegressor>(TreeConfig{}, seed);
    if (kind == "random_forest") return std::make_unique<RandomForestRegressor>(50, TreeConfig{}, seed);
    if (kind == "mlp") return std::make_unique<MlpRegressor>(std::vector<std::size_t>{32, 16}, 200, 0.01, seed);
    throw invalid_argument_error("unknown regressor kind: " + kind);
}

struct LocMetrics {
    double mae = 0.0;  // per-coordinate mean absolute error
    double mse = 0.0;  // per-coordinate mean squared error
    double mde = 0.0;  // mean 2D Euclidean distance, meters
};

inline LocMetrics evaluate_loc(const std::vector<std::array<double, 2>>& preds,
                               const std::vector<std::array<double, 2>>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw invalid_argument_error("evaluate_loc: empty or mismatched inputs");
    LocMetrics m;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i][0] - truths[i][0];
        const double dy = preds[i][1] - truths[i][1];
        m.mae += std::abs(dx) + std::abs(dy);
        m.mse += dx * dx + dy * dy;
        m.mde += std::sqrt(dx * dx + dy * dy);
    }
    const double n = static_cast<double>(preds.size());
    m.mae /= 2.0 * n;
    m.mse /= 2.0 * n;
    m.mde /= n;
    return m;
}

}  // namespace fallchain
