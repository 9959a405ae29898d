#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "fallchain/common.hpp"
#include "fallchain/tree.hpp"

namespace fallchain {

// Normalized center-format box: cx, cy in [0,1], w, h in (0,1].
struct BBox {
    double cx = 0, cy = 0, w = 0, h = 0;
};

struct Detection {
    std::string class_name;
    BBox box;
    double confidence = 1.0;
    bool fallen = false;  // end-to-end label, when present
};

struct GroundTruthBox {
    std::string class_name;
    BBox box;
};

inline double iou(const BBox& a, const BBox& b) {
    const double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
    const double ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
    const double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
    const double by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
    const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = ix * iy;
    // areas from the same corner-derived extents as the intersection, so
    // identical boxes give exactly 1
    const double uni = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

struct ApResult {
    double ap = 0.0;
    bool no_ground_truth = false;
};

namespace vision_detail {

// Greedy matcher shared by AP and the set-level confusion counts: detections
// in descending confidence order (ties by original index, so results are
// stable), each claiming the unmatched truth with the highest IoU >= 0.5.
// Returns per-detection hit flags in confidence order plus the order itself.
inline void greedy_match(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& truths,
                         std::vector<std::size_t>& order, std::vector<char>& hit) {
    order.resize(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });
    std::vector<char> used(truths.size(), 0);
    hit.assign(dets.size(), 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& d = dets[order[k]];
        double best = 0.5;
        std::size_t best_t = truths.size();
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (used[t]) continue;
            const double v = iou(d.box, truths[t].box);
            if (v >= best) {
                best = v;
                best_t = t;
            }
        }
        if (best_t < truths.size()) {
            used[best_t] = 1;
            hit[k] = 1;
        }
    }
}

// Area under the precision-recall step curve with all-points interpolation.
inline double pr_area(const std::vector<char>& hits_in_conf_order, std::size_t n_truths) {
    std::vector<double> precision, recall;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < hits_in_conf_order.size(); ++k) {
        if (hits_in_conf_order[k]) ++tp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_truths));
    }
    // monotone envelope from the right
    for (std::size_t k = precision.size(); k-- > 1;)
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double area = 0.0, prev_r = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
        area += (recall[k] - prev_r) * precision[k];
        prev_r = recall[k];
    }
    return area;
}

}  // namespace vision_detail

// Single-class average precision at IoU 0.5.
inline ApResult ap50(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& truths) {
    if (truths.empty()) return {0.0, true};
    if (dets.empty()) return {0.0, false};
    std::vector<std::size_t> order;
    std::vector<char> hit;
    vision_detail::greedy_match(dets, truths, order, hit);
    return {vision_detail::pr_area(hit, truths.size()), false};
}

inline constexpr std::size_t kSceneFeatureLen = 13;
inline constexpr double kNoSupportDistance = 2.0;  // > sqrt(2), outside any real frame

inline bool is_support_class(const std::string& c) { return c == "chair" || c == "bed" || c == "couch"; }
inline bool is_relevant_class(const std::string& c) { return c == "person" || is_support_class(c); }

// Fixed-order scene summary of one frame's detections:
//   [0..3]  person / chair / bed / couch counts
//   [4]     total relevant count
//   [5..6]  mean relevant width, height
//   [7..10] person y-center mean, std (population), max, min
//   [11]    mean person w/h aspect ratio
//   [12]    min person-to-support center distance
// Person slots fall back to zeros (distance: 2.0) when no person is present;
// the distance is also 2.0 when there is no support object to measure against.
inline std::array<double, kSceneFeatureLen> extract_features(const std::vector<Detection>& dets) {
    std::array<double, kSceneFeatureLen> f{};
    // canonical accumulation order, so the result is bit-identical under any
    // permutation of the input
    std::vector<const Detection*> ordered;
    ordered.reserve(dets.size());
    for (const auto& d : dets) ordered.push_back(&d);
    std::sort(ordered.begin(), ordered.end(), [](const Detection* a, const Detection* b) {
        return std::tie(a->class_name, a->box.cx, a->box.cy, a->box.w, a->box.h, a->confidence) <
               std::tie(b->class_name, b->box.cx, b->box.cy, b->box.w, b->box.h, b->confidence);
    });
    double rel_w = 0, rel_h = 0;
    std::size_t rel_n = 0;
    std::vector<const Detection*> persons, supports;
    for (const auto* dp : ordered) {
        const auto& d = *dp;
        if (!is_relevant_class(d.class_name)) continue;
        ++rel_n;
        rel_w += d.box.w;
        rel_h += d.box.h;
        if (d.class_name == "person") {
            f[0] += 1;
            persons.push_back(&d);
        } else {
            if (d.class_name == "chair") f[1] += 1;
            else if (d.class_name == "bed") f[2] += 1;
            else f[3] += 1;
            supports.push_back(&d);
        }
    }
    f[4] = static_cast<double>(rel_n);
    if (rel_n) {
        f[5] = rel_w / static_cast<double>(rel_n);
        f[6] = rel_h / static_cast<double>(rel_n);
    }
    if (persons.empty()) {
        f[12] = kNoSupportDistance;
        return f;
    }
    double ysum = 0, ymax = -1, ymin = 2, ratio = 0;
    for (const auto* p : persons) {
        ysum += p->box.cy;
        ymax = std::max(ymax, p->box.cy);
        ymin = std::min(ymin, p->box.cy);
        ratio += p->box.w / p->box.h;
    }
    const double n = static_cast<double>(persons.size());
    f[7] = ysum / n;
    double sq = 0;
    for (const auto* p : persons) sq += (p->box.cy - f[7]) * (p->box.cy - f[7]);
    f[8] = std::sqrt(sq / n);
    f[9] = ymax;
    f[10] = ymin;
    f[11] = ratio / n;
    double dmin = kNoSupportDistance;
    for (const auto* p : persons)
        for (const auto* s : supports) {
            const double dx = p->box.cx - s->box.cx;
            const double dy = p->box.cy - s->box.cy;
            dmin = std::min(dmin, std::sqrt(dx * dx + dy * dy));
        }
    f[12] = dmin;
    return f;
}

// Sigmoid linear model on the scene features, full-batch gradient descent on
// log-loss. Deterministic: weights start at zero.
class LogisticFallClassifier {
  public:
    struct Config {
        double learning_rate = 0.5;
        std::size_t epochs = 500;
    };

    void fit(const std::vector<std::array<double, kSceneFeatureLen>>& x, const std::vector<int>& y) {
        fit(x, y, Config{});
    }

    void fit(const std::vector<std::array<double, kSceneFeatureLen>>& x, const std::vector<int>& y,
             Config cfg) {
        check_labels(y);
        if (x.size() != y.size()) throw invalid_argument_error("logistic: feature/label length mismatch");
        w_.assign(kSceneFeatureLen, 0.0);
        b_ = 0.0;
        const double inv_n = 1.0 / static_cast<double>(x.size());
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::vector<double> gw(kSceneFeatureLen, 0.0);
            double gb = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double err = predict_proba(x[i]) - static_cast<double>(y[i]);
                for (std::size_t j = 0; j < kSceneFeatureLen; ++j) gw[j] += err * x[i][j];
                gb += err;
            }
            for (std::size_t j = 0; j < kSceneFeatureLen; ++j) w_[j] -= cfg.learning_rate * inv_n * gw[j];
            b_ -= cfg.learning_rate * inv_n * gb;
        }
        fitted_ = true;
    }

    double predict_proba(const std::array<double, kSceneFeatureLen>& x) const {
        double z = b_;
        for (std::size_t j = 0; j < kSceneFeatureLen; ++j) z += w_[j] * x[j];
        return 1.0 / (1.0 + std::exp(-z));
    }

    int predict(const std::array<double, kSceneFeatureLen>& x) const {
        if (!fitted_) throw not_fitted_error("logistic: predict before fit");
        return predict_proba(x) >= 0.5 ? 1 : 0;
    }

    const std::vector<double>& weights() const { return w_; }
    double bias() const { return b_; }

    void set_weights(std::vector<double> w, double b) {
        if (w.size() != kSceneFeatureLen)
            throw invalid_argument_error("logistic: weight vector must have " +
                                         std::to_string(kSceneFeatureLen) + " entries");
        w_ = std::move(w);
        b_ = b;
        fitted_ = true;
    }

    static void check_labels(const std::vector<int>& y) {
        if (y.empty()) throw invalid_argument_error("classifier: empty training set");
        bool has0 = false, has1 = false;
        for (int v : y) (v == 0 ? has0 : has1) = true;
        if (!has0 || !has1) throw invalid_argument_error("classifier: single-class dataset");
    }

  private:
    std::vector<double> w_;
    double b_ = 0.0;
    bool fitted_ = false;
};

// Bagged Gini trees, majority vote (ties break toward class 0).
class ForestFallClassifier {
  public:
    explicit ForestFallClassifier(std::size_t n_trees = 50, TreeConfig cfg = {}, std::uint64_t seed = 0)
        : n_trees_(n_trees), cfg_(cfg), seed_(seed) {}

    void fit(const std::vector<std::array<double, kSceneFeatureLen>>& x, const std::vector<int>& y) {
        LogisticFallClassifier::check_labels(y);
        if (x.size() != y.size()) throw invalid_argument_error("forest: feature/label length mismatch");
        TreeConfig cfg = cfg_;
        if (cfg.feature_subsample == 0)
            cfg.feature_subsample = static_cast<std::size_t>(std::sqrt(double(kSceneFeatureLen)));
        trees_.assign(n_trees_, ClassificationTree{});
        for (std::size_t b = 0; b < n_trees_; ++b) {
            std::mt19937_64 rng(derive_seed(seed_, "vision_forest_bootstrap", b));
            std::uniform_int_distribution<std::size_t> dist(0, x.size() - 1);
            std::vector<std::vector<double>> bx(x.size());
            std::vector<int> by(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const std::size_t pick = dist(rng);
                bx[i].assign(x[pick].begin(), x[pick].end());
                by[i] = y[pick];
            }
            trees_[b].fit(bx, by, 2, cfg, derive_seed(seed_, "vision_forest_tree", b));
        }
        fitted_ = true;
    }

    int predict(const std::array<double, kSceneFeatureLen>& x) const {
        if (!fitted_) throw not_fitted_error("forest: predict before fit");
        const std::vector<double> row(x.begin(), x.end());
        std::size_t votes1 = 0;
        for (const auto& t : trees_) votes1 += t.predict(row) == 1 ? 1 : 0;
        return 2 * votes1 > trees_.size() ? 1 : 0;
    }

    std::size_t tree_count() const { return trees_.size(); }
    int tree_vote(std::size_t i, const std::array<double, kSceneFeatureLen>& x) const {
        return trees_[i].predict(std::vector<double>(x.begin(), x.end()));
    }

  private:
    std::size_t n_trees_;
    TreeConfig cfg_;
    std::uint64_t seed_;
    std::vector<ClassificationTree> trees_;
    bool fitted_ = false;
};

struct Frame {
    std::vector<Detection> detections;
    std::vector<GroundTruthBox> truths;
    double inference_time_s = 0.0;
};

struct DetMetrics {
    double precision = 0, recall = 0, f1 = 0;
    double map50 = 0;
    double mean_inference_time_s = 0;
};

// Dataset-level detection metrics. Confusion counts come from per-frame
// class-aware greedy matching at IoU 0.5; mAP50 averages per-class AP with
// detections of each class pooled across frames (sorted globally by
// confidence, matched only within their own frame).
inline DetMetrics eval_detection_set(const std::vector<Frame>& frames) {
    if (frames.empty()) throw invalid_argument_error("eval_detection_set: empty frame set");

    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<std::string> classes;
    auto note_class = [&](const std::string& c) {
        if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
    };
    double time_sum = 0.0;
    for (const auto& fr : frames) {
        time_sum += fr.inference_time_s;
        for (const auto& t : fr.truths) note_class(t.class_name);
        for (const auto& d : fr.detections) note_class(d.class_name);
        for (const auto& cls : classes) {
            std::vector<Detection> dets;
            std::vector<GroundTruthBox> truths;
            for (const auto& d : fr.detections)
                if (d.class_name == cls) dets.push_back(d);
            for (const auto& t : fr.truths)
                if (t.class_name == cls) truths.push_back(t);
            if (dets.empty() && truths.empty()) continue;
            std::vector<std::size_t> order;
            std::vector<char> hit;
            vision_detail::greedy_match(dets, truths, order, hit);
            std::size_t hits = 0;
            for (char h : hit) hits += h ? 1 : 0;
            tp += hits;
            fp += dets.size() - hits;
            fn += truths.size() - hits;
        }
    }

    std::sort(classes.begin(), classes.end());
    double ap_sum = 0.0;
    std::size_t ap_classes = 0;
    for (const auto& cls : classes) {
        // pooled (frame, detection) list for this class
        struct Pooled {
            std::size_t frame;
            std::size_t index;  // into the frame's class-filtered list
            double conf;
        };
        std::vector<std::vector<Detection>> per_frame_dets(frames.size());
        std::vector<std::vector<GroundTruthBox>> per_frame_truths(frames.size());
        std::size_t total_truths = 0;
        std::vector<Pooled> pool;
        for (std::size_t fi = 0; fi < frames.size(); ++fi) {
            for (const auto& d : frames[fi].detections)
                if (d.class_name == cls) {
                    pool.push_back({fi, per_frame_dets[fi].size(), d.confidence});
                    per_frame_dets[fi].push_back(d);
                }
            for (const auto& t : frames[fi].truths)
                if (t.class_name == cls) per_frame_truths[fi].push_back(t);
            total_truths += per_frame_truths[fi].size();
        }
        if (total_truths == 0) continue;  // class seen only as detections: no AP term
        ++ap_classes;
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Pooled& a, const Pooled& b) { return a.conf > b.conf; });
        std::vector<std::vector<char>> used(frames.size());
        for (std::size_t fi = 0; fi < frames.size(); ++fi)
            used[fi].assign(per_frame_truths[fi].size(), 0);
        std::vector<char> hit;
        hit.reserve(pool.size());
        for (const auto& p : pool) {
            const auto& d = per_frame_dets[p.frame][p.index];
            double best = 0.5;
            std::size_t best_t = per_frame_truths[p.frame].size();
            for (std::size_t t = 0; t < per_frame_truths[p.frame].size(); ++t) {
                if (used[p.frame][t]) continue;
                const double v = iou(d.box, per_frame_truths[p.frame][t].box);
                if (v >= best) {
                    best = v;
                    best_t = t;
                }
            }
            if (best_t < per_frame_truths[p.frame].size()) {
                used[p.frame][best_t] = 1;
                hit.push_back(1);
            } else {
                hit.push_back(0);
            }
        }
        ap_sum += vision_detail::pr_area(hit, total_truths);
    }

    DetMetrics m;
    m.precision = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    m.recall = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.map50 = ap_classes ? ap_sum / static_cast<double>(ap_classes) : 0.0;
    m.mean_inference_time_s = time_sum / static_cast<double>(frames.size());
    return m;
}

// ---- detection record files ---------------------------------------------
// One text file per frame, one line per box:
//   detections:  class_id cx cy w h conf
//   ground truth: class_id cx cy w h
// plus a class-map file with `id name` lines.

inline std::map<int, std::string> read_class_map(std::istream& in) {
    std::map<int, std::string> m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int id = 0;
        std::string name;
        if (!(ss >> id >> name)) throw parse_error("class map: bad line: " + line);
        m[id] = name;
    }
    if (m.empty()) throw parse_error("class map: empty");
    return m;
}

inline std::map<int, std::string> read_class_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open class map: " + path);
    return read_class_map(in);
}

inline std::vector<Detection> read_detections(std::istream& in, const std::map<int, std::string>& classes) {
    std::vector<Detection> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int id = 0;
        Detection d;
        if (!(ss >> id >> d.box.cx >> d.box.cy >> d.box.w >> d.box.h >> d.confidence))
            throw parse_error("detections: bad line: " + line);
        const auto it = classes.find(id);
        if (it == classes.end()) throw parse_error("detections: unknown class id " + std::to_string(id));
        d.class_name = it->second;
        out.push_back(std::move(d));
    }
    return out;
}

inline std::vector<GroundTruthBox> read_ground_truth(std::istream& in,
                                                     const std::map<int, std::string>& classes) {
    std::vector<GroundTruthBox> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int id = 0;
        GroundTruthBox g;
        if (!(ss >> id >> g.box.cx >> g.box.cy >> g.box.w >> g.box.h))
            throw parse_error("ground truth: bad line: " + line);
        const auto it = classes.find(id);
        if (it == classes.end()) throw parse_error("ground truth: unknown class id " + std::to_string(id));
        g.class_name = it->second;
        out.push_back(std::move(g));
    }
    return out;
}

inline void write_detections(std::ostream& out, const std::vector<Detection>& dets,
                             const std::map<int, std::string>& classes) {
    auto id_of = [&](const std::string& name) {
        for (const auto& [id, n] : classes)
            if (n == name) return id;
        throw invalid_argument_error("write_detections: class not in map: " + name);
    };
    out.precision(17);
    for (const auto& d : dets)
        out << id_of(d.class_name) << ' ' << d.box.cx << ' ' << d.box.cy << ' ' << d.box.w << ' '
            << d.box.h << ' ' << d.confidence << '\n';
}

}  // namespace fallchain
