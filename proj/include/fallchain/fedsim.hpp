#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fallchain/common.hpp"
#include "fallchain/nnkernel.hpp"
#include "fallchain/preproc.hpp"

namespace fallchain {

// Subject-level split: 30% of subjects form the labeled benchmark set L, the
// remaining 70% (D) are divided 85/15 into client-train and held-out-test
// users. No subject's windows ever cross splits.
struct SplitPlan {
    std::vector<std::string> labeled_users;
    std::vector<std::string> train_users;
    std::vector<std::string> test_users;
    std::uint64_t seed = 0;
};

inline SplitPlan make_split(std::vector<std::string> subjects, std::uint64_t seed) {
    if (subjects.size() < 4) throw invalid_argument_error("make_split: need >= 4 subjects");
    std::sort(subjects.begin(), subjects.end());
    // Fisher-Yates with an explicit engine so the plan is stable across
    // standard library implementations.
    std::mt19937_64 rng(derive_seed(seed, "make_split"));
    for (std::size_t i = subjects.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> dist(0, i);
        std::swap(subjects[i], subjects[dist(rng)]);
    }
    const auto half_up = [](double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); };
    const std::size_t n = subjects.size();
    const std::size_t n_labeled = half_up(0.3 * static_cast<double>(n));
    const std::size_t n_rest = n - n_labeled;
    const std::size_t n_train = half_up(0.85 * static_cast<double>(n_rest));

    SplitPlan plan;
    plan.seed = seed;
    plan.labeled_users.assign(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_labeled));
    plan.train_users.assign(subjects.begin() + static_cast<std::ptrdiff_t>(n_labeled),
                            subjects.begin() + static_cast<std::ptrdiff_t>(n_labeled + n_train));
    plan.test_users.assign(subjects.begin() + static_cast<std::ptrdiff_t>(n_labeled + n_train), subjects.end());
    return plan;
}

struct ClassificationMetrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double acc = 0, pr = 0, re = 0, f1 = 0;
};

// One simulated edge device: its unlabeled windows never leave this value.
struct ClientData {
    std::string client_id;
    std::vector<Window> windows;
};

struct FedConfig {
    TrainConfig train;
    AutoencoderConfig arch;
    std::size_t rounds = 50;
};

struct RoundLogEntry {
    std::size_t round = 0;
    double mean_recon_loss = 0.0;
    double wall_ms = 0.0;
};

namespace detail {

// One epoch of SGD over the windows in deterministic order. Returns the mean
// batch loss weighted by batch size. Batches are taken in sequence, never
// shuffled, so a single federated client is arithmetically identical to the
// centralized loop.
inline double train_epoch(AutoencoderModel& model, const std::vector<Window>& windows,
                          const TrainConfig& cfg) {
    const std::size_t bs = cfg.batch_size == 0 ? windows.size() : std::min(cfg.batch_size, windows.size());
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < windows.size(); start += bs) {
        const std::size_t end = std::min(start + bs, windows.size());
        std::vector<Window> batch(windows.begin() + static_cast<std::ptrdiff_t>(start),
                                  windows.begin() + static_cast<std::ptrdiff_t>(end));
        model.zero_grads();
        const double loss = model.backward_batch(batch);
        model.set_params(sgd_step(model.get_params(), model.get_grads(), cfg.learning_rate));
        loss_sum += loss * static_cast<double>(batch.size());
        count += batch.size();
    }
    return loss_sum / static_cast<double>(count);
}

}  // namespace detail

// Exactly one local epoch starting from the broadcast global parameters.
inline std::pair<ModelParams, double> local_train_round(const ClientData& client,
                                                        const ModelParams& global_params,
                                                        const FedConfig& cfg) {
    if (client.windows.empty()) throw invalid_argument_error("local_train_round: client has no windows");
    AutoencoderModel model = AutoencoderModel::init(cfg.arch, cfg.train.seed);
    model.set_params(global_params);
    TrainConfig local = cfg.train;
    local.seed = derive_seed(cfg.train.seed, "client:" + client.client_id);
    const double loss = detail::train_epoch(model, client.windows, local);
    return {model.get_params(), loss};
}

// theta = sum r_i * theta_i / sum r_i. Weights are normalized first so the
// single-client case returns its parameters bit-exactly.
inline ModelParams fedavg(const std::vector<std::pair<ModelParams, double>>& updates) {
    if (updates.empty()) throw invalid_argument_error("fedavg: empty update set");
    double total = 0.0;
    for (const auto& [params, r] : updates) {
        if (r <= 0) throw invalid_argument_error("fedavg: non-positive weight");
        if (!params.compatible(updates.front().first) ||
            params.data.size() != updates.front().first.data.size())
            throw invalid_argument_error("fedavg: layout mismatch");
        total += r;
    }
    ModelParams out = updates.front().first;
    const double w0 = updates.front().second / total;
    for (auto& v : out.data) v *= w0;
    for (std::size_t i = 1; i < updates.size(); ++i) {
        const double w = updates[i].second / total;
        for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += w * updates[i].first.data[j];
    }
    return out;
}

struct FederatedResult {
    AutoencoderModel model;
    std::vector<RoundLogEntry> log;
};

// rounds x (broadcast, local epoch per client, aggregate). Clients are
// processed in client_id order; per-client seeds keep results independent of
// execution order.
inline FederatedResult run_federated(std::vector<ClientData> clients, const FedConfig& cfg) {
    if (clients.empty()) throw invalid_argument_error("run_federated: need >= 1 client");
    std::sort(clients.begin(), clients.end(),
              [](const ClientData& a, const ClientData& b) { return a.client_id < b.client_id; });

    FederatedResult result;
    result.model = AutoencoderModel::init(cfg.arch, cfg.train.seed);
    ModelParams global = result.model.get_params();
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::pair<ModelParams, double>> updates;
        updates.reserve(clients.size());
        double loss_sum = 0.0;
        for (const auto& client : clients) {
            auto [params, loss] = local_train_round(client, global, cfg);
            updates.emplace_back(std::move(params), static_cast<double>(client.windows.size()));
            loss_sum += loss;
        }
        global = fedavg(updates);
        const auto t1 = std::chrono::steady_clock::now();
        result.log.push_back({round, loss_sum / static_cast<double>(clients.size()),
                              std::chrono::duration<double, std::milli>(t1 - t0).count()});
    }
    result.model.set_params(global);
    return result;
}

// Centralized baseline: plain epoch loop on the pooled training windows.
inline FederatedResult run_centralized(const std::vector<Window>& windows, const FedConfig& cfg) {
    if (windows.empty()) throw invalid_argument_error("run_centralized: empty dataset");
    FederatedResult result;
    result.model = AutoencoderModel::init(cfg.arch, cfg.train.seed);
    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double loss = detail::train_epoch(result.model, windows, cfg.train);
        const auto t1 = std::chrono::steady_clock::now();
        result.log.push_back({epoch, loss, std::chrono::duration<double, std::milli>(t1 - t0).count()});
    }
    return result;
}

// Trains the head on the labeled benchmark set; the encoder stays frozen
// (its gradients are zero, so SGD leaves it bit-identical).
inline ClassifierModel train_classifier(const AutoencoderModel& encoder,
                                        const std::vector<LabeledWindow>& labeled,
                                        const ClassifierConfig& head_cfg, const TrainConfig& cfg) {
    if (labeled.empty()) throw invalid_argument_error("train_classifier: empty labeled set");
    bool has0 = false, has1 = false;
    for (const auto& lw : labeled) (lw.label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw invalid_argument_error("train_classifier: single-class dataset");

    ClassifierModel model = ClassifierModel::init(encoder, head_cfg, cfg.seed);
    const std::size_t bs = cfg.batch_size == 0 ? labeled.size() : std::min(cfg.batch_size, labeled.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t start = 0; start < labeled.size(); start += bs) {
            const std::size_t end = std::min(start + bs, labeled.size());
            std::vector<LabeledWindow> batch(labeled.begin() + static_cast<std::ptrdiff_t>(start),
                                             labeled.begin() + static_cast<std::ptrdiff_t>(end));
            model.zero_grads();
            model.backward_batch(batch);
            model.set_params(sgd_step(model.get_params(), model.get_grads(), cfg.learning_rate));
        }
    }
    return model;
}

// Confusion counts and the four ratios; class 1 (fall) is positive.
inline ClassificationMetrics evaluate(const ClassifierModel& model,
                                      const std::vector<LabeledWindow>& test_set) {
    if (test_set.empty()) throw invalid_argument_error("evaluate: empty test set");
    ClassificationMetrics m;
    for (const auto& lw : test_set) {
        const bool pred_fall = model.predict(lw.window) == 1;
        const bool is_fall = lw.label == 1;
        if (pred_fall && is_fall) ++m.tp;
        else if (pred_fall && !is_fall) ++m.fp;
        else if (!pred_fall && is_fall) ++m.fn;
        else ++m.tn;
    }
    const double n = static_cast<double>(m.tp + m.tn + m.fp + m.fn);
    m.acc = static_cast<double>(m.tp + m.tn) / n;
    m.pr = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.re = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.pr + m.re) > 0 ? 2.0 * m.pr * m.re / (m.pr + m.re) : 0.0;
    return m;
}

}  // namespace fallchain
