#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fallchain/common.hpp"
#include "fallchain/preproc.hpp"

namespace fallchain {

enum class CellKind { simple_tanh, gated };

struct ParamBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;

    bool operator==(const ParamBlock&) const = default;
};

// Flat parameter vector plus a layout descriptor. The unit exchanged by the
// federated protocol; two values are aggregation-compatible iff layouts match.
struct ModelParams {
    std::vector<ParamBlock> layout;
    std::vector<double> data;
    int version = 1;

    bool compatible(const ModelParams& other) const { return layout == other.layout; }
};

inline ModelParams sgd_step(ModelParams params, const ModelParams& grads, double eta) {
    if (!params.compatible(grads) || params.data.size() != grads.data.size())
        throw invalid_argument_error("sgd_step: parameter/gradient layout mismatch");
    if (!all_finite(grads.data)) throw invalid_argument_error("sgd_step: non-finite gradient");
    for (std::size_t i = 0; i < params.data.size(); ++i) params.data[i] -= eta * grads.data[i];
    return params;
}

inline double mse_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size() || pred.empty())
        throw invalid_argument_error("mse_loss: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

inline double cce_loss(const std::vector<double>& probs, std::size_t label) {
    if (label >= probs.size()) throw invalid_argument_error("cce_loss: label out of range");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6) throw invalid_argument_error("cce_loss: probs do not sum to 1");
    return -std::log(std::max(probs[label], 1e-300));
}

namespace nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = W x + b, W row-major (out x in)
struct Dense {
    std::size_t in = 0, out = 0;
    std::vector<double> w, b;
    std::vector<double> gw, gb;

    void init(std::size_t in_, std::size_t out_, std::mt19937_64& rng) {
        in = in_;
        out = out_;
        w.resize(out * in);
        b.assign(out, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-s, s);
        for (auto& v : w) v = dist(rng);
    }

    std::vector<double> forward(const std::vector<double>& x) const {
        std::vector<double> y(out);
        for (std::size_t r = 0; r < out; ++r) {
            double acc = b[r];
            const double* wr = &w[r * in];
            for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x[c];
            y[r] = acc;
        }
        return y;
    }

    // accumulates gw/gb, returns dx
    std::vector<double> backward(const std::vector<double>& x, const std::vector<double>& dy) {
        std::vector<double> dx(in, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            const double g = dy[r];
            gb[r] += g;
            double* gwr = &gw[r * in];
            const double* wr = &w[r * in];
            for (std::size_t c = 0; c < in; ++c) {
                gwr[c] += g * x[c];
                dx[c] += wr[c] * g;
            }
        }
        return dx;
    }

    void zero_grads() {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
    }
};

struct RecurrentCache {
    // per-timestep activations; gated additionally stores gate values
    std::vector<std::vector<double>> x, h, gi, gf, gg, go, c;
};

// Recurrent layer over a sequence. Gated variant is a standard LSTM cell
// (gates ordered i,f,g,o in the weight matrix); simple variant is
// h_t = tanh(W [x_t; h_{t-1}] + b), kept for fast gradient checks.
struct RecurrentLayer {
    CellKind kind = CellKind::gated;
    std::size_t in = 0, hidden = 0;
    std::vector<double> w, b;  // (gates*H) x (in+H), gates*H
    std::vector<double> gw, gb;

    std::size_t gates() const { return kind == CellKind::gated ? 4 : 1; }

    void init(std::size_t in_, std::size_t hidden_, CellKind kind_, std::mt19937_64& rng) {
        kind = kind_;
        in = in_;
        hidden = hidden_;
        const std::size_t rows = gates() * hidden;
        const std::size_t cols = in + hidden;
        w.resize(rows * cols);
        b.assign(rows, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
        const double s = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> dist(-s, s);
        for (auto& v : w) v = dist(rng);
    }

    // seq: T rows of `in` values; returns T rows of `hidden` values
    std::vector<std::vector<double>> forward(const std::vector<std::vector<double>>& seq,
                                             RecurrentCache& cache) const {
        const std::size_t cols = in + hidden;
        const std::size_t rows = gates() * hidden;
        std::vector<double> h_prev(hidden, 0.0), c_prev(hidden, 0.0);
        std::vector<double> xh(cols), z(rows);
        cache = {};
        std::vector<std::vector<double>> out;
        out.reserve(seq.size());
        for (const auto& x : seq) {
            std::copy(x.begin(), x.end(), xh.begin());
            std::copy(h_prev.begin(), h_prev.end(), xh.begin() + static_cast<std::ptrdiff_t>(in));
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = b[r];
                const double* wr = &w[r * cols];
                for (std::size_t cidx = 0; cidx < cols; ++cidx) acc += wr[cidx] * xh[cidx];
                z[r] = acc;
            }
            std::vector<double> h(hidden);
            if (kind == CellKind::gated) {
                std::vector<double> gi(hidden), gf(hidden), gg(hidden), go(hidden), c(hidden);
                for (std::size_t u = 0; u < hidden; ++u) {
                    gi[u] = sigmoid(z[u]);
                    gf[u] = sigmoid(z[hidden + u]);
                    gg[u] = std::tanh(z[2 * hidden + u]);
                    go[u] = sigmoid(z[3 * hidden + u]);
                    c[u] = gf[u] * c_prev[u] + gi[u] * gg[u];
                    h[u] = go[u] * std::tanh(c[u]);
                }
                cache.gi.push_back(gi);
                cache.gf.push_back(gf);
                cache.gg.push_back(gg);
                cache.go.push_back(go);
                cache.c.push_back(c);
                c_prev = cache.c.back();
            } else {
                for (std::size_t u = 0; u < hidden; ++u) h[u] = std::tanh(z[u]);
            }
            cache.x.push_back(x);
            cache.h.push_back(h);
            h_prev = h;
            out.push_back(std::move(h));
        }
        return out;
    }

    // dout: T rows of `hidden`; accumulates gw/gb, returns T rows of `in`
    std::vector<std::vector<double>> backward(const RecurrentCache& cache,
                                              const std::vector<std::vector<double>>& dout) {
        const std::size_t T = cache.x.size();
        const std::size_t cols = in + hidden;
        std::vector<std::vector<double>> dinput(T, std::vector<double>(in, 0.0));
        std::vector<double> dh_next(hidden, 0.0), dc_next(hidden, 0.0);
        std::vector<double> dz(gates() * hidden), xh(cols);
        for (std::size_t ti = T; ti-- > 0;) {
            const auto& x = cache.x[ti];
            const std::vector<double> zero(hidden, 0.0);
            const auto& h_prev = ti > 0 ? cache.h[ti - 1] : zero;
            std::vector<double> dh(hidden);
            for (std::size_t u = 0; u < hidden; ++u) dh[u] = dout[ti][u] + dh_next[u];

            if (kind == CellKind::gated) {
                const auto& gi = cache.gi[ti];
                const auto& gf = cache.gf[ti];
                const auto& gg = cache.gg[ti];
                const auto& go = cache.go[ti];
                const auto& c = cache.c[ti];
                const auto& c_prev = ti > 0 ? cache.c[ti - 1] : zero;
                for (std::size_t u = 0; u < hidden; ++u) {
                    const double tc = std::tanh(c[u]);
                    const double dc = dc_next[u] + dh[u] * go[u] * (1.0 - tc * tc);
                    dz[u] = dc * gg[u] * gi[u] * (1.0 - gi[u]);
                    dz[hidden + u] = dc * c_prev[u] * gf[u] * (1.0 - gf[u]);
                    dz[2 * hidden + u] = dc * gi[u] * (1.0 - gg[u] * gg[u]);
                    dz[3 * hidden + u] = dh[u] * tc * go[u] * (1.0 - go[u]);
                    dc_next[u] = dc * gf[u];
                }
            } else {
                const auto& h = cache.h[ti];
                for (std::size_t u = 0; u < hidden; ++u) dz[u] = dh[u] * (1.0 - h[u] * h[u]);
            }

            std::copy(x.begin(), x.end(), xh.begin());
            std::copy(h_prev.begin(), h_prev.end(), xh.begin() + static_cast<std::ptrdiff_t>(in));
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            for (std::size_t r = 0; r < dz.size(); ++r) {
                const double g = dz[r];
                gb[r] += g;
                double* gwr = &gw[r * cols];
                const double* wr = &w[r * cols];
                for (std::size_t cidx = 0; cidx < in; ++cidx) {
                    gwr[cidx] += g * xh[cidx];
                    dinput[ti][cidx] += wr[cidx] * g;
                }
                for (std::size_t cidx = in; cidx < cols; ++cidx) {
                    gwr[cidx] += g * xh[cidx];
                    dh_next[cidx - in] += wr[cidx] * g;
                }
            }
        }
        return dinput;
    }

    void zero_grads() {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
    }
};

}  // namespace nn

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;  // 0 = full batch
    std::uint64_t seed = 1;
    CellKind cell_kind = CellKind::gated;
};

struct AutoencoderConfig {
    std::vector<std::size_t> hidden_sizes = {32, 16, 8};  // encoder stack, narrowing
    std::size_t input_channels = kNumChannels;
    CellKind cell_kind = CellKind::gated;
};

// Recurrent sequence autoencoder: stacked encoder, final hidden state as the
// code, mirrored decoder fed the repeated code, per-timestep linear readout.
class AutoencoderModel {
  public:
    AutoencoderModel() = default;

    static AutoencoderModel init(const AutoencoderConfig& cfg, std::uint64_t seed) {
        if (cfg.hidden_sizes.empty()) throw invalid_argument_error("autoencoder: need >= 1 hidden size");
        AutoencoderModel m;
        m.cfg_ = cfg;
        std::mt19937_64 rng(derive_seed(seed, "autoencoder_init"));
        std::size_t in = cfg.input_channels;
        for (std::size_t h : cfg.hidden_sizes) {
            nn::RecurrentLayer layer;
            layer.init(in, h, cfg.cell_kind, rng);
            m.encoder_.push_back(std::move(layer));
            in = h;
        }
        for (std::size_t i = cfg.hidden_sizes.size(); i-- > 0;) {
            nn::RecurrentLayer layer;
            layer.init(in, cfg.hidden_sizes[i], cfg.cell_kind, rng);
            m.decoder_.push_back(std::move(layer));
            in = cfg.hidden_sizes[i];
        }
        m.readout_.init(in, cfg.input_channels, rng);
        return m;
    }

    const AutoencoderConfig& config() const { return cfg_; }
    std::size_t code_size() const { return cfg_.hidden_sizes.back(); }

    std::vector<std::vector<double>> window_rows(const Window& w) const {
        if (w.rows == 0 || w.values.size() != w.rows * cfg_.input_channels)
            throw invalid_argument_error("autoencoder: window shape mismatch");
        std::vector<std::vector<double>> rows(w.rows, std::vector<double>(cfg_.input_channels));
        for (std::size_t r = 0; r < w.rows; ++r)
            for (std::size_t c = 0; c < cfg_.input_channels; ++c) rows[r][c] = w.at(r, c);
        return rows;
    }

    // reconstruction, same shape as the window
    std::vector<double> forward(const Window& w) const {
        auto seq = window_rows(w);
        std::vector<nn::RecurrentCache> caches(encoder_.size() + decoder_.size());
        return forward_impl(seq, caches);
    }

    std::vector<double> encode(const Window& w) const {
        auto seq = window_rows(w);
        nn::RecurrentCache cache;
        for (const auto& layer : encoder_) seq = layer.forward(seq, cache);
        return seq.back();
    }

    // Mean reconstruction MSE over the batch; accumulates gradients.
    double backward_batch(const std::vector<Window>& batch) {
        if (batch.empty()) throw invalid_argument_error("autoencoder: empty batch");
        double total = 0.0;
        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        for (const auto& w : batch) {
            auto input = window_rows(w);
            std::vector<nn::RecurrentCache> caches(encoder_.size() + decoder_.size());
            std::vector<std::vector<std::vector<double>>> layer_inputs;
            auto seq = input;
            for (std::size_t i = 0; i < encoder_.size(); ++i) {
                layer_inputs.push_back(seq);
                seq = encoder_[i].forward(seq, caches[i]);
            }
            const auto code = seq.back();
            const std::size_t T = input.size();
            std::vector<std::vector<double>> dec_seq(T, code);
            for (std::size_t i = 0; i < decoder_.size(); ++i) {
                layer_inputs.push_back(dec_seq);
                dec_seq = decoder_[i].forward(dec_seq, caches[encoder_.size() + i]);
            }
            // per-timestep readout + MSE gradient
            const double scale = 2.0 / static_cast<double>(T * cfg_.input_channels) * inv_batch;
            std::vector<std::vector<double>> d_dec(T);
            for (std::size_t ti = 0; ti < T; ++ti) {
                const auto recon = readout_.forward(dec_seq[ti]);
                std::vector<double> dy(cfg_.input_channels);
                for (std::size_t c = 0; c < cfg_.input_channels; ++c) {
                    const double diff = recon[c] - input[ti][c];
                    total += diff * diff;
                    dy[c] = scale * diff;
                }
                d_dec[ti] = readout_.backward(dec_seq[ti], dy);
            }
            // decoder stack backward
            for (std::size_t i = decoder_.size(); i-- > 0;)
                d_dec = decoder_[i].backward(caches[encoder_.size() + i], d_dec);
            // gradient w.r.t. the repeated code, injected at the encoder's last step
            std::vector<double> d_code(code.size(), 0.0);
            for (const auto& row : d_dec)
                for (std::size_t u = 0; u < d_code.size(); ++u) d_code[u] += row[u];
            std::vector<std::vector<double>> d_enc(T, std::vector<double>(code.size(), 0.0));
            d_enc.back() = d_code;
            for (std::size_t i = encoder_.size(); i-- > 0;) d_enc = encoder_[i].backward(caches[i], d_enc);
        }
        const std::size_t elems = batch.front().rows * cfg_.input_channels;
        return total / static_cast<double>(batch.size() * elems);
    }

    double batch_loss(const std::vector<Window>& batch) const {
        if (batch.empty()) throw invalid_argument_error("autoencoder: empty batch");
        double total = 0.0;
        for (const auto& w : batch) total += mse_loss(forward(w), w.values);
        return total / static_cast<double>(batch.size());
    }

    void zero_grads() {
        for (auto& l : encoder_) l.zero_grads();
        for (auto& l : decoder_) l.zero_grads();
        readout_.zero_grads();
    }

    ModelParams get_params() const { return gather(false); }
    ModelParams get_grads() const { return gather(true); }

    void set_params(const ModelParams& p) {
        const ModelParams current = get_params();
        if (!current.compatible(p) || current.data.size() != p.data.size())
            throw invalid_argument_error("autoencoder: parameter layout mismatch");
        std::size_t off = 0;
        auto load = [&](std::vector<double>& dst) {
            std::copy(p.data.begin() + static_cast<std::ptrdiff_t>(off),
                      p.data.begin() + static_cast<std::ptrdiff_t>(off + dst.size()), dst.begin());
            off += dst.size();
        };
        for (auto& l : encoder_) {
            load(l.w);
            load(l.b);
        }
        for (auto& l : decoder_) {
            load(l.w);
            load(l.b);
        }
        load(readout_.w);
        load(readout_.b);
    }

    const std::vector<nn::RecurrentLayer>& encoder_layers() const { return encoder_; }

  private:
    friend class ClassifierModel;

    std::vector<double> forward_impl(std::vector<std::vector<double>> seq,
                                     std::vector<nn::RecurrentCache>& caches) const {
        for (std::size_t i = 0; i < encoder_.size(); ++i) seq = encoder_[i].forward(seq, caches[i]);
        const auto code = seq.back();
        const std::size_t T = caches[0].x.size();
        std::vector<std::vector<double>> dec_seq(T, code);
        for (std::size_t i = 0; i < decoder_.size(); ++i)
            dec_seq = decoder_[i].forward(dec_seq, caches[encoder_.size() + i]);
        std::vector<double> recon(T * cfg_.input_channels);
        for (std::size_t ti = 0; ti < T; ++ti) {
            const auto y = readout_.forward(dec_seq[ti]);
            std::copy(y.begin(), y.end(), recon.begin() + static_cast<std::ptrdiff_t>(ti * cfg_.input_channels));
        }
        return recon;
    }

    ModelParams gather(bool grads) const {
        ModelParams p;
        auto add = [&](const std::string& name, const std::vector<double>& values, std::size_t rows,
                       std::size_t cols) {
            p.layout.push_back({name, rows, cols});
            p.data.insert(p.data.end(), values.begin(), values.end());
        };
        for (std::size_t i = 0; i < encoder_.size(); ++i) {
            const auto& l = encoder_[i];
            add("enc" + std::to_string(i) + ".w", grads ? l.gw : l.w, l.gates() * l.hidden, l.in + l.hidden);
            add("enc" + std::to_string(i) + ".b", grads ? l.gb : l.b, l.gates() * l.hidden, 1);
        }
        for (std::size_t i = 0; i < decoder_.size(); ++i) {
            const auto& l = decoder_[i];
            add("dec" + std::to_string(i) + ".w", grads ? l.gw : l.w, l.gates() * l.hidden, l.in + l.hidden);
            add("dec" + std::to_string(i) + ".b", grads ? l.gb : l.b, l.gates() * l.hidden, 1);
        }
        add("readout.w", grads ? readout_.gw : readout_.w, readout_.out, readout_.in);
        add("readout.b", grads ? readout_.gb : readout_.b, readout_.out, 1);
        return p;
    }

    AutoencoderConfig cfg_;
    std::vector<nn::RecurrentLayer> encoder_;
    std::vector<nn::RecurrentLayer> decoder_;
    nn::Dense readout_;
};

inline std::vector<double> softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

struct ClassifierConfig {
    std::size_t head_hidden = 16;
    std::size_t num_classes = 2;
};

// Frozen-encoder classifier: the autoencoder's encoder stack as a feature
// extractor, plus a small fully connected head with softmax output. Only the
// head receives gradients.
class ClassifierModel {
  public:
    ClassifierModel() = default;

    static ClassifierModel init(const AutoencoderModel& trained, const ClassifierConfig& cfg,
                                std::uint64_t seed) {
        ClassifierModel m;
        m.cfg_ = cfg;
        m.encoder_ = trained;  // decoder kept for layout stability; unused at inference
        std::mt19937_64 rng(derive_seed(seed, "classifier_init"));
        m.hidden_.init(trained.code_size(), cfg.head_hidden, rng);
        m.output_.init(cfg.head_hidden, cfg.num_classes, rng);
        return m;
    }

    std::vector<double> forward(const Window& w) const {
        const auto code = encoder_.encode(w);
        auto a1 = hidden_.forward(code);
        for (auto& v : a1) v = std::tanh(v);
        return softmax(output_.forward(a1));
    }

    std::size_t predict(const Window& w) const {
        const auto p = forward(w);
        return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    }

    // Mean cross-entropy over the batch; gradients flow into the head only.
    double backward_batch(const std::vector<LabeledWindow>& batch) {
        if (batch.empty()) throw invalid_argument_error("classifier: empty batch");
        double total = 0.0;
        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        for (const auto& lw : batch) {
            const auto code = encoder_.encode(lw.window);
            auto z1 = hidden_.forward(code);
            auto a1 = z1;
            for (auto& v : a1) v = std::tanh(v);
            const auto p = softmax(output_.forward(a1));
            total += -std::log(std::max(p[static_cast<std::size_t>(lw.label)], 1e-300));
            std::vector<double> dz2 = p;
            dz2[static_cast<std::size_t>(lw.label)] -= 1.0;
            for (auto& v : dz2) v *= inv_batch;
            auto da1 = output_.backward(a1, dz2);
            for (std::size_t u = 0; u < da1.size(); ++u) da1[u] *= 1.0 - a1[u] * a1[u];
            hidden_.backward(code, da1);  // encoder stays frozen
        }
        return total * inv_batch;
    }

    void zero_grads() {
        hidden_.zero_grads();
        output_.zero_grads();
    }

    ModelParams get_params() const { return gather(false); }
    ModelParams get_grads() const { return gather(true); }

    void set_params(const ModelParams& p) {
        const ModelParams current = get_params();
        if (!current.compatible(p) || current.data.size() != p.data.size())
            throw invalid_argument_error("classifier: parameter layout mismatch");
        const std::size_t head_size = hidden_.w.size() + hidden_.b.size() + output_.w.size() + output_.b.size();
        const std::size_t enc_size = p.data.size() - head_size;
        ModelParams enc = encoder_.get_params();
        std::copy(p.data.begin(), p.data.begin() + static_cast<std::ptrdiff_t>(enc_size), enc.data.begin());
        encoder_.set_params(enc);
        std::size_t off = enc_size;
        auto load = [&](std::vector<double>& dst) {
            std::copy(p.data.begin() + static_cast<std::ptrdiff_t>(off),
                      p.data.begin() + static_cast<std::ptrdiff_t>(off + dst.size()), dst.begin());
            off += dst.size();
        };
        load(hidden_.w);
        load(hidden_.b);
        load(output_.w);
        load(output_.b);
    }

    const AutoencoderModel& encoder() const { return encoder_; }
    const ClassifierConfig& config() const { return cfg_; }

  private:
    ModelParams gather(bool grads) const {
        ModelParams p = grads ? zero_encoder_grads() : encoder_.get_params();
        auto add = [&](const std::string& name, const std::vector<double>& values, std::size_t rows,
                       std::size_t cols) {
            p.layout.push_back({name, rows, cols});
            p.data.insert(p.data.end(), values.begin(), values.end());
        };
        add("head0.w", grads ? hidden_.gw : hidden_.w, hidden_.out, hidden_.in);
        add("head0.b", grads ? hidden_.gb : hidden_.b, hidden_.out, 1);
        add("head1.w", grads ? output_.gw : output_.w, output_.out, output_.in);
        add("head1.b", grads ? output_.gb : output_.b, output_.out, 1);
        return p;
    }

    ModelParams zero_encoder_grads() const {
        ModelParams p = encoder_.get_params();
        std::fill(p.data.begin(), p.data.end(), 0.0);
        return p;
    }

    ClassifierConfig cfg_;
    AutoencoderModel encoder_;
    nn::Dense hidden_;
    nn::Dense output_;
};

// Central-difference gradient verification on up to max_coords randomly
// chosen coordinates. Returns the max relative error. first_coord restricts
// the check to a suffix of the flat vector (the head of a frozen-encoder
// classifier, whose encoder gradients are zero by contract).
template <typename Model, typename Batch>
double grad_check(Model& model, const Batch& batch, double eps = 1e-5, std::size_t max_coords = 2000,
                  std::uint64_t seed = 42, std::size_t first_coord = 0) {
    model.zero_grads();
    model.backward_batch(batch);
    const ModelParams analytic = model.get_grads();
    ModelParams params = model.get_params();

    std::vector<std::size_t> coords(params.data.size() - first_coord);
    std::iota(coords.begin(), coords.end(), first_coord);
    if (coords.size() > max_coords) {
        std::mt19937_64 rng(derive_seed(seed, "grad_check"));
        for (std::size_t i = 0; i < max_coords; ++i) {
            std::uniform_int_distribution<std::size_t> dist(i, coords.size() - 1);
            std::swap(coords[i], coords[dist(rng)]);
        }
        coords.resize(max_coords);
    }

    auto loss_at = [&](std::size_t idx, double value) {
        ModelParams p = params;
        p.data[idx] = value;
        model.set_params(p);
        model.zero_grads();
        return model.backward_batch(batch);
    };

    double max_rel = 0.0;
    for (std::size_t idx : coords) {
        const double orig = params.data[idx];
        const double lp = loss_at(idx, orig + eps);
        const double lm = loss_at(idx, orig - eps);
        const double numeric = (lp - lm) / (2.0 * eps);
        const double a = analytic.data[idx];
        // the floor keeps coordinates with near-zero true gradient from
        // amplifying central-difference cancellation noise (~1e-11 absolute
        // at eps=1e-5) into a spurious relative error
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
    model.set_params(params);
    model.zero_grads();
    return max_rel;
}

}  // namespace fallchain
