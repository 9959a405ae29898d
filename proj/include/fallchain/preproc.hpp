#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fallchain/common.hpp"
#include "fallchain/signal_io.hpp"

namespace fallchain {

inline constexpr int kNumChannels = 6;

// 6 parallel channel sequences over a shared, strictly increasing time axis.
struct TimeSeries {
    std::vector<double> t;
    std::array<std::vector<double>, kNumChannels> channels;

    std::size_t size() const { return t.size(); }
};

inline TimeSeries to_time_series(const std::vector<SensorSample>& samples) {
    TimeSeries ts;
    ts.t.reserve(samples.size());
    for (auto& ch : ts.channels) ch.reserve(samples.size());
    for (const auto& s : samples) {
        ts.t.push_back(s.t);
        for (int c = 0; c < 3; ++c) ts.channels[static_cast<std::size_t>(c)].push_back(s.a[static_cast<std::size_t>(c)]);
        for (int c = 0; c < 3; ++c) ts.channels[static_cast<std::size_t>(3 + c)].push_back(s.w[static_cast<std::size_t>(c)]);
    }
    return ts;
}

// l x 6 slice of a preprocessed series.
struct Window {
    std::vector<double> values;  // row-major, rows x kNumChannels
    std::size_t rows = 0;
    std::string source_trial;
    std::size_t start_index = 0;

    double& at(std::size_t r, std::size_t c) { return values[r * kNumChannels + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * kNumChannels + c]; }
};

struct LabeledWindow {
    Window window;
    int label = 0;  // 0 = ADL, 1 = fall
};

struct NormBounds {
    std::array<double, kNumChannels> min{};
    std::array<double, kNumChannels> max{};
    std::array<bool, kNumChannels> degenerate{};  // min == max; channel maps to 0
};

struct PreprocConfig {
    double resample_hz = 50.0;
    std::size_t window_len = 40;
    std::size_t step = 10;
    double ewma_alpha = 0.3;
    std::size_t savgol_window = 5;
    std::size_t savgol_order = 2;
    bool ewma_enabled = true;
    bool savgol_enabled = true;
    std::size_t trim_margin = 80;  // samples kept either side of the impact peak
};

// Linear interpolation onto a uniform grid at 1/f spacing over [t0, t_end].
inline TimeSeries resample(const TimeSeries& ts, double f) {
    if (ts.size() < 2) throw invalid_argument_error("resample: series too short");
    if (f <= 0) throw invalid_argument_error("resample: rate must be positive");
    const double t0 = ts.t.front();
    const double t_end = ts.t.back();
    const double dt = 1.0 / f;
    TimeSeries out;
    std::size_t src = 0;
    for (std::size_t i = 0;; ++i) {
        double t = t0 + static_cast<double>(i) * dt;
        if (t > t_end + 1e-12) break;
        t = std::min(t, t_end);
        while (src + 2 < ts.size() && ts.t[src + 1] <= t) ++src;
        const double span = ts.t[src + 1] - ts.t[src];
        const double u = span > 0 ? (t - ts.t[src]) / span : 0.0;
        out.t.push_back(t);
        for (int c = 0; c < kNumChannels; ++c) {
            const auto& ch = ts.channels[static_cast<std::size_t>(c)];
            out.channels[static_cast<std::size_t>(c)].push_back(ch[src] + u * (ch[src + 1] - ch[src]));
        }
    }
    return out;
}

// y0 = x0, y_t = alpha*x_t + (1-alpha)*y_{t-1}  (recursive, non-adjusted form)
inline TimeSeries ewma(const TimeSeries& ts, double alpha) {
    if (alpha <= 0 || alpha > 1) throw invalid_argument_error("ewma: alpha must be in (0,1]");
    TimeSeries out = ts;
    for (auto& ch : out.channels) {
        for (std::size_t i = 1; i < ch.size(); ++i) ch[i] = alpha * ch[i] + (1.0 - alpha) * ch[i - 1];
    }
    return out;
}

namespace detail {

// Least-squares polynomial fit over integer offsets xs, returns coefficients
// c0 + c1*x + ... + cp*x^p. Normal equations with Gaussian elimination;
// windows are tiny so conditioning is not a concern.
inline std::vector<double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                                   std::size_t order) {
    const std::size_t m = order + 1;
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::vector<double> powers(2 * m - 1);
        powers[0] = 1.0;
        for (std::size_t p = 1; p < 2 * m - 1; ++p) powers[p] = powers[p - 1] * xs[i];
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) a[r][c] += powers[r + c];
            a[r][m] += powers[r] * ys[i];
        }
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
        }
    }
    std::vector<double> coeffs(m);
    for (std::size_t r = 0; r < m; ++r) coeffs[r] = a[r][m] / a[r][r];
    return coeffs;
}

inline double polyval(const std::vector<double>& coeffs, double x) {
    double y = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) y = y * x + coeffs[i];
    return y;
}

}  // namespace detail

// Savitzky-Golay: interior points take the least-squares fit value at the
// window center; edges evaluate the terminal-window fits at their offsets, so
// the output length stays aligned with the timestamps.
inline TimeSeries savgol(const TimeSeries& ts, std::size_t window = 5, std::size_t order = 2) {
    if (window % 2 == 0 || window < 3) throw invalid_argument_error("savgol: window must be odd and >= 3");
    if (order >= window) throw invalid_argument_error("savgol: order must be < window");
    if (ts.size() < window) throw invalid_argument_error("savgol: series too short");
    const std::size_t hw = window / 2;
    const std::size_t n = ts.size();
    std::vector<double> xs(window);
    for (std::size_t i = 0; i < window; ++i) xs[i] = static_cast<double>(i) - static_cast<double>(hw);

    TimeSeries out = ts;
    std::vector<double> ys(window);
    for (int c = 0; c < kNumChannels; ++c) {
        const auto& src = ts.channels[static_cast<std::size_t>(c)];
        auto& dst = out.channels[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t center = std::clamp(i, hw, n - 1 - hw);
            for (std::size_t j = 0; j < window; ++j) ys[j] = src[center - hw + j];
            const auto coeffs = detail::polyfit(xs, ys, order);
            dst[i] = detail::polyval(coeffs, static_cast<double>(i) - static_cast<double>(center));
        }
    }
    return out;
}

// Overlapping sliding windows: count = floor((n - l)/step) + 1.
inline std::vector<Window> make_windows(const TimeSeries& ts, std::size_t l, std::size_t step,
                                        const std::string& source = {}) {
    if (l < 2) throw invalid_argument_error("make_windows: l must be >= 2");
    if (step < 1) throw invalid_argument_error("make_windows: step must be >= 1");
    if (ts.size() < l) throw invalid_argument_error("make_windows: series too short");
    const std::size_t count = (ts.size() - l) / step + 1;
    std::vector<Window> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        Window win;
        win.rows = l;
        win.source_trial = source;
        win.start_index = w * step;
        win.values.resize(l * kNumChannels);
        for (std::size_t r = 0; r < l; ++r)
            for (int c = 0; c < kNumChannels; ++c)
                win.at(r, static_cast<std::size_t>(c)) =
                    ts.channels[static_cast<std::size_t>(c)][win.start_index + r];
        out.push_back(std::move(win));
    }
    return out;
}

inline NormBounds fit_normalizer(const std::vector<Window>& windows) {
    if (windows.empty()) throw invalid_argument_error("fit_normalizer: empty training set");
    NormBounds b;
    b.min.fill(std::numeric_limits<double>::infinity());
    b.max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& w : windows) {
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                b.min[c] = std::min(b.min[c], w.at(r, c));
                b.max[c] = std::max(b.max[c], w.at(r, c));
            }
        }
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) b.degenerate[c] = (b.min[c] == b.max[c]);
    return b;
}

// x -> 2(x - min)/(max - min) - 1. Bounds are frozen: test values may land
// outside [-1, 1]; degenerate channels map to 0.
inline Window apply_normalizer(const Window& w, const NormBounds& b) {
    Window out = w;
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            if (b.degenerate[c]) {
                out.at(r, c) = 0.0;
            } else {
                out.at(r, c) = 2.0 * (w.at(r, c) - b.min[c]) / (b.max[c] - b.min[c]) - 1.0;
            }
        }
    }
    return out;
}

// F* -> 1 (fall), D* -> 0 (ADL)
inline int label_activity(const std::string& code) {
    if (!valid_activity_code(code)) throw invalid_argument_error("unknown activity code: " + code);
    return code[0] == 'F' ? 1 : 0;
}

// Sub-series centered on the impact instant (argmax of the acceleration
// magnitude, lowest index on ties), clipped to the series bounds.
inline TimeSeries trim_fall(const TimeSeries& ts, std::size_t margin = 80) {
    if (ts.size() == 0) throw invalid_argument_error("trim_fall: empty series");
    std::size_t peak = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double mag2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double v = ts.channels[static_cast<std::size_t>(c)][i];
            mag2 += v * v;
        }
        if (mag2 > best) {
            best = mag2;
            peak = i;
        }
    }
    const std::size_t lo = peak > margin ? peak - margin : 0;
    const std::size_t hi = std::min(peak + margin, ts.size() - 1);
    TimeSeries out;
    out.t.assign(ts.t.begin() + static_cast<std::ptrdiff_t>(lo), ts.t.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    for (std::size_t c = 0; c < kNumChannels; ++c)
        out.channels[c].assign(ts.channels[c].begin() + static_cast<std::ptrdiff_t>(lo),
                               ts.channels[c].begin() + static_cast<std::ptrdiff_t>(hi + 1));
    return out;
}

// r = (k*J)/(f*l)
inline double sample_count(double k, double j, double f, double l) {
    if (f == 0.0 || l == 0.0) throw invalid_argument_error("sample_count: division by zero");
    return (k * j) / (f * l);
}

// The full cleaning pipeline for one trace: resample, optional EWMA and
// Savitzky-Golay, fall trimming, then sliding windows.
inline std::vector<Window> preprocess_trace(const std::vector<SensorSample>& samples, int label,
                                            const PreprocConfig& cfg, const std::string& source = {}) {
    TimeSeries ts = to_time_series(samples);
    ts = resample(ts, cfg.resample_hz);
    if (cfg.ewma_enabled) ts = ewma(ts, cfg.ewma_alpha);
    if (cfg.savgol_enabled && ts.size() >= cfg.savgol_window) ts = savgol(ts, cfg.savgol_window, cfg.savgol_order);
    if (label == 1) ts = trim_fall(ts, cfg.trim_margin);
    if (ts.size() < cfg.window_len) return {};
    return make_windows(ts, cfg.window_len, cfg.step, source);
}

}  // namespace fallchain
