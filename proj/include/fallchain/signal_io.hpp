#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fallchain/common.hpp"

namespace fallchain {

// One SisFall-style trial: 9 raw integer readings per timestamp
// (accelerometer1 x3, gyroscope x3, accelerometer2 x3).
struct RawTrial {
    std::string subject_id;
    std::string activity_code;  // F01..F15 or D01..D19
    int trial_index = 1;
    std::vector<std::array<int, 9>> rows;
};

struct SensorSample {
    double t = 0.0;           // seconds
    std::array<double, 3> a;  // g
    std::array<double, 3> w;  // deg/s
};

struct Packet {
    double t_j = 0.0;
    std::vector<SensorSample> samples;  // stored oldest -> newest
};

struct SensorScale {
    double range = 16.0;  // physical full-scale magnitude
    int resolution = 13;  // bits
};

inline bool valid_activity_code(const std::string& code) {
    if (code.size() != 3) return false;
    if (code[0] != 'F' && code[0] != 'D') return false;
    if (!std::isdigit(static_cast<unsigned char>(code[1])) ||
        !std::isdigit(static_cast<unsigned char>(code[2])))
        return false;
    int n = (code[1] - '0') * 10 + (code[2] - '0');
    if (code[0] == 'F') return n >= 1 && n <= 15;
    return n >= 1 && n <= 19;
}

struct TrialMeta {
    std::string subject_id;
    std::string activity_code;
    int trial_index = 1;
};

// Comma-separated integer rows, rows optionally terminated with ';'.
// Blank lines are tolerated and stripped.
inline RawTrial parse_trial(std::istream& in, const TrialMeta& meta) {
    if (!valid_activity_code(meta.activity_code))
        throw invalid_argument_error("unknown activity code: " + meta.activity_code);
    RawTrial trial;
    trial.subject_id = meta.subject_id;
    trial.activity_code = meta.activity_code;
    trial.trial_index = meta.trial_index;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip trailing ';' and whitespace
        while (!line.empty() && (line.back() == ';' || line.back() == '\r' ||
                                 line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::array<int, 9> row{};
        std::stringstream ss(line);
        std::string tok;
        int col = 0;
        while (std::getline(ss, tok, ',')) {
            if (col >= 9)
                throw parse_error("malformed row at line " + std::to_string(lineno) +
                                  ": more than 9 columns");
            std::size_t pos = 0;
            int value = 0;
            try {
                value = std::stoi(tok, &pos);
            } catch (const std::exception&) {
                throw parse_error("malformed row at line " + std::to_string(lineno) +
                                  ": non-integer token '" + tok + "'");
            }
            while (pos < tok.size() && (tok[pos] == ' ' || tok[pos] == '\t')) ++pos;
            if (pos != tok.size())
                throw parse_error("malformed row at line " + std::to_string(lineno) +
                                  ": non-integer token '" + tok + "'");
            row[col++] = value;
        }
        if (col != 9)
            throw parse_error("malformed row at line " + std::to_string(lineno) + ": expected 9 columns, got " +
                              std::to_string(col));
        trial.rows.push_back(row);
    }
    if (trial.rows.empty()) throw parse_error("empty trial file");
    return trial;
}

inline RawTrial parse_trial(const std::string& text, const TrialMeta& meta) {
    std::istringstream in(text);
    return parse_trial(in, meta);
}

inline void serialize_trial(const RawTrial& trial, std::ostream& out) {
    for (const auto& row : trial.rows) {
        for (int c = 0; c < 9; ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << ";\n";
    }
}

// value = raw * (2 * range / 2^resolution)
inline double convert_raw(int raw, const SensorScale& scale) {
    if (scale.range <= 0) throw invalid_argument_error("sensor range must be positive");
    if (scale.resolution < 1 || scale.resolution > 32)
        throw invalid_argument_error("sensor resolution out of [1,32]");
    return static_cast<double>(raw) * (2.0 * scale.range / std::ldexp(1.0, scale.resolution));
}

struct ChannelSelector {
    // Column offsets of the accelerometer and gyroscope triples in the 9-column row.
    int accel_offset = 0;
    int gyro_offset = 3;
};

// Raw trial -> physical-unit sample stream at the given rate.
inline std::vector<SensorSample> to_samples(const RawTrial& trial, double rate_hz,
                                            const SensorScale& accel_scale = {16.0, 13},
                                            const SensorScale& gyro_scale = {2000.0, 16},
                                            const ChannelSelector& sel = {}) {
    if (rate_hz <= 0) throw invalid_argument_error("rate must be positive");
    std::vector<SensorSample> out;
    out.reserve(trial.rows.size());
    for (std::size_t i = 0; i < trial.rows.size(); ++i) {
        SensorSample s;
        s.t = static_cast<double>(i) / rate_hz;
        for (int c = 0; c < 3; ++c) {
            s.a[c] = convert_raw(trial.rows[i][sel.accel_offset + c], accel_scale);
            s.w[c] = convert_raw(trial.rows[i][sel.gyro_offset + c], gyro_scale);
        }
        out.push_back(s);
    }
    return out;
}

enum class TraceKind { fall, adl };

// Deterministic synthetic IMU trace. ADL traces are bounded periodic motion
// plus noise; fall traces add exactly one high-magnitude transient followed
// by a quiescent tail.
inline std::vector<SensorSample> synth_trace(TraceKind kind, std::uint64_t seed, double duration_s,
                                             double rate_hz) {
    if (duration_s <= 0) throw invalid_argument_error("duration must be positive");
    if (rate_hz <= 0) throw invalid_argument_error("rate must be positive");
    const std::size_t n = static_cast<std::size_t>(duration_s * rate_hz);
    std::mt19937_64 rng(derive_seed(seed, "synth_trace"));
    std::normal_distribution<double> noise(0.0, 0.05);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const double walk_freq = 1.5 + unif(rng);       // Hz
    const double walk_amp = 0.35 + 0.1 * unif(rng); // g
    const double phase = 2.0 * M_PI * unif(rng);

    // Impact placed away from both ends so the peak and quiescent tail fit.
    const std::size_t impact = n / 3 + static_cast<std::size_t>(unif(rng) * n / 4);

    std::vector<SensorSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        SensorSample s;
        s.t = t;
        const double osc = walk_amp * std::sin(2.0 * M_PI * walk_freq * t + phase);
        s.a = {osc + noise(rng), 1.0 + 0.5 * osc + noise(rng), 0.3 * osc + noise(rng)};
        s.w = {40.0 * osc + noise(rng), 30.0 * osc + noise(rng), 20.0 * osc + noise(rng)};
        if (kind == TraceKind::fall) {
            if (i >= impact && i < impact + static_cast<std::size_t>(rate_hz * 0.2)) {
                // impact transient, ~0.2 s
                const double k = static_cast<double>(i - impact) / (rate_hz * 0.2);
                const double spike = 6.0 * std::exp(-8.0 * k);
                s.a[0] += spike;
                s.a[1] -= spike * 0.8;
                s.a[2] += spike * 0.5;
                s.w[0] += 300.0 * std::exp(-8.0 * k);
                s.w[1] -= 250.0 * std::exp(-8.0 * k);
            } else if (i >= impact + static_cast<std::size_t>(rate_hz * 0.2)) {
                // lying still after the fall
                s.a = {0.05 * noise(rng), 0.1 + 0.05 * noise(rng), 0.95 + 0.05 * noise(rng)};
                s.w = {noise(rng), noise(rng), noise(rng)};
            }
        }
        out.push_back(s);
    }
    return out;
}

// Consecutive non-overlapping groups of k samples; a final partial group is dropped.
inline std::vector<Packet> packetize(const std::vector<SensorSample>& stream, std::size_t k) {
    if (k < 1) throw invalid_argument_error("packet size k must be >= 1");
    std::vector<Packet> packets;
    const std::size_t count = stream.size() / k;
    packets.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        Packet pkt;
        pkt.samples.assign(stream.begin() + static_cast<std::ptrdiff_t>(p * k),
                           stream.begin() + static_cast<std::ptrdiff_t>((p + 1) * k));
        pkt.t_j = pkt.samples.back().t;
        packets.push_back(std::move(pkt));
    }
    return packets;
}

inline void write_trace_csv(const std::vector<SensorSample>& trace, std::ostream& out) {
    out << "t,ax,ay,az,wx,wy,wz\n";
    for (const auto& s : trace) {
        out << s.t << ',' << s.a[0] << ',' << s.a[1] << ',' << s.a[2] << ',' << s.w[0] << ','
            << s.w[1] << ',' << s.w[2] << '\n';
    }
}

}  // namespace fallchain
