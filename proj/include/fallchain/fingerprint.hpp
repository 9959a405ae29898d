#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fallchain/common.hpp"

namespace fallchain {

struct PoseSample {
    double t = 0.0;
    double x = 0.0, y = 0.0;
};

struct DriftSample {
    double t = 0.0;
    double dx = 0.0, dy = 0.0;
};

struct RssiSample {
    double t = 0.0;
    std::string anchor_mac;
    double rssi = 0.0;  // dBm, <= 0
};

inline bool valid_mac(const std::string& mac) {
    if (mac.size() != 17) return false;
    for (std::size_t i = 0; i < mac.size(); ++i) {
        if (i % 3 == 2) {
            if (mac[i] != ':') return false;
        } else if (!std::isxdigit(static_cast<unsigned char>(mac[i]))) {
            return false;
        }
    }
    return true;
}

inline constexpr double kMissingRssi = std::numeric_limits<double>::quiet_NaN();

struct FingerprintRow {
    double timestamp = 0.0;
    double x_pos = 0.0, y_pos = 0.0;
    std::vector<double> rssi;  // one per anchor column; NaN = missing
};

// Rows plus the frozen anchor-mac column order.
struct FingerprintTable {
    std::vector<std::string> anchor_macs;
    std::vector<FingerprintRow> rows;
};

struct DtwResult {
    double cost = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> path;  // monotone, (0,0) .. (n-1,m-1)
};

// Classic DTW over absolute timestamp differences with the three unit moves.
// On ties the backtrack prefers the diagonal, then the i-step.
inline DtwResult dtw_align(const std::vector<double>& ta, const std::vector<double>& tb) {
    if (ta.empty() || tb.empty()) throw invalid_argument_error("dtw_align: empty sequence");
    const std::size_t n = ta.size(), m = tb.size();
    std::vector<double> dp(n * m, 0.0);
    auto cell = [&](std::size_t i, std::size_t j) -> double& { return dp[i * m + j]; };
    auto cost = [&](std::size_t i, std::size_t j) { return std::abs(ta[i] - tb[j]); };

    cell(0, 0) = cost(0, 0);
    for (std::size_t i = 1; i < n; ++i) cell(i, 0) = cell(i - 1, 0) + cost(i, 0);
    for (std::size_t j = 1; j < m; ++j) cell(0, j) = cell(0, j - 1) + cost(0, j);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j < m; ++j)
            cell(i, j) = cost(i, j) + std::min({cell(i - 1, j - 1), cell(i - 1, j), cell(i, j - 1)});

    DtwResult res;
    res.cost = cell(n - 1, m - 1);
    std::size_t i = n - 1, j = m - 1;
    res.path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = cell(i - 1, j - 1), up = cell(i - 1, j), left = cell(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        res.path.emplace_back(i, j);
    }
    std::reverse(res.path.begin(), res.path.end());
    return res;
}

// After alignment, each element of the shorter sequence keeps its single
// lowest-|dt| partner from the path (lowest index on ties). Returned pairs
// are (shorter index, longer index).
inline std::vector<std::pair<std::size_t, std::size_t>> closest_pairs(const std::vector<double>& ta,
                                                                      const std::vector<double>& tb) {
    const DtwResult res = dtw_align(ta, tb);
    const bool a_shorter = ta.size() <= tb.size();
    const std::size_t short_n = a_shorter ? ta.size() : tb.size();
    std::vector<std::size_t> best(short_n, std::numeric_limits<std::size_t>::max());
    std::vector<double> best_dt(short_n, std::numeric_limits<double>::infinity());
    for (const auto& [i, j] : res.path) {
        const std::size_t s = a_shorter ? i : j;
        const std::size_t l = a_shorter ? j : i;
        const double dt = std::abs(ta[i] - tb[j]);
        if (dt < best_dt[s] || (dt == best_dt[s] && l < best[s])) {
            best_dt[s] = dt;
            best[s] = l;
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(short_n);
    for (std::size_t s = 0; s < short_n; ++s) out.emplace_back(s, best[s]);
    return out;
}

// For every element of sequence ta, its lowest-|dt| partner along the DTW
// path (tie: lowest index). Output length = ta length; partners may repeat.
inline std::vector<std::size_t> match_each(const std::vector<double>& ta, const std::vector<double>& tb) {
    const DtwResult res = dtw_align(ta, tb);
    std::vector<std::size_t> best(ta.size(), std::numeric_limits<std::size_t>::max());
    std::vector<double> best_dt(ta.size(), std::numeric_limits<double>::infinity());
    for (const auto& [i, j] : res.path) {
        const double dt = std::abs(ta[i] - tb[j]);
        if (dt < best_dt[i] || (dt == best_dt[i] && j < best[i])) {
            best_dt[i] = dt;
            best[i] = j;
        }
    }
    return best;
}

// corrected (x, y) = odometry + DTW-matched drift; output length = odometry length
inline std::vector<PoseSample> correct_pose(const std::vector<PoseSample>& odom,
                                            const std::vector<DriftSample>& drift) {
    if (odom.empty() || drift.empty()) throw invalid_argument_error("correct_pose: empty sequence");
    std::vector<double> to, td;
    to.reserve(odom.size());
    td.reserve(drift.size());
    for (const auto& p : odom) to.push_back(p.t);
    for (const auto& d : drift) td.push_back(d.t);
    const auto match = match_each(to, td);
    std::vector<PoseSample> out;
    out.reserve(odom.size());
    for (std::size_t i = 0; i < odom.size(); ++i) {
        const auto& d = drift[match[i]];
        out.push_back({odom[i].t, odom[i].x + d.dx, odom[i].y + d.dy});
    }
    return out;
}

// One row per pose timestamp; each anchor cell is the latest DTW-matched
// reading for that anchor. Anchor columns are ordered by first appearance in
// the RSSI stream, then frozen.
inline FingerprintTable build_table(const std::vector<PoseSample>& poses,
                                    const std::vector<RssiSample>& rssi) {
    if (poses.empty() || rssi.empty()) throw invalid_argument_error("build_table: empty sequence");
    FingerprintTable table;
    std::unordered_map<std::string, std::size_t> col;
    for (const auto& s : rssi) {
        if (col.emplace(s.anchor_mac, table.anchor_macs.size()).second)
            table.anchor_macs.push_back(s.anchor_mac);
    }

    std::vector<double> tp, tr;
    tp.reserve(poses.size());
    tr.reserve(rssi.size());
    for (const auto& p : poses) tp.push_back(p.t);
    for (const auto& s : rssi) tr.push_back(s.t);
    const DtwResult aligned = dtw_align(tp, tr);

    table.rows.resize(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        table.rows[i].timestamp = poses[i].t;
        table.rows[i].x_pos = poses[i].x;
        table.rows[i].y_pos = poses[i].y;
        table.rows[i].rssi.assign(table.anchor_macs.size(), kMissingRssi);
    }
    // latest timestamp wins per (pose row, anchor)
    std::vector<std::vector<double>> best_t(poses.size(),
                                            std::vector<double>(table.anchor_macs.size(),
                                                                -std::numeric_limits<double>::infinity()));
    for (const auto& [pi, ri] : aligned.path) {
        const auto& s = rssi[ri];
        const std::size_t c = col[s.anchor_mac];
        if (s.t >= best_t[pi][c]) {
            best_t[pi][c] = s.t;
            table.rows[pi].rssi[c] = s.rssi;
        }
    }
    return table;
}

// Every missing cell becomes floor_dbm; present values untouched. Idempotent.
inline FingerprintTable fill_missing(FingerprintTable table, double floor_dbm = -100.0) {
    for (auto& row : table.rows)
        for (auto& v : row.rssi)
            if (std::isnan(v)) v = floor_dbm;
    return table;
}

enum class Cell : std::uint8_t { free, occupied, unknown };

struct OccupancyRaster {
    std::size_t width = 0, height = 0;  // pixels
    double resolution = 0.05;           // meters/pixel
    double origin_x = 0.0, origin_y = 0.0;
    std::vector<Cell> cells;  // row-major, row 0 at origin_y

    Cell at(std::size_t px, std::size_t py) const { return cells[py * width + px]; }
    Cell& at(std::size_t px, std::size_t py) { return cells[py * width + px]; }

    bool world_to_pixel(double x, double y, std::size_t& px, std::size_t& py) const {
        const double fx = (x - origin_x) / resolution;
        const double fy = (y - origin_y) / resolution;
        if (fx < 0 || fy < 0) return false;
        px = static_cast<std::size_t>(fx);
        py = static_cast<std::size_t>(fy);
        return px < width && py < height;
    }
};

// Block-averaged anchor heatmap over 8x8 pixel blocks.
struct HeatRaster {
    std::size_t blocks_w = 0, blocks_h = 0;
    std::vector<double> value;  // mean dBm per block
    std::vector<bool> has_data;
    std::size_t skipped_rows = 0;  // fingerprint rows outside the raster
};

inline constexpr std::size_t kHeatBlock = 8;

inline HeatRaster render_heatmap(const FingerprintTable& table, const OccupancyRaster& raster,
                                 const std::string& anchor_mac) {
    const auto it = std::find(table.anchor_macs.begin(), table.anchor_macs.end(), anchor_mac);
    if (it == table.anchor_macs.end()) throw invalid_argument_error("render_heatmap: unknown anchor " + anchor_mac);
    const std::size_t col = static_cast<std::size_t>(it - table.anchor_macs.begin());

    HeatRaster heat;
    heat.blocks_w = (raster.width + kHeatBlock - 1) / kHeatBlock;
    heat.blocks_h = (raster.height + kHeatBlock - 1) / kHeatBlock;
    std::vector<double> sum(heat.blocks_w * heat.blocks_h, 0.0);
    std::vector<std::size_t> count(sum.size(), 0);

    for (const auto& row : table.rows) {
        if (std::isnan(row.rssi[col])) continue;
        std::size_t px, py;
        if (!raster.world_to_pixel(row.x_pos, row.y_pos, px, py)) {
            ++heat.skipped_rows;
            continue;
        }
        const std::size_t b = (py / kHeatBlock) * heat.blocks_w + px / kHeatBlock;
        sum[b] += row.rssi[col];
        ++count[b];
    }
    heat.value.assign(sum.size(), 0.0);
    heat.has_data.assign(sum.size(), false);
    for (std::size_t b = 0; b < sum.size(); ++b) {
        if (count[b]) {
            heat.value[b] = sum[b] / static_cast<double>(count[b]);
            heat.has_data[b] = true;
        }
    }
    return heat;
}

// --- file formats -----------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

inline std::vector<PoseSample> read_pose_csv(std::istream& in) {
    std::vector<PoseSample> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (first && f[0] == "t") {
            first = false;
            continue;
        }
        first = false;
        if (f.size() != 3) throw parse_error("pose.csv: expected t,x,y");
        out.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
    }
    return out;
}

inline std::vector<DriftSample> read_drift_csv(std::istream& in) {
    std::vector<DriftSample> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (first && f[0] == "t") {
            first = false;
            continue;
        }
        first = false;
        if (f.size() != 3) throw parse_error("drift.csv: expected t,dx,dy");
        out.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
    }
    return out;
}

inline std::vector<RssiSample> read_rssi_csv(std::istream& in) {
    std::vector<RssiSample> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (first && f[0] == "t") {
            first = false;
            continue;
        }
        first = false;
        if (f.size() != 3) throw parse_error("rssi.csv: expected t,mac,rssi");
        RssiSample s{std::stod(f[0]), f[1], std::stod(f[2])};
        if (!valid_mac(s.anchor_mac)) throw parse_error("rssi.csv: malformed mac " + s.anchor_mac);
        if (s.rssi > 0) throw parse_error("rssi.csv: rssi must be <= 0 dBm");
        out.push_back(std::move(s));
    }
    return out;
}

// Table-1 layout: Timestamp,X_Pos,Y_Pos,<MAC_1>,...,<MAC_N>; missing = empty cell.
inline void write_fingerprint_csv(const FingerprintTable& table, std::ostream& out) {
    out << "Timestamp,X_Pos,Y_Pos";
    for (const auto& mac : table.anchor_macs) out << ',' << mac;
    out << '\n';
    out.precision(10);
    for (const auto& row : table.rows) {
        out << row.timestamp << ',' << row.x_pos << ',' << row.y_pos;
        for (double v : row.rssi) {
            out << ',';
            if (!std::isnan(v)) out << v;
        }
        out << '\n';
    }
}

inline FingerprintTable read_fingerprint_csv(std::istream& in) {
    FingerprintTable table;
    std::string line;
    if (!std::getline(in, line)) throw parse_error("fingerprint csv: empty file");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "Timestamp")
        throw parse_error("fingerprint csv: bad header");
    table.anchor_macs.assign(header.begin() + 3, header.end());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size()) throw parse_error("fingerprint csv: column count mismatch");
        FingerprintRow row;
        row.timestamp = std::stod(f[0]);
        row.x_pos = std::stod(f[1]);
        row.y_pos = std::stod(f[2]);
        for (std::size_t i = 3; i < f.size(); ++i)
            row.rssi.push_back(f[i].empty() ? kMissingRssi : std::stod(f[i]));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// PGM (P5) plus sidecar text metadata. Intensity thresholds on the
// normalized value: < 0.2 occupied, > 0.8 free, else unknown.
inline void write_pgm(const OccupancyRaster& raster, std::ostream& out) {
    out << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
    for (std::size_t py = 0; py < raster.height; ++py) {
        for (std::size_t px = 0; px < raster.width; ++px) {
            unsigned char v = 128;
            switch (raster.at(px, py)) {
                case Cell::free: v = 255; break;
                case Cell::occupied: v = 0; break;
                case Cell::unknown: v = 128; break;
            }
            out.put(static_cast<char>(v));
        }
    }
}

inline void write_raster_sidecar(const OccupancyRaster& raster, std::ostream& out) {
    out << "resolution " << raster.resolution << '\n'
        << "origin_x " << raster.origin_x << '\n'
        << "origin_y " << raster.origin_y << '\n';
}

inline OccupancyRaster read_pgm(std::istream& in, std::istream& sidecar) {
    std::string magic;
    in >> magic;
    if (magic != "P5") throw parse_error("raster: expected P5 PGM");
    std::size_t w, h;
    int maxval;
    in >> w >> h >> maxval;
    in.get();  // single whitespace after maxval
    OccupancyRaster raster;
    raster.width = w;
    raster.height = h;
    raster.cells.resize(w * h);
    for (auto& cell : raster.cells) {
        const int v = in.get();
        if (v < 0) throw parse_error("raster: truncated pixel data");
        const double norm = static_cast<double>(v) / maxval;
        cell = norm < 0.2 ? Cell::occupied : (norm > 0.8 ? Cell::free : Cell::unknown);
    }
    std::string key;
    while (sidecar >> key) {
        double value;
        if (!(sidecar >> value)) throw parse_error("raster sidecar: missing value for " + key);
        if (key == "resolution") raster.resolution = value;
        else if (key == "origin_x") raster.origin_x = value;
        else if (key == "origin_y") raster.origin_y = value;
        else throw parse_error("raster sidecar: unknown key " + key);
    }
    if (raster.resolution <= 0) throw parse_error("raster sidecar: resolution must be positive");
    return raster;
}

inline void write_heatmap_csv(const HeatRaster& heat, std::ostream& out) {
    out.precision(10);
    for (std::size_t by = 0; by < heat.blocks_h; ++by) {
        for (std::size_t bx = 0; bx < heat.blocks_w; ++bx) {
            if (bx) out << ',';
            const std::size_t b = by * heat.blocks_w + bx;
            if (heat.has_data[b]) out << heat.value[b];
        }
        out << '\n';
    }
}

}  // namespace fallchain
