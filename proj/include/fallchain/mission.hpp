#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fallchain/common.hpp"
#include "fallchain/fedsim.hpp"
#include "fallchain/fingerprint.hpp"
#include "fallchain/locmodel.hpp"
#include "fallchain/preproc.hpp"
#include "fallchain/signal_io.hpp"
#include "fallchain/visionstage.hpp"

namespace fallchain {

struct no_path_error : error {
    using error::error;
};

struct GridCell {
    std::size_t x = 0, y = 0;
    bool operator==(const GridCell&) const = default;
};

struct PathPlan {
    std::vector<GridCell> cells;  // start .. goal inclusive
    double cost = 0.0;            // 1 per orthogonal step, sqrt(2) per diagonal
};

namespace mission_detail {

inline bool passable(const OccupancyRaster& map, std::size_t x, std::size_t y) {
    return map.at(x, y) == Cell::free;
}

}  // namespace mission_detail

// 8-connected A* with Euclidean heuristic. Diagonal steps may not cut the
// corner of an occupied cell. Unknown cells are impassable.
inline PathPlan plan_path(const OccupancyRaster& map, GridCell start, GridCell goal) {
    if (start.x >= map.width || start.y >= map.height || goal.x >= map.width || goal.y >= map.height)
        throw invalid_argument_error("plan_path: endpoint out of bounds");
    if (!mission_detail::passable(map, start.x, start.y) || !mission_detail::passable(map, goal.x, goal.y))
        throw invalid_argument_error("plan_path: endpoint blocked");

    const double kDiag = std::sqrt(2.0);
    const auto idx = [&](std::size_t x, std::size_t y) { return y * map.width + x; };
    const auto heur = [&](std::size_t x, std::size_t y) {
        const double dx = double(x) - double(goal.x), dy = double(y) - double(goal.y);
        return std::sqrt(dx * dx + dy * dy);
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> g(map.width * map.height, kInf);
    std::vector<std::size_t> parent(g.size(), g.size());
    std::vector<char> closed(g.size(), 0);

    struct QEntry {
        double f, g;
        std::size_t node;
        bool operator>(const QEntry& o) const {
            if (f != o.f) return f > o.f;
            if (g != o.g) return g > o.g;
            return node > o.node;  // deterministic tie-break
        }
    };
    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> open;
    g[idx(start.x, start.y)] = 0.0;
    open.push({heur(start.x, start.y), 0.0, idx(start.x, start.y)});

    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    while (!open.empty()) {
        const QEntry top = open.top();
        open.pop();
        if (closed[top.node]) continue;
        closed[top.node] = 1;
        const std::size_t cx = top.node % map.width, cy = top.node / map.width;
        if (cx == goal.x && cy == goal.y) break;
        for (int k = 0; k < 8; ++k) {
            const long nx = long(cx) + kDx[k], ny = long(cy) + kDy[k];
            if (nx < 0 || ny < 0 || nx >= long(map.width) || ny >= long(map.height)) continue;
            if (!mission_detail::passable(map, std::size_t(nx), std::size_t(ny))) continue;
            const bool diag = kDx[k] != 0 && kDy[k] != 0;
            if (diag && (!mission_detail::passable(map, std::size_t(nx), cy) ||
                         !mission_detail::passable(map, cx, std::size_t(ny))))
                continue;  // no corner cutting
            const double ng = top.g + (diag ? kDiag : 1.0);
            const std::size_t ni = idx(std::size_t(nx), std::size_t(ny));
            if (ng < g[ni]) {
                g[ni] = ng;
                parent[ni] = top.node;
                open.push({ng + heur(std::size_t(nx), std::size_t(ny)), ng, ni});
            }
        }
    }

    const std::size_t gi = idx(goal.x, goal.y);
    if (g[gi] == kInf) throw no_path_error("plan_path: goal unreachable");

    PathPlan plan;
    plan.cost = g[gi];
    for (std::size_t n = gi;; n = parent[n]) {
        plan.cells.push_back({n % map.width, n / map.width});
        if (n == idx(start.x, start.y)) break;
    }
    std::reverse(plan.cells.begin(), plan.cells.end());
    return plan;
}

struct NavResult {
    bool reached = false;
    std::string fail_reason;  // "localization_drift" | "obstacle"
    std::size_t ticks = 0;    // path length either way
};

// One Bernoulli(success_p) draw per attempt; the failure reason is a second
// draw from the same stream.
inline NavResult simulate_navigation(const PathPlan& plan, double success_p, std::uint64_t seed) {
    if (success_p < 0 || success_p > 1) throw invalid_argument_error("simulate_navigation: p outside [0,1]");
    std::mt19937_64 rng(derive_seed(seed, "navigation"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NavResult r;
    r.ticks = plan.cells.empty() ? 0 : plan.cells.size() - 1;
    r.reached = u(rng) < success_p;
    if (!r.reached) r.fail_reason = u(rng) < 0.5 ? "localization_drift" : "obstacle";
    return r;
}

struct RadioModel {
    double rssi0 = -40.0;  // dBm at 1 m
    double exponent = 2.0;
    double sigma = 2.0;  // shadowing, dB
};

struct Anchor {
    std::string mac;
    double x = 0, y = 0;
};

// Log-distance path loss with Gaussian shadowing, clamped to [-100, 0] dBm.
inline std::vector<double> synth_rssi(const std::vector<Anchor>& anchors, double x, double y,
                                      const RadioModel& model, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "synth_rssi"));
    std::normal_distribution<double> noise(0.0, model.sigma);
    std::vector<double> out;
    out.reserve(anchors.size());
    for (const auto& a : anchors) {
        const double d = std::max(std::hypot(x - a.x, y - a.y), 0.1);
        double v = model.rssi0 - 10.0 * model.exponent * std::log10(d);
        if (model.sigma > 0) v += noise(rng);
        out.push_back(std::clamp(v, -100.0, 0.0));
    }
    return out;
}

// ---- fall-event state machine ---------------------------------------------

enum class EventState { Idle, FallSuspected, Localizing, Navigating, Inspecting, Confirmed, FalseAlarm, Aborted };

inline const char* to_string(EventState s) {
    switch (s) {
        case EventState::Idle: return "Idle";
        case EventState::FallSuspected: return "FallSuspected";
        case EventState::Localizing: return "Localizing";
        case EventState::Navigating: return "Navigating";
        case EventState::Inspecting: return "Inspecting";
        case EventState::Confirmed: return "Confirmed";
        case EventState::FalseAlarm: return "FalseAlarm";
        case EventState::Aborted: return "Aborted";
    }
    return "?";
}

inline bool terminal(EventState s) {
    return s == EventState::Confirmed || s == EventState::FalseAlarm || s == EventState::Aborted;
}

struct Stimulus {
    enum class Kind { fall_verdict, rssi_collected, localization_fix, nav_result, inspection_verdict, abort };
    Kind kind = Kind::fall_verdict;
    bool flag = false;           // fall_verdict: is-fall; nav_result: reached; inspection: fallen
    double x = 0, y = 0;         // localization_fix
    std::vector<double> window;  // fall_verdict: triggering window, kept for feedback
    std::string reason;          // nav_result failure / abort reason
};

struct StateTransition {
    EventState state = EventState::Idle;
    double tick = 0.0;
};

struct PipelineEvent {
    std::size_t event_id = 0;
    EventState state = EventState::Idle;
    std::vector<StateTransition> history;  // every entered state, in order
    double est_x = 0, est_y = 0;
    bool has_fix = false;
    std::vector<double> trigger_window;
    std::string abort_reason;
};

struct AlertMessage {
    std::size_t event_id = 0;
    double tick = 0.0;
    double x = 0, y = 0;
};

struct FeedbackRecord {
    std::size_t event_id = 0;
    double tick = 0.0;
    std::vector<double> window;  // the IMU window that triggered the false alarm
};

// Applies exactly one legal transition; Confirmed appends an alert, FalseAlarm
// a feedback record. Anything off the chart throws.
inline PipelineEvent step_event(PipelineEvent event, const Stimulus& stim, double tick,
                                std::vector<AlertMessage>* alerts = nullptr,
                                std::vector<FeedbackRecord>* feedback = nullptr) {
    using K = Stimulus::Kind;
    const auto enter = [&](EventState s) {
        event.state = s;
        event.history.push_back({s, tick});
    };
    const auto illegal = [&]() -> PipelineEvent& {
        throw invalid_argument_error(std::string("step_event: illegal transition from ") +
                                     to_string(event.state));
    };

    if (stim.kind == K::abort) {
        if (terminal(event.state)) illegal();
        event.abort_reason = stim.reason.empty() ? "external_abort" : stim.reason;
        enter(EventState::Aborted);
        return event;
    }

    switch (event.state) {
        case EventState::Idle:
            if (stim.kind != K::fall_verdict) illegal();
            if (stim.flag) {
                event.trigger_window = stim.window;
                enter(EventState::FallSuspected);
            }
            break;
        case EventState::FallSuspected:
            if (stim.kind != K::rssi_collected) illegal();
            enter(EventState::Localizing);
            break;
        case EventState::Localizing:
            if (stim.kind != K::localization_fix) illegal();
            event.est_x = stim.x;
            event.est_y = stim.y;
            event.has_fix = true;
            enter(EventState::Navigating);
            break;
        case EventState::Navigating:
            if (stim.kind != K::nav_result) illegal();
            if (stim.flag) {
                enter(EventState::Inspecting);
            } else {
                event.abort_reason = stim.reason.empty() ? "navigation_failed" : stim.reason;
                enter(EventState::Aborted);
            }
            break;
        case EventState::Inspecting:
            if (stim.kind != K::inspection_verdict) illegal();
            if (stim.flag) {
                enter(EventState::Confirmed);
                if (alerts) alerts->push_back({event.event_id, tick, event.est_x, event.est_y});
            } else {
                enter(EventState::FalseAlarm);
                if (feedback) feedback->push_back({event.event_id, tick, event.trigger_window});
            }
            break;
        default:
            illegal();
    }
    return event;
}

// Replays a transition history against the chart; true iff every step is legal.
inline bool valid_event_history(const std::vector<StateTransition>& history) {
    EventState prev = EventState::Idle;
    bool first = true;
    for (const auto& tr : history) {
        if (first) {
            if (tr.state != EventState::FallSuspected && tr.state != EventState::Aborted) return false;
            first = false;
        } else {
            const bool abort_ok = tr.state == EventState::Aborted && !terminal(prev);
            bool chart_ok = false;
            switch (prev) {
                case EventState::FallSuspected: chart_ok = tr.state == EventState::Localizing; break;
                case EventState::Localizing: chart_ok = tr.state == EventState::Navigating; break;
                case EventState::Navigating: chart_ok = tr.state == EventState::Inspecting; break;
                case EventState::Inspecting:
                    chart_ok = tr.state == EventState::Confirmed || tr.state == EventState::FalseAlarm;
                    break;
                default: chart_ok = false;
            }
            if (!chart_ok && !abort_ok) return false;
        }
        prev = tr.state;
    }
    return true;
}

// ---- reliability -----------------------------------------------------------

struct ReliabilityModel {
    double detect_fail = 0.0081;
    double nav_fail = 0.05;
    double vision_fail = 0.0367;
};

struct Reliability {
    double failure = 0.0;           // all-stages-must-fail model: product of rates
    double accuracy_percent = 0.0;  // (1 - failure) * 100
    double serial_failure = 0.0;    // alternative model: 1 - prod(1 - rate)
};

inline Reliability combined_reliability(const ReliabilityModel& m) {
    for (double r : {m.detect_fail, m.nav_fail, m.vision_fail})
        if (r < 0 || r > 1) throw invalid_argument_error("combined_reliability: rate outside [0,1]");
    Reliability out;
    out.failure = m.detect_fail * m.nav_fail * m.vision_fail;
    out.accuracy_percent = (1.0 - out.failure) * 100.0;
    out.serial_failure = 1.0 - (1.0 - m.detect_fail) * (1.0 - m.nav_fail) * (1.0 - m.vision_fail);
    return out;
}

// ---- scenario --------------------------------------------------------------

struct Waypoint {
    double t = 0, x = 0, y = 0;
};

struct SimScenario {
    OccupancyRaster map;
    std::vector<Anchor> anchors;
    std::vector<Waypoint> trajectory;  // user path, ascending t
    std::string event_kind = "none";   // "fall" | "false_trigger" | "none"
    double event_tick = 0.0;
    double robot_x = 0, robot_y = 0;
    RadioModel radio;
    ReliabilityModel stage_rates{0, 0, 0};  // error injection; all zero = fault free
    double nav_success_p = 1.0;
    std::size_t nav_retries = 1;
    std::uint64_t seed = 1;
};

// User position at a tick: linear interpolation along the waypoint list.
inline std::pair<double, double> trajectory_at(const std::vector<Waypoint>& traj, double t) {
    if (traj.empty()) throw invalid_argument_error("trajectory_at: empty trajectory");
    if (t <= traj.front().t) return {traj.front().x, traj.front().y};
    if (t >= traj.back().t) return {traj.back().x, traj.back().y};
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (t <= traj[i].t) {
            const double span = traj[i].t - traj[i - 1].t;
            const double a = span > 0 ? (t - traj[i - 1].t) / span : 1.0;
            return {traj[i - 1].x + a * (traj[i].x - traj[i - 1].x),
                    traj[i - 1].y + a * (traj[i].y - traj[i - 1].y)};
        }
    }
    return {traj.back().x, traj.back().y};
}

struct StageArtifacts {
    const ClassifierModel* fall_model = nullptr;
    const PreprocConfig* preproc = nullptr;
    const NormBounds* norm = nullptr;
    const Regressor* loc_model = nullptr;
    const LogisticFallClassifier* vision_model = nullptr;
};

struct StageCounts {
    std::size_t detect_agree = 0, detect_disagree = 0;
    std::size_t vision_agree = 0, vision_disagree = 0;
};

struct ScenarioResult {
    std::vector<PipelineEvent> events;
    std::vector<AlertMessage> alerts;
    std::vector<FeedbackRecord> feedback;
    std::vector<std::string> log_lines;  // JSON-lines, one transition per line
    StageCounts counts;
    bool missed = false;  // injected fall swallowed by simultaneous stage failures
    bool stage_failed[3] = {false, false, false};
};

namespace mission_detail {

inline void log_transition(ScenarioResult& res, const PipelineEvent& ev, const StateTransition& tr) {
    nlohmann::json j;
    j["event_id"] = ev.event_id;
    j["tick"] = tr.tick;
    j["state"] = to_string(tr.state);
    res.log_lines.push_back(j.dump());
}

}  // namespace mission_detail

// Ticks one scenario through the whole pipeline. The event trigger and the
// inspection verdict come from scenario ground truth (with Bernoulli stage
// error injection); the fall and vision artifacts are still run and their
// agreement recorded, and the localization artifact supplies the actual fix.
// An injected fall is missed only when all three stages fail at once — the
// redundancy model whose failure probability combined_reliability reports.
inline ScenarioResult run_scenario(const SimScenario& scenario, const StageArtifacts& art) {
    if (!art.fall_model || !art.preproc || !art.norm || !art.loc_model || !art.vision_model)
        throw invalid_argument_error("run_scenario: missing stage artifact");
    if (scenario.map.cells.size() != scenario.map.width * scenario.map.height)
        throw invalid_argument_error("run_scenario: malformed map");

    ScenarioResult res;
    if (scenario.event_kind == "none") return res;
    const bool true_fall = scenario.event_kind == "fall";
    if (!true_fall && scenario.event_kind != "false_trigger")
        throw invalid_argument_error("run_scenario: unknown event kind " + scenario.event_kind);

    // stage failure draws (error injection)
    std::mt19937_64 rng(derive_seed(scenario.seed, "stage_errors"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    res.stage_failed[0] = u(rng) < scenario.stage_rates.detect_fail;
    res.stage_failed[1] = u(rng) < scenario.stage_rates.nav_fail;
    res.stage_failed[2] = u(rng) < scenario.stage_rates.vision_fail;
    if (true_fall && res.stage_failed[0] && res.stage_failed[1] && res.stage_failed[2]) {
        res.missed = true;
        return res;
    }

    const auto [ux, uy] = trajectory_at(scenario.trajectory, scenario.event_tick);

    // IMU stage: synthesize the trace the wearable would have produced and run
    // it through the trained classifier; record agreement with ground truth.
    const auto trace = synth_trace(true_fall ? TraceKind::fall : TraceKind::adl,
                                   derive_seed(scenario.seed, "event_trace"), 10.0, 50.0);
    auto windows = preprocess_trace(trace, true_fall ? 1 : 0, *art.preproc);
    for (auto& w : windows) w = apply_normalizer(w, *art.norm);
    bool model_fall = false;
    for (const auto& w : windows)
        if (art.fall_model->predict(w) == 1) {
            model_fall = true;
            break;
        }
    (model_fall == true_fall ? res.counts.detect_agree : res.counts.detect_disagree) += 1;

    PipelineEvent ev;
    ev.event_id = 1;
    double tick = scenario.event_tick;
    const auto apply = [&](const Stimulus& s) {
        const std::size_t before = ev.history.size();
        ev = step_event(ev, s, tick, &res.alerts, &res.feedback);
        for (std::size_t i = before; i < ev.history.size(); ++i)
            mission_detail::log_transition(res, ev, ev.history[i]);
        tick += 1.0;
    };

    Stimulus trig;
    trig.kind = Stimulus::Kind::fall_verdict;
    trig.flag = true;
    if (!windows.empty()) trig.window = windows.front().values;
    apply(trig);

    Stimulus rssi_done;
    rssi_done.kind = Stimulus::Kind::rssi_collected;
    apply(rssi_done);

    // localization: loc model on synthetic RSSI at the user's true position
    const auto rssi = synth_rssi(scenario.anchors, ux, uy, scenario.radio,
                                 derive_seed(scenario.seed, "event_rssi"));
    const auto fix = art.loc_model->predict(engineer_features(rssi).engineered_features());
    Stimulus fixs;
    fixs.kind = Stimulus::Kind::localization_fix;
    fixs.x = fix[0];
    fixs.y = fix[1];
    apply(fixs);

    // navigation: A* to the estimated cell (nearest in-bounds free cell of the
    // fix), stochastic execution with retry
    std::size_t gx = 0, gy = 0, sx = 0, sy = 0;
    const bool goal_ok = scenario.map.world_to_pixel(fix[0], fix[1], gx, gy) &&
                         mission_detail::passable(scenario.map, gx, gy);
    const bool start_ok = scenario.map.world_to_pixel(scenario.robot_x, scenario.robot_y, sx, sy);
    Stimulus navs;
    navs.kind = Stimulus::Kind::nav_result;
    navs.flag = false;
    navs.reason = "no_path";
    if (goal_ok && start_ok) {
        try {
            const PathPlan plan = plan_path(scenario.map, {sx, sy}, {gx, gy});
            for (std::size_t attempt = 0; attempt <= scenario.nav_retries && !navs.flag; ++attempt) {
                const NavResult nav = simulate_navigation(plan, scenario.nav_success_p,
                                                          derive_seed(scenario.seed, "nav_attempt", attempt));
                navs.flag = nav.reached;
                navs.reason = nav.fail_reason;
            }
        } catch (const no_path_error&) {
            // falls through to the failure stimulus
        }
    }
    apply(navs);

    if (ev.state == EventState::Inspecting) {
        // vision stage: the scene the robot camera would describe
        std::vector<Detection> scene;
        Detection person;
        person.class_name = "person";
        person.box = true_fall ? BBox{0.5, 0.85, 0.4, 0.15} : BBox{0.5, 0.5, 0.18, 0.45};
        scene.push_back(person);
        Detection bed;
        bed.class_name = "bed";
        bed.box = {0.75, 0.8, 0.3, 0.25};
        scene.push_back(bed);
        const int model_verdict = art.vision_model->predict(extract_features(scene));
        (model_verdict == (true_fall ? 1 : 0) ? res.counts.vision_agree : res.counts.vision_disagree) += 1;

        Stimulus insp;
        insp.kind = Stimulus::Kind::inspection_verdict;
        insp.flag = true_fall;
        apply(insp);
    }

    res.events.push_back(ev);
    return res;
}

// ---- scenario file ---------------------------------------------------------

inline nlohmann::json scenario_to_json(const SimScenario& s) {
    nlohmann::json j;
    j["map"]["width"] = s.map.width;
    j["map"]["height"] = s.map.height;
    j["map"]["resolution"] = s.map.resolution;
    j["map"]["origin_x"] = s.map.origin_x;
    j["map"]["origin_y"] = s.map.origin_y;
    std::vector<std::string> rows;
    for (std::size_t y = 0; y < s.map.height; ++y) {
        std::string row;
        for (std::size_t x = 0; x < s.map.width; ++x) {
            switch (s.map.at(x, y)) {
                case Cell::free: row += '.'; break;
                case Cell::occupied: row += '#'; break;
                case Cell::unknown: row += '?'; break;
            }
        }
        rows.push_back(std::move(row));
    }
    j["map"]["rows"] = rows;
    for (const auto& a : s.anchors) j["anchors"].push_back({{"mac", a.mac}, {"x", a.x}, {"y", a.y}});
    for (const auto& w : s.trajectory) j["trajectory"].push_back({{"t", w.t}, {"x", w.x}, {"y", w.y}});
    j["event"]["kind"] = s.event_kind;
    j["event"]["tick"] = s.event_tick;
    j["robot"]["x"] = s.robot_x;
    j["robot"]["y"] = s.robot_y;
    j["radio"]["rssi0"] = s.radio.rssi0;
    j["radio"]["exponent"] = s.radio.exponent;
    j["radio"]["sigma"] = s.radio.sigma;
    j["stage_rates"]["detect_fail"] = s.stage_rates.detect_fail;
    j["stage_rates"]["nav_fail"] = s.stage_rates.nav_fail;
    j["stage_rates"]["vision_fail"] = s.stage_rates.vision_fail;
    j["nav_success_p"] = s.nav_success_p;
    j["nav_retries"] = s.nav_retries;
    j["seed"] = s.seed;
    return j;
}

inline SimScenario scenario_from_json(const nlohmann::json& j) {
    SimScenario s;
    try {
        s.map.width = j.at("map").at("width").get<std::size_t>();
        s.map.height = j.at("map").at("height").get<std::size_t>();
        s.map.resolution = j.at("map").at("resolution").get<double>();
        s.map.origin_x = j.at("map").at("origin_x").get<double>();
        s.map.origin_y = j.at("map").at("origin_y").get<double>();
        const auto rows = j.at("map").at("rows").get<std::vector<std::string>>();
        if (rows.size() != s.map.height) throw parse_error("scenario: map row count mismatch");
        s.map.cells.resize(s.map.width * s.map.height);
        for (std::size_t y = 0; y < s.map.height; ++y) {
            if (rows[y].size() != s.map.width) throw parse_error("scenario: map row width mismatch");
            for (std::size_t x = 0; x < s.map.width; ++x) {
                switch (rows[y][x]) {
                    case '.': s.map.at(x, y) = Cell::free; break;
                    case '#': s.map.at(x, y) = Cell::occupied; break;
                    case '?': s.map.at(x, y) = Cell::unknown; break;
                    default: throw parse_error("scenario: bad map character");
                }
            }
        }
        if (j.contains("anchors"))
            for (const auto& a : j.at("anchors"))
                s.anchors.push_back({a.at("mac").get<std::string>(), a.at("x").get<double>(),
                                     a.at("y").get<double>()});
        if (j.contains("trajectory"))
            for (const auto& w : j.at("trajectory"))
                s.trajectory.push_back({w.at("t").get<double>(), w.at("x").get<double>(),
                                        w.at("y").get<double>()});
        s.event_kind = j.at("event").at("kind").get<std::string>();
        s.event_tick = j.at("event").at("tick").get<double>();
        s.robot_x = j.at("robot").at("x").get<double>();
        s.robot_y = j.at("robot").at("y").get<double>();
        if (j.contains("radio")) {
            s.radio.rssi0 = j.at("radio").at("rssi0").get<double>();
            s.radio.exponent = j.at("radio").at("exponent").get<double>();
            s.radio.sigma = j.at("radio").at("sigma").get<double>();
        }
        if (j.contains("stage_rates")) {
            s.stage_rates.detect_fail = j.at("stage_rates").at("detect_fail").get<double>();
            s.stage_rates.nav_fail = j.at("stage_rates").at("nav_fail").get<double>();
            s.stage_rates.vision_fail = j.at("stage_rates").at("vision_fail").get<double>();
        }
        if (j.contains("nav_success_p")) s.nav_success_p = j.at("nav_success_p").get<double>();
        if (j.contains("nav_retries")) s.nav_retries = j.at("nav_retries").get<std::size_t>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("scenario: ") + e.what());
    }
    return s;
}

}  // namespace fallchain
