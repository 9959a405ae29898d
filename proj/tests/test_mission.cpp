#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <queue>
#include <random>

#include "fallchain/mission.hpp"

using namespace fallchain;

namespace {

OccupancyRaster grid(std::size_t w, std::size_t h, const std::vector<std::string>& rows = {}) {
    OccupancyRaster r;
    r.width = w;
    r.height = h;
    r.resolution = 1.0;
    r.cells.assign(w * h, Cell::free);
    for (std::size_t y = 0; y < rows.size(); ++y)
        for (std::size_t x = 0; x < rows[y].size(); ++x)
            r.at(x, y) = rows[y][x] == '#' ? Cell::occupied : (rows[y][x] == '?' ? Cell::unknown : Cell::free);
    return r;
}

// uniform-cost search oracle (no heuristic), same move rules
double ucs_cost(const OccupancyRaster& map, GridCell start, GridCell goal) {
    const auto pass = [&](std::size_t x, std::size_t y) { return map.at(x, y) == Cell::free; };
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(map.width * map.height, kInf);
    using Q = std::pair<double, std::size_t>;
    std::priority_queue<Q, std::vector<Q>, std::greater<Q>> pq;
    dist[start.y * map.width + start.x] = 0.0;
    pq.push({0.0, start.y * map.width + start.x});
    static constexpr int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!pq.empty()) {
        const auto [d, n] = pq.top();
        pq.pop();
        if (d > dist[n]) continue;
        const std::size_t cx = n % map.width, cy = n / map.width;
        for (int k = 0; k < 8; ++k) {
            const long nx = long(cx) + dx[k], ny = long(cy) + dy[k];
            if (nx < 0 || ny < 0 || nx >= long(map.width) || ny >= long(map.height)) continue;
            if (!pass(std::size_t(nx), std::size_t(ny))) continue;
            const bool diag = dx[k] != 0 && dy[k] != 0;
            if (diag && (!pass(std::size_t(nx), cy) || !pass(cx, std::size_t(ny)))) continue;
            const double nd = d + (diag ? std::sqrt(2.0) : 1.0);
            const std::size_t ni = std::size_t(ny) * map.width + std::size_t(nx);
            if (nd < dist[ni]) {
                dist[ni] = nd;
                pq.push({nd, ni});
            }
        }
    }
    return dist[goal.y * map.width + goal.x];
}

}  // namespace

TEST_CASE("straight path on an empty grid") {
    const auto map = grid(5, 5);
    const PathPlan plan = plan_path(map, {0, 0}, {0, 4});
    CHECK(plan.cost == Catch::Approx(4.0));
    REQUIRE(plan.cells.size() == 5);
    CHECK(plan.cells.front() == GridCell{0, 0});
    CHECK(plan.cells.back() == GridCell{0, 4});
}

TEST_CASE("diagonal shortcut costs sqrt(2) per step") {
    const auto map = grid(5, 5);
    const PathPlan plan = plan_path(map, {0, 0}, {4, 4});
    CHECK(plan.cost == Catch::Approx(4.0 * std::sqrt(2.0)));
}

TEST_CASE("walled-off goal raises NoPath; bad endpoints are rejected") {
    const auto walled = grid(5, 5, {".....", ".###.", ".#.#.", ".###.", "....."});
    CHECK_THROWS_AS(plan_path(walled, {0, 0}, {2, 2}), no_path_error);
    CHECK_THROWS_AS(plan_path(walled, {0, 0}, {9, 9}), invalid_argument_error);
    CHECK_THROWS_AS(plan_path(walled, {0, 0}, {1, 1}), invalid_argument_error);  // blocked goal
    const auto unknown = grid(3, 1, {".?."});
    CHECK_THROWS_AS(plan_path(unknown, {0, 0}, {2, 0}), no_path_error);  // unknown impassable
}

TEST_CASE("gap in a wall matches the uniform-cost oracle") {
    const auto map = grid(7, 7, {".......", ".......", "######.", ".......", ".......", ".......", "......."});
    const PathPlan plan = plan_path(map, {0, 0}, {0, 6});
    CHECK(plan.cost == Catch::Approx(ucs_cost(map, {0, 0}, {0, 6})).margin(1e-9));
    // path is contiguous and stays on free cells
    for (std::size_t i = 1; i < plan.cells.size(); ++i) {
        CHECK(std::max(std::abs(long(plan.cells[i].x) - long(plan.cells[i - 1].x)),
                       std::abs(long(plan.cells[i].y) - long(plan.cells[i - 1].y))) == 1);
        CHECK(map.at(plan.cells[i].x, plan.cells[i].y) == Cell::free);
    }
}

TEST_CASE("a* equals the oracle on random solvable grids") {
    std::mt19937_64 rng(61);
    int solved = 0;
    while (solved < 60) {
        std::uniform_int_distribution<std::size_t> dim(4, 15);
        const std::size_t w = dim(rng), h = dim(rng);
        auto map = grid(w, h);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& c : map.cells)
            if (u(rng) < 0.25) c = Cell::occupied;
        map.at(0, 0) = Cell::free;
        map.at(w - 1, h - 1) = Cell::free;
        const double oracle = ucs_cost(map, {0, 0}, {w - 1, h - 1});
        if (!std::isfinite(oracle)) {
            CHECK_THROWS_AS(plan_path(map, {0, 0}, {w - 1, h - 1}), no_path_error);
            continue;
        }
        const PathPlan plan = plan_path(map, {0, 0}, {w - 1, h - 1});
        REQUIRE(plan.cost == Catch::Approx(oracle).margin(1e-9));
        ++solved;
    }
}

TEST_CASE("navigation simulation extremes and determinism") {
    PathPlan plan;
    plan.cells = {{0, 0}, {1, 0}, {2, 0}};
    const NavResult always = simulate_navigation(plan, 1.0, 3);
    CHECK(always.reached);
    CHECK(always.ticks == 2);
    const NavResult never = simulate_navigation(plan, 0.0, 3);
    CHECK_FALSE(never.reached);
    CHECK((never.fail_reason == "localization_drift" || never.fail_reason == "obstacle"));
    CHECK(simulate_navigation(plan, 0.5, 9).reached == simulate_navigation(plan, 0.5, 9).reached);
    CHECK_THROWS_AS(simulate_navigation(plan, 1.5, 1), invalid_argument_error);
}

TEST_CASE("monte carlo navigation rate near 0.95") {
    PathPlan plan;
    plan.cells = {{0, 0}, {1, 0}};
    std::size_t ok = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) ok += simulate_navigation(plan, 0.95, s).reached ? 1 : 0;
    const double rate = double(ok) / 10000.0;
    CHECK(rate > 0.93);
    CHECK(rate < 0.97);
}

TEST_CASE("path-loss rssi examples") {
    const std::vector<Anchor> anchors = {{"aa:aa:aa:aa:aa:aa", 0.0, 0.0}};
    RadioModel m;
    m.rssi0 = -40.0;
    m.exponent = 2.0;
    m.sigma = 0.0;
    CHECK(synth_rssi(anchors, 1.0, 0.0, m, 1)[0] == Catch::Approx(-40.0));
    CHECK(synth_rssi(anchors, 10.0, 0.0, m, 1)[0] == Catch::Approx(-60.0));
    // clamp at the floor: -40 - 20*log10(1000) = -100
    CHECK(synth_rssi(anchors, 100000.0, 0.0, m, 1)[0] == -100.0);
    // distance floor 0.1 m
    CHECK(synth_rssi(anchors, 0.0, 0.0, m, 1)[0] == Catch::Approx(-40.0 - 20.0 * std::log10(0.1)));
    // deterministic per seed with noise on
    m.sigma = 2.0;
    CHECK(synth_rssi(anchors, 3.0, 4.0, m, 7) == synth_rssi(anchors, 3.0, 4.0, m, 7));
}

TEST_CASE("state machine happy path to Confirmed emits one alert") {
    std::vector<AlertMessage> alerts;
    std::vector<FeedbackRecord> feedback;
    PipelineEvent ev;
    ev.event_id = 42;

    Stimulus s;
    s.kind = Stimulus::Kind::fall_verdict;
    s.flag = true;
    s.window = {1.0, 2.0};
    ev = step_event(ev, s, 0.0, &alerts, &feedback);
    CHECK(ev.state == EventState::FallSuspected);

    s = {};
    s.kind = Stimulus::Kind::rssi_collected;
    ev = step_event(ev, s, 1.0, &alerts, &feedback);
    CHECK(ev.state == EventState::Localizing);

    s = {};
    s.kind = Stimulus::Kind::localization_fix;
    s.x = 2.5;
    s.y = 3.5;
    ev = step_event(ev, s, 2.0, &alerts, &feedback);
    CHECK(ev.state == EventState::Navigating);
    CHECK(ev.est_x == 2.5);

    s = {};
    s.kind = Stimulus::Kind::nav_result;
    s.flag = true;
    ev = step_event(ev, s, 3.0, &alerts, &feedback);
    CHECK(ev.state == EventState::Inspecting);

    s = {};
    s.kind = Stimulus::Kind::inspection_verdict;
    s.flag = true;
    ev = step_event(ev, s, 4.0, &alerts, &feedback);
    CHECK(ev.state == EventState::Confirmed);
    REQUIRE(alerts.size() == 1);
    CHECK(alerts[0].event_id == 42);
    CHECK(alerts[0].x == 2.5);
    CHECK(feedback.empty());
    CHECK(valid_event_history(ev.history));
}

TEST_CASE("not-fallen verdict lands in FalseAlarm with one feedback record") {
    std::vector<AlertMessage> alerts;
    std::vector<FeedbackRecord> feedback;
    PipelineEvent ev;
    Stimulus s;
    s.kind = Stimulus::Kind::fall_verdict;
    s.flag = true;
    s.window = {9.0};
    ev = step_event(ev, s, 0.0, &alerts, &feedback);
    s = {};
    s.kind = Stimulus::Kind::rssi_collected;
    ev = step_event(ev, s, 1.0, &alerts, &feedback);
    s = {};
    s.kind = Stimulus::Kind::localization_fix;
    ev = step_event(ev, s, 2.0, &alerts, &feedback);
    s = {};
    s.kind = Stimulus::Kind::nav_result;
    s.flag = true;
    ev = step_event(ev, s, 3.0, &alerts, &feedback);
    s = {};
    s.kind = Stimulus::Kind::inspection_verdict;
    s.flag = false;
    ev = step_event(ev, s, 4.0, &alerts, &feedback);
    CHECK(ev.state == EventState::FalseAlarm);
    CHECK(alerts.empty());
    REQUIRE(feedback.size() == 1);
    CHECK(feedback[0].window == std::vector<double>{9.0});
    CHECK(valid_event_history(ev.history));
}

TEST_CASE("navigation failure aborts; aborts allowed from any non-terminal state") {
    PipelineEvent ev;
    Stimulus s;
    s.kind = Stimulus::Kind::fall_verdict;
    s.flag = true;
    ev = step_event(ev, s, 0.0);
    s = {};
    s.kind = Stimulus::Kind::rssi_collected;
    ev = step_event(ev, s, 1.0);
    s = {};
    s.kind = Stimulus::Kind::localization_fix;
    ev = step_event(ev, s, 2.0);
    s = {};
    s.kind = Stimulus::Kind::nav_result;
    s.flag = false;
    s.reason = "obstacle";
    ev = step_event(ev, s, 3.0);
    CHECK(ev.state == EventState::Aborted);
    CHECK(ev.abort_reason == "obstacle");
    CHECK(valid_event_history(ev.history));

    PipelineEvent ev2;
    s = {};
    s.kind = Stimulus::Kind::fall_verdict;
    s.flag = true;
    ev2 = step_event(ev2, s, 0.0);
    s = {};
    s.kind = Stimulus::Kind::abort;
    ev2 = step_event(ev2, s, 1.0);
    CHECK(ev2.state == EventState::Aborted);
    s = {};
    s.kind = Stimulus::Kind::abort;
    CHECK_THROWS_AS(step_event(ev2, s, 2.0), invalid_argument_error);  // terminal
}

TEST_CASE("illegal stimuli are rejected; idle non-fall verdict is a no-op") {
    PipelineEvent ev;
    Stimulus s;
    s.kind = Stimulus::Kind::nav_result;
    CHECK_THROWS_AS(step_event(ev, s, 0.0), invalid_argument_error);

    s = {};
    s.kind = Stimulus::Kind::fall_verdict;
    s.flag = false;
    ev = step_event(ev, s, 0.0);
    CHECK(ev.state == EventState::Idle);
    CHECK(ev.history.empty());
}

TEST_CASE("event history validator rejects fabricated logs") {
    CHECK_FALSE(valid_event_history({{EventState::Confirmed, 0.0}}));
    CHECK_FALSE(valid_event_history(
        {{EventState::FallSuspected, 0.0}, {EventState::Inspecting, 1.0}}));
    CHECK(valid_event_history({{EventState::FallSuspected, 0.0}, {EventState::Aborted, 1.0}}));
}

TEST_CASE("combined reliability pinned value") {
    const Reliability r = combined_reliability({0.0081, 0.05, 0.0367});
    CHECK(r.failure == Catch::Approx(1.48635e-5).epsilon(1e-4));
    CHECK(r.accuracy_percent == Catch::Approx(99.99851).margin(1e-4));
    // alternative serial-success model is reported alongside
    CHECK(r.serial_failure ==
          Catch::Approx(1.0 - (1.0 - 0.0081) * (1.0 - 0.05) * (1.0 - 0.0367)));

    CHECK(combined_reliability({0.5, 1.0, 1.0}).failure == 0.5);
    CHECK(combined_reliability({0.0, 0.5, 0.5}).failure == 0.0);
    CHECK(combined_reliability({0.0, 0.5, 0.5}).accuracy_percent == 100.0);
    CHECK_THROWS_AS(combined_reliability({-0.1, 0.5, 0.5}), invalid_argument_error);
}

TEST_CASE("combined reliability is commutative and monotone") {
    const double a = combined_reliability({0.1, 0.2, 0.3}).failure;
    CHECK(combined_reliability({0.3, 0.1, 0.2}).failure == Catch::Approx(a));
    CHECK(combined_reliability({0.15, 0.2, 0.3}).failure >= a);
}

TEST_CASE("trajectory interpolation") {
    const std::vector<Waypoint> traj = {{0.0, 0.0, 0.0}, {10.0, 10.0, 0.0}};
    CHECK(trajectory_at(traj, -1.0).first == 0.0);
    CHECK(trajectory_at(traj, 5.0).first == Catch::Approx(5.0));
    CHECK(trajectory_at(traj, 20.0).first == 10.0);
    CHECK_THROWS_AS(trajectory_at({}, 0.0), invalid_argument_error);
}

TEST_CASE("scenario json round trip") {
    SimScenario s;
    s.map = grid(4, 3, {"....", ".#?.", "...."});
    s.map.resolution = 0.5;
    s.map.origin_x = -1.0;
    s.anchors = {{"aa:aa:aa:aa:aa:aa", 0.0, 1.0}};
    s.trajectory = {{0.0, 0.2, 0.2}, {5.0, 1.4, 1.0}};
    s.event_kind = "fall";
    s.event_tick = 3.0;
    s.robot_x = 0.1;
    s.robot_y = 0.1;
    s.stage_rates = {0.1, 0.2, 0.3};
    s.nav_success_p = 0.9;
    s.nav_retries = 2;
    s.seed = 77;

    const SimScenario back = scenario_from_json(scenario_to_json(s));
    CHECK(back.map.cells == s.map.cells);
    CHECK(back.map.resolution == 0.5);
    CHECK(back.map.origin_x == -1.0);
    REQUIRE(back.anchors.size() == 1);
    CHECK(back.anchors[0].mac == s.anchors[0].mac);
    CHECK(back.trajectory.size() == 2);
    CHECK(back.event_kind == "fall");
    CHECK(back.event_tick == 3.0);
    CHECK(back.stage_rates.nav_fail == 0.2);
    CHECK(back.nav_success_p == 0.9);
    CHECK(back.nav_retries == 2);
    CHECK(back.seed == 77);

    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::object()), parse_error);
}
