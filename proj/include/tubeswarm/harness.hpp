#pragma once
/**
 * @file harness.hpp
 * @brief Scenario runner, run metrics, CSV traces and paired controller comparisons.
 *
 * A run is a two-rate loop. Every controller tick (dt_ctrl) the noise generators
 * advance, each robot computes its command from its own observation and exact
 * neighbor measurements, and one trace row per robot is recorded from the state at
 * the start of the tick. The command is then held for dt_ctrl / dt_physics physics
 * steps. Metrics are computed from true positions.
 */

#include <tubeswarm/controllers.hpp>
#include <tubeswarm/dynamics.hpp>
#include <tubeswarm/errors.hpp>
#include <tubeswarm/format.hpp>
#include <tubeswarm/sensing.hpp>
#include <tubeswarm/tube_geometry.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <future>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace tubeswarm {

/// Everything needed to rebuild a tube; kept so scenarios can be written back to file.
struct TubeDefinition {
    std::vector<Vec2> waypoints;
    double half_width{1.0};
    bool closed{false};
    double resample_step{0.01};

    [[nodiscard]] TubeSpec build() const { return buildTube(waypoints, half_width, closed, resample_step); }
};

struct InitialRobot {
    Vec2 position;
    Vec2 velocity;
};

struct Scenario {
    std::string name;
    TubeDefinition tube_def;
    std::shared_ptr<const TubeSpec> tube;
    std::vector<InitialRobot> robots;
    ControllerGains gains;
    NoiseConfig noise;
    ControllerVariant variant{ControllerVariant::Modified};
    double duration{33.0};
    double dt_physics{0.001};
    double dt_ctrl{0.02};

    /// (Re)builds the tube from tube_def.
    void buildTube() { tube = std::make_shared<const TubeSpec>(tube_def.build()); }

    [[nodiscard]] long controllerTicks() const { return std::lround(duration / dt_ctrl); }
    [[nodiscard]] long substeps() const { return std::lround(dt_ctrl / dt_physics); }

    void validate() const {
        require(tube != nullptr, "scenario has no tube");
        require(!robots.empty(), "scenario has no robots");
        gains.validate();
        noise.validate();
        require(duration > 0.0, "duration must be positive");
        require(dt_physics > 0.0 && dt_ctrl > 0.0, "time steps must be positive");
        const double ratio = dt_ctrl / dt_physics;
        require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio && std::round(ratio) >= 1.0,
                "dt_ctrl must be an integer multiple of dt_physics");
        require(std::abs(noise.dt_obs - dt_ctrl) < 1e-12, "noise generator must run at the controller rate");
        for (std::size_t i = 0; i < robots.size(); ++i) {
            require(robots[i].position.isFinite() && robots[i].velocity.isFinite(),
                    "robot " + std::to_string(i) + " has a non-finite initial state");
            require(tube->query(robots[i].position).boundary_distance > 0.0,
                    "robot " + std::to_string(i) + " does not start strictly inside the tube");
            for (std::size_t j = i + 1; j < robots.size(); ++j)
                require((robots[i].position - robots[j].position).norm() >= 2.0 * gains.r_s,
                        "robots " + std::to_string(i) + " and " + std::to_string(j) +
                            " start closer than 2 r_s");
        }
    }
};

struct TraceRecord {
    double t{0.0};
    int robot_id{0};
    Vec2 p, v, p_hat, v_hat;
    /// Boundary distance of the true position, r_t - |offset|.
    double d_t{0.0};
    /// Distance to the nearest other robot; +inf for a single robot.
    double min_neighbor_dist{std::numeric_limits<double>::infinity()};
    bool passed{false};
    std::optional<ControlTerms> terms;
};

struct RunMetrics {
    std::vector<double> d_t_all_times;
    /// Per tick: sum over robots still in the tube of min(d_t,i - r_s, 0).
    std::vector<double> d_t_all_series;
    double d_t_all_integral{0.0};
    double min_pairwise_distance{std::numeric_limits<double>::infinity()};
    long collision_count{0};
    double boundary_violation_time{0.0};
    std::optional<double> all_passed_time;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    RunMetrics metrics;
    /// Checksum over every noise draw of every robot, in robot-id order.
    std::uint64_t noise_checksum{0};
    long near_collision_events{0};
    long projection_jumps{0};
    bool aborted{false};
    std::string diagnostic;
};

struct RunOptions {
    bool keep_trace{true};
    bool trace_terms{false};
};

/// Tick contribution to d_t,all. Robots that already passed the finishing line are excluded.
[[nodiscard]] inline double dtAllContribution(double d_t, bool passed, double r_s) {
    return passed ? 0.0 : std::min(d_t - r_s, 0.0);
}

[[nodiscard]] inline RunResult runScenario(const Scenario& sc, std::uint64_t seed, const RunOptions& opt = {}) {
    sc.validate();
    const TubeSpec& tube = *sc.tube;
    const ControllerGains& g = sc.gains;
    const std::size_t M = sc.robots.size();
    const long ticks = sc.controllerTicks();
    const long substeps = sc.substeps();

    SwarmState state;
    for (std::size_t i = 0; i < M; ++i)
        state.robots.push_back({static_cast<int>(i), sc.robots[i].position, sc.robots[i].velocity, false});

    NoiseConfig noise = sc.noise;
    noise.seed = seed;
    std::vector<NoiseSource> sources;
    for (const RobotState& r : state.robots) sources.emplace_back(seed, r.id);
    std::vector<ObservationState> obs(M);
    std::vector<std::optional<ControlTerms>> prev_terms(M);
    std::vector<Vec2> accel(M);
    std::vector<double> last_arc(M, std::numeric_limits<double>::quiet_NaN());

    RunResult res;
    RunMetrics& m = res.metrics;
    if (opt.keep_trace) res.trace.reserve(static_cast<std::size_t>(ticks) * M);
    m.d_t_all_series.reserve(static_cast<std::size_t>(ticks));
    m.d_t_all_times.reserve(static_cast<std::size_t>(ticks));

    const double jump_threshold = 10.0 * tube.resampleStep();

    long tick = 0;
    try {
        for (; tick < ticks; ++tick) {
            const double t = static_cast<double>(tick) * sc.dt_ctrl;
            state.time = t;
            if (!tube.closed()) markPassed(state, tube);

            for (std::size_t i = 0; i < M; ++i) observeSelf(state.robots[i], obs[i], noise, sources[i]);

            double dt_all = 0.0;
            bool any_violation = false;
            bool any_collision = false;
            bool all_passed = true;
            for (std::size_t i = 0; i < M; ++i) {
                const RobotState& r = state.robots[i];
                const auto rel = neighbors(state, r.id, g.r_d);
                ControlTerms terms = computeTerms(obs[i], rel, tube, g, r.passed, sc.variant);
                res.near_collision_events += terms.near_collisions;
                const Vec2 prev = prev_terms[i] ? feedforwardReference(*prev_terms[i], terms, g, sc.variant)
                                                : terms.v_c;
                accel[i] = accelerationCommand(obs[i].velocity_hat, terms.v_c, prev, terms.u5, g, sc.dt_ctrl,
                                               sc.variant);
                prev_terms[i] = terms;

                const TubeQueryResult q = tube.query(r.position);
                if (!std::isnan(last_arc[i])) {
                    double jump = std::abs(q.arc_length - last_arc[i]);
                    if (tube.closed()) jump = std::min(jump, tube.length() - jump);
                    if (jump > jump_threshold) ++res.projection_jumps;
                }
                last_arc[i] = q.arc_length;

                double nearest = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < M; ++j)
                    if (j != i) nearest = std::min(nearest, (r.position - state.robots[j].position).norm());

                dt_all += dtAllContribution(q.boundary_distance, r.passed, g.r_s);
                if (!r.passed && q.boundary_distance < g.r_s) any_violation = true;
                if (nearest < 2.0 * g.r_s) any_collision = true;
                m.min_pairwise_distance = std::min(m.min_pairwise_distance, nearest);
                all_passed = all_passed && r.passed;

                if (opt.keep_trace) {
                    TraceRecord rec;
                    rec.t = t;
                    rec.robot_id = r.id;
                    rec.p = r.position;
                    rec.v = r.velocity;
                    rec.p_hat = obs[i].position_hat;
                    rec.v_hat = obs[i].velocity_hat;
                    rec.d_t = q.boundary_distance;
                    rec.min_neighbor_dist = nearest;
                    rec.passed = r.passed;
                    if (opt.trace_terms) rec.terms = terms;
                    res.trace.push_back(rec);
                }
            }

            m.d_t_all_times.push_back(t);
            m.d_t_all_series.push_back(dt_all);
            m.d_t_all_integral += dt_all * sc.dt_ctrl;
            if (any_collision) ++m.collision_count;
            if (any_violation) m.boundary_violation_time += sc.dt_ctrl;
            if (!tube.closed() && all_passed && !m.all_passed_time) m.all_passed_time = t;

            for (long k = 0; k < substeps; ++k) stepDynamics(state, accel, sc.dt_physics, tick);
        }
        if (!tube.closed()) {
            markPassed(state, tube);
            const bool done = std::all_of(state.robots.begin(), state.robots.end(),
                                          [](const RobotState& r) { return r.passed; });
            if (done && !m.all_passed_time) m.all_passed_time = static_cast<double>(ticks) * sc.dt_ctrl;
        }
    } catch (const SimulationDiverged& e) {
        res.aborted = true;
        res.diagnostic = e.what();
    }

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const NoiseSource& s : sources) h = (h ^ s.checksum()) * 0x100000001b3ULL;
    res.noise_checksum = h;
    return res;
}

/// Recomputes the d_t,all series from trace rows (rows grouped by tick, robots in id order).
[[nodiscard]] inline std::vector<double> dtAllFromTrace(const std::vector<TraceRecord>& trace, double r_s) {
    std::vector<double> series;
    std::optional<double> current_t;
    for (const TraceRecord& rec : trace) {
        if (!current_t || rec.t != *current_t) {
            series.push_back(0.0);
            current_t = rec.t;
        }
        series.back() += dtAllContribution(rec.d_t, rec.passed, r_s);
    }
    return series;
}

// ---------------------------------------------------------------------------
// Trace files

inline void writeTraceHeader(std::ostream& os, bool with_terms) {
    os << "t,robot_id,px,py,vx,vy,phatx,phaty,vhatx,vhaty,d_t,min_nbr_dist,passed";
    if (with_terms) os << ",u1x,u1y,u2x,u2y,u3x,u3y,u4x,u4y,u5x,u5y";
    os << '\n';
}

inline void writeTraceRow(std::ostream& os, const TraceRecord& r, bool with_terms) {
    auto f = [](double v) { return formatDouble(v); };
    os << f(r.t) << ',' << r.robot_id << ',' << f(r.p.x) << ',' << f(r.p.y) << ',' << f(r.v.x) << ',' << f(r.v.y)
       << ',' << f(r.p_hat.x) << ',' << f(r.p_hat.y) << ',' << f(r.v_hat.x) << ',' << f(r.v_hat.y) << ','
       << f(r.d_t) << ',' << f(r.min_neighbor_dist) << ',' << (r.passed ? 1 : 0);
    if (with_terms) {
        const ControlTerms c = r.terms.value_or(ControlTerms{});
        for (const Vec2& u : {c.u1, c.u2, c.u3, c.u4, c.u5}) os << ',' << f(u.x) << ',' << f(u.y);
    }
    os << '\n';
}

inline void writeTrace(std::ostream& os, const std::vector<TraceRecord>& trace, bool with_terms) {
    writeTraceHeader(os, with_terms);
    for (const TraceRecord& r : trace) writeTraceRow(os, r, with_terms);
}

namespace detail {
inline double parseField(const std::string& tok, long line) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw InvalidInput("trace line " + std::to_string(line) + ": cannot parse number '" + tok + "'");
    return v;
}
}  // namespace detail

/// Parses a trace written by writeTrace. Throws InvalidInput naming the line on malformed input.
[[nodiscard]] inline std::vector<TraceRecord> readTrace(std::istream& is) {
    std::string line;
    long lineno = 1;
    if (!std::getline(is, line)) throw InvalidInput("trace line 1: empty trace (missing header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string base = "t,robot_id,px,py,vx,vy,phatx,phaty,vhatx,vhaty,d_t,min_nbr_dist,passed";
    bool with_terms = false;
    if (line == base + ",u1x,u1y,u2x,u2y,u3x,u3y,u4x,u4y,u5x,u5y") with_terms = true;
    else if (line != base) throw InvalidInput("trace line 1: unexpected header");
    const std::size_t expect = with_terms ? 23 : 13;

    std::vector<TraceRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) tok.push_back(cell);
        if (tok.size() != expect)
            throw InvalidInput("trace line " + std::to_string(lineno) + ": expected " + std::to_string(expect) +
                               " fields, got " + std::to_string(tok.size()));
        std::vector<double> v;
        v.reserve(tok.size());
        for (const auto& t : tok) v.push_back(detail::parseField(t, lineno));
        TraceRecord r;
        r.t = v[0];
        r.robot_id = static_cast<int>(v[1]);
        r.p = {v[2], v[3]};
        r.v = {v[4], v[5]};
        r.p_hat = {v[6], v[7]};
        r.v_hat = {v[8], v[9]};
        r.d_t = v[10];
        r.min_neighbor_dist = v[11];
        r.passed = v[12] != 0.0;
        if (with_terms) {
            ControlTerms c;
            c.u1 = {v[13], v[14]};
            c.u2 = {v[15], v[16]};
            c.u3 = {v[17], v[18]};
            c.u4 = {v[19], v[20]};
            c.u5 = {v[21], v[22]};
            r.terms = c;
        }
        out.push_back(r);
    }
    if (out.empty()) throw InvalidInput("trace line " + std::to_string(lineno) + ": trace has no rows");
    return out;
}

// ---------------------------------------------------------------------------
// Summaries and paired comparison

struct SummaryRow {
    std::uint64_t seed{0};
    ControllerVariant variant{ControllerVariant::Modified};
    RunMetrics metrics;
    std::uint64_t noise_checksum{0};
    bool aborted{false};
};

inline void writeSummaryHeader(std::ostream& os) {
    os << "seed,variant,d_t_all_integral,collision_count,boundary_violation_time,all_passed_time,"
          "min_pairwise_distance\n";
}

inline void writeSummaryRow(std::ostream& os, const SummaryRow& r) {
    const RunMetrics& m = r.metrics;
    os << r.seed << ',' << toString(r.variant) << ',' << formatDouble(m.d_t_all_integral) << ','
       << m.collision_count << ',' << formatDouble(m.boundary_violation_time) << ','
       << (m.all_passed_time ? formatDouble(*m.all_passed_time) : std::string{}) << ','
       << formatDouble(m.min_pairwise_distance) << '\n';
}

struct ComparisonTable {
    /// Two rows per seed (original, then modified), sorted by seed.
    std::vector<SummaryRow> rows;
    int wins{0};
    int ties{0};
    int losses{0};
    double win_rate{0.0};
    /// Mean over seeds of modified minus original d_t,all integral (positive = modified better).
    double mean_improvement{0.0};
    double mean_original{0.0};
    double mean_modified{0.0};
    /// True when every seed fed both variants the same noise draws.
    bool noise_paired{true};

    [[nodiscard]] bool allTied() const { return ties == static_cast<int>(rows.size() / 2); }
};

/// Runs fn(i) for i in [0, n) on a small worker pool; results are returned in index order.
template <typename Fn>
auto parallelMap(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
        }));
    for (auto& j : jobs) j.get();
    return out;
}

/// Runs the original and modified controllers on every seed with identical noise streams.
[[nodiscard]] inline ComparisonTable compareControllers(const Scenario& base, std::vector<std::uint64_t> seeds) {
    require(seeds.size() >= 2, "a comparison needs at least 2 seeds");
    std::sort(seeds.begin(), seeds.end());
    RunOptions opt;
    opt.keep_trace = false;

    const auto pairs = parallelMap(seeds.size(), [&](std::size_t i) {
        std::pair<SummaryRow, SummaryRow> p;
        for (ControllerVariant v : {ControllerVariant::Original, ControllerVariant::Modified}) {
            Scenario sc = base;
            sc.variant = v;
            const RunResult r = runScenario(sc, seeds[i], opt);
            SummaryRow row{seeds[i], v, r.metrics, r.noise_checksum, r.aborted};
            (v == ControllerVariant::Original ? p.first : p.second) = std::move(row);
        }
        return p;
    });

    ComparisonTable table;
    for (const auto& [orig, mod] : pairs) {
        table.rows.push_back(orig);
        table.rows.push_back(mod);
        const double a = orig.metrics.d_t_all_integral;
        const double b = mod.metrics.d_t_all_integral;
        if (b > a) ++table.wins;
        else if (b == a) ++table.ties;
        else ++table.losses;
        table.mean_original += a;
        table.mean_modified += b;
        table.noise_paired = table.noise_paired && orig.noise_checksum == mod.noise_checksum;
    }
    const double n = static_cast<double>(pairs.size());
    table.mean_original /= n;
    table.mean_modified /= n;
    table.mean_improvement = table.mean_modified - table.mean_original;
    table.win_rate = table.wins / n;
    return table;
}

// ---------------------------------------------------------------------------
// Canonical scenarios

/// Robots per row and rows of the open-tube starting grid.
inline constexpr int kOpenGridColumns = 3;
inline constexpr int kOpenGridRows = 2;

/**
 * Six robots through a 1 m half-width open tube: a straight lead-in, a cosine hump of
 * 3 m height over 20 m and a straight run-out. Robots start in a 2 x 3 grid whose two
 * rows run along the entry tangent, centered on the centerline.
 */
[[nodiscard]] inline Scenario makeOpen6Scenario() {
    Scenario sc;
    sc.name = "open6";
    std::vector<Vec2> wp;
    for (double x = 0.0; x < 3.0; x += 0.5) wp.push_back({x, 0.0});
    for (int k = 0; k <= 200; ++k) {
        const double x = 3.0 + 0.1 * k;
        wp.push_back({x, 1.5 * (1.0 - std::cos(std::numbers::pi * (x - 3.0) / 10.0))});
    }
    for (double x = 23.5; x <= 27.0 + 1e-9; x += 0.5) wp.push_back({x, 0.0});
    sc.tube_def = {std::move(wp), 1.0, false, 0.01};
    sc.buildTube();

    ControllerGains& g = sc.gains;
    g.k2 = g.k3 = g.k5 = 1.0;
    g.k4 = 2.0;
    g.r_s = 0.2;
    g.r_a = 0.3;
    g.r_c = 1.0;
    g.r_d = 2.0;
    g.v_m = 1.0;
    g.k_v = 5.0;
    g.a_max = 3.0 * g.v_m;

    sc.noise.sigma_p = 1.0;
    sc.noise.sigma_v = 1.0;
    sc.noise.dt_obs = 0.02;
    sc.noise.drift_scaling = DriftScaling::ContinuousIntegration;
    sc.duration = 33.0;
    sc.dt_physics = 0.001;
    sc.dt_ctrl = 0.02;

    const double spacing = std::max(2.0 * g.r_a, g.r_c / 2.0);
    const double s0 = 0.5;
    for (int row = 0; row < kOpenGridRows; ++row) {
        const double lateral = (row - 0.5 * (kOpenGridRows - 1)) * spacing;
        for (int col = 0; col < kOpenGridColumns; ++col) {
            const double s = s0 + col * spacing;
            sc.robots.push_back({{s, lateral}, {0.0, 0.0}});
        }
    }
    return sc;
}

/**
 * Ten robots on a closed elliptical tube (semi-axes 1.2 m x 0.7 m, half width 0.25 m),
 * evenly spaced in arc length on the centerline and at rest.
 */
[[nodiscard]] inline Scenario makeClosed10Scenario() {
    Scenario sc;
    sc.name = "closed10";
    std::vector<Vec2> wp;
    constexpr int kPoints = 720;
    for (int k = 0; k < kPoints; ++k) {
        const double th = 2.0 * std::numbers::pi * k / kPoints;
        wp.push_back({1.2 * std::cos(th), 0.7 * std::sin(th)});
    }
    sc.tube_def = {std::move(wp), 0.25, true, 0.005};
    sc.buildTube();

    ControllerGains& g = sc.gains;
    g.k2 = g.k3 = g.k5 = 1.0;
    g.k4 = 2.0;
    g.r_s = 0.075;
    g.r_a = 0.125;
    g.r_c = 0.3;
    g.r_d = 1.0;
    g.v_m = 0.1;
    g.k_v = 5.0;
    g.a_max = 3.0 * g.v_m;
    g.epsilon_dist = 1e-4;

    sc.noise.sigma_p = 1e-5;
    sc.noise.sigma_v = 1e-5;
    sc.noise.dt_obs = 0.02;
    sc.noise.drift_scaling = DriftScaling::PerStepVariance;
    sc.duration = 70.0;
    sc.dt_physics = 0.001;
    sc.dt_ctrl = 0.02;

    const auto pts = sc.tube->curve().samples();
    const auto arc = sc.tube->curve().arcLengths();
    const double L = sc.tube->length();
    constexpr int kRobots = 10;
    for (int i = 0; i < kRobots; ++i) {
        const double s = L * i / kRobots;
        const auto it = std::lower_bound(arc.begin(), arc.end(), s);
        const auto k = static_cast<std::size_t>(std::distance(arc.begin(), it));
        sc.robots.push_back({pts[std::min(k, pts.size() - 1)], {0.0, 0.0}});
    }
    return sc;
}

[[nodiscard]] inline std::pair<Scenario, Scenario> buildCanonicalScenarios() {
    return {makeOpen6Scenario(), makeClosed10Scenario()};
}

}  // namespace tubeswarm
