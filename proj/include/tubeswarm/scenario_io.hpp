#pragma once
/**
 * @file scenario_io.hpp
 * @brief Flat key-value scenario files.
 *
 * One `key = value` pair per line, `#` starts a comment. `waypoint` and `robot` may
 * repeat; every other key appears at most once. A file may start from a built-in
 * scenario with `base = open6` (or `closed10`) and override individual fields; giving
 * any `waypoint` replaces the base waypoints, giving any `robot` replaces the base
 * robots.
 *
 *   name = my_tube
 *   closed = false
 *   half_width = 1.0
 *   resample_step = 0.01
 *   waypoint = 0 0
 *   waypoint = 10 0
 *   robot = 1.0 0.3          # px py [vx vy]
 *   k_v = 5
 *   drift_mode = B           # A: per-step variance, B: continuous integration
 *   variant = modified       # original | modified | modified-accel
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/format.hpp>
#include <tubeswarm/harness.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tubeswarm {

namespace scenario_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(long line, const std::string& key, const std::string& why) {
    throw InvalidInput("scenario line " + std::to_string(line) + ", field '" + key + "': " + why);
}

inline std::vector<double> numbers(const std::string& value, long line, const std::string& key) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string tok;
    while (ss >> tok) {
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) fail(line, key, "not a number: " + tok);
        out.push_back(v);
    }
    return out;
}

inline double number(const std::string& value, long line, const std::string& key) {
    const auto v = numbers(value, line, key);
    if (v.size() != 1) fail(line, key, "expected one number");
    return v[0];
}

inline bool boolean(const std::string& value, long line, const std::string& key) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    fail(line, key, "expected true/false");
}

}  // namespace scenario_detail

[[nodiscard]] inline Scenario builtinScenario(const std::string& name) {
    if (name == "open6") return makeOpen6Scenario();
    if (name == "closed10") return makeClosed10Scenario();
    throw InvalidInput("unknown built-in scenario '" + name + "'");
}

[[nodiscard]] inline DriftScaling parseDriftMode(const std::string& s) {
    if (s == "A" || s == "a") return DriftScaling::PerStepVariance;
    if (s == "B" || s == "b") return DriftScaling::ContinuousIntegration;
    throw InvalidInput("drift mode must be A or B, got '" + s + "'");
}

/// Parses a scenario file and validates the result. Errors name the line and field.
[[nodiscard]] inline Scenario readScenario(std::istream& is) {
    using namespace scenario_detail;
    Scenario sc;
    bool have_base = false;
    bool waypoints_given = false;
    bool robots_given = false;
    std::set<std::string> seen;
    std::string raw;
    long lineno = 0;

    while (std::getline(is, raw)) {
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(lineno, line, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key != "waypoint" && key != "robot" && !seen.insert(key).second) fail(lineno, key, "given twice");

        try {
            if (key == "base") {
                if (lineno != 1 && !seen.empty() && seen.size() > 1) fail(lineno, key, "must come before other fields");
                sc = builtinScenario(value);
                have_base = true;
            } else if (key == "name") sc.name = value;
            else if (key == "closed") sc.tube_def.closed = boolean(value, lineno, key);
            else if (key == "half_width") sc.tube_def.half_width = number(value, lineno, key);
            else if (key == "resample_step") sc.tube_def.resample_step = number(value, lineno, key);
            else if (key == "waypoint") {
                const auto v = numbers(value, lineno, key);
                if (v.size() != 2) fail(lineno, key, "expected 'x y'");
                if (!waypoints_given) sc.tube_def.waypoints.clear();
                waypoints_given = true;
                sc.tube_def.waypoints.push_back({v[0], v[1]});
            } else if (key == "robot") {
                const auto v = numbers(value, lineno, key);
                if (v.size() != 2 && v.size() != 4) fail(lineno, key, "expected 'px py' or 'px py vx vy'");
                if (!robots_given) sc.robots.clear();
                robots_given = true;
                sc.robots.push_back({{v[0], v[1]}, v.size() == 4 ? Vec2{v[2], v[3]} : Vec2{}});
            } else if (key == "k2") sc.gains.k2 = number(value, lineno, key);
            else if (key == "k3") sc.gains.k3 = number(value, lineno, key);
            else if (key == "k4") sc.gains.k4 = number(value, lineno, key);
            else if (key == "k5") sc.gains.k5 = number(value, lineno, key);
            else if (key == "k_v") sc.gains.k_v = number(value, lineno, key);
            else if (key == "v_m") sc.gains.v_m = number(value, lineno, key);
            else if (key == "r_s") sc.gains.r_s = number(value, lineno, key);
            else if (key == "r_a") sc.gains.r_a = number(value, lineno, key);
            else if (key == "r_c") sc.gains.r_c = number(value, lineno, key);
            else if (key == "r_d") sc.gains.r_d = number(value, lineno, key);
            else if (key == "epsilon_dist") sc.gains.epsilon_dist = number(value, lineno, key);
            else if (key == "a_max") {
                if (value == "default") sc.gains.a_max.reset();
                else sc.gains.a_max = number(value, lineno, key);
            } else if (key == "post_pass_flocking") sc.gains.post_pass_flocking = boolean(value, lineno, key);
            else if (key == "sigma_p") sc.noise.sigma_p = number(value, lineno, key);
            else if (key == "sigma_v") sc.noise.sigma_v = number(value, lineno, key);
            else if (key == "drift_mode") sc.noise.drift_scaling = parseDriftMode(value);
            else if (key == "variant") sc.variant = parseVariant(value);
            else if (key == "duration") sc.duration = number(value, lineno, key);
            else if (key == "dt_physics") sc.dt_physics = number(value, lineno, key);
            else if (key == "dt_ctrl") sc.dt_ctrl = number(value, lineno, key);
            else fail(lineno, key, "unknown field");
        } catch (const InvalidInput& e) {
            const std::string msg = e.what();
            if (msg.rfind("scenario line", 0) == 0) throw;
            fail(lineno, key, msg);
        }
    }

    if (!have_base && sc.tube_def.waypoints.empty()) throw InvalidInput("scenario field 'waypoint': no waypoints given");
    if (sc.robots.empty()) throw InvalidInput("scenario field 'robot': no robots given");
    sc.noise.dt_obs = sc.dt_ctrl;
    try {
        sc.buildTube();
        sc.validate();
    } catch (const std::exception& e) {
        throw InvalidInput(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

[[nodiscard]] inline Scenario readScenarioFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot read scenario file '" + path + "'");
    return readScenario(in);
}

/// Writes every field explicitly so the file rebuilds the same scenario without a base.
inline void writeScenario(std::ostream& os, const Scenario& sc) {
    auto f = [](double v) { return formatDouble(v); };
    const ControllerGains& g = sc.gains;
    os << "name = " << sc.name << '\n'
       << "closed = " << (sc.tube_def.closed ? "true" : "false") << '\n'
       << "half_width = " << f(sc.tube_def.half_width) << '\n'
       << "resample_step = " << f(sc.tube_def.resample_step) << '\n';
    for (const Vec2& w : sc.tube_def.waypoints) os << "waypoint = " << f(w.x) << ' ' << f(w.y) << '\n';
    for (const InitialRobot& r : sc.robots)
        os << "robot = " << f(r.position.x) << ' ' << f(r.position.y) << ' ' << f(r.velocity.x) << ' '
           << f(r.velocity.y) << '\n';
    os << "k2 = " << f(g.k2) << "\nk3 = " << f(g.k3) << "\nk4 = " << f(g.k4) << "\nk5 = " << f(g.k5)
       << "\nk_v = " << f(g.k_v) << "\nv_m = " << f(g.v_m) << "\nr_s = " << f(g.r_s) << "\nr_a = " << f(g.r_a)
       << "\nr_c = " << f(g.r_c) << "\nr_d = " << f(g.r_d) << "\nepsilon_dist = " << f(g.epsilon_dist)
       << "\na_max = " << (g.a_max ? f(*g.a_max) : std::string("default"))
       << "\npost_pass_flocking = " << (g.post_pass_flocking ? "true" : "false") << '\n';
    os << "sigma_p = " << f(sc.noise.sigma_p) << "\nsigma_v = " << f(sc.noise.sigma_v)
       << "\ndrift_mode = " << toString(sc.noise.drift_scaling) << "\nvariant = " << toString(sc.variant)
       << "\nduration = " << f(sc.duration) << "\ndt_physics = " << f(sc.dt_physics)
       << "\ndt_ctrl = " << f(sc.dt_ctrl) << '\n';
}

}  // namespace tubeswarm
