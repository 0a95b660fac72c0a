#pragma once
/**
 * @file dynamics.hpp
 * @brief Ground-truth double-integrator swarm state and its integrator.
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/tube_geometry.hpp>
#include <tubeswarm/vec2.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace tubeswarm {

struct RobotState {
    int id{0};
    Vec2 position;
    Vec2 velocity;
    /// Latched once the robot crosses the finishing line.
    bool passed{false};
};

struct SwarmState {
    double time{0.0};
    std::vector<RobotState> robots;
};

/**
 * One semi-implicit Euler step: v += a dt, then p += v dt using the updated velocity.
 * Throws SimulationDiverged naming the robot when a command or the resulting state is
 * not finite. @p tick is only used in that diagnostic.
 */
inline void stepDynamics(SwarmState& state, std::span<const Vec2> accel_commands, double dt_physics,
                         long tick = -1) {
    require(dt_physics > 0.0, "dt_physics must be positive");
    require(accel_commands.size() == state.robots.size(), "need exactly one acceleration command per robot");
    for (std::size_t i = 0; i < state.robots.size(); ++i) {
        RobotState& r = state.robots[i];
        const Vec2& a = accel_commands[i];
        if (!a.isFinite())
            throw SimulationDiverged("non-finite acceleration command for robot " + std::to_string(r.id) +
                                         " at tick " + std::to_string(tick),
                                     r.id, tick);
        r.velocity += a * dt_physics;
        r.position += r.velocity * dt_physics;
        if (!r.position.isFinite() || !r.velocity.isFinite())
            throw SimulationDiverged("robot " + std::to_string(r.id) + " state diverged at tick " +
                                         std::to_string(tick),
                                     r.id, tick);
    }
    state.time += dt_physics;
}

[[nodiscard]] inline SwarmState stepped(SwarmState state, std::span<const Vec2> accel_commands, double dt_physics) {
    stepDynamics(state, accel_commands, dt_physics);
    return state;
}

/// Latches the passed flag for robots beyond the finishing line of an open tube.
inline void markPassed(SwarmState& state, const TubeSpec& tube) {
    require(!tube.closed(), "mark_passed needs an open tube");
    for (RobotState& r : state.robots)
        if (!r.passed && tube.hasPassed(r.position)) r.passed = true;
}

}  // namespace tubeswarm
