#pragma once
/**
 * @file sensing.hpp
 * @brief Drifting self-localization and exact relative measurements.
 *
 * Each robot's odometry drift is a Gaussian random walk added to its true position;
 * its velocity estimate carries white Gaussian noise. Relative position and velocity
 * to neighbors are exact.
 *
 * Randomness: every robot owns a NoiseSource seeded from (run seed, robot id) through
 * splitmix64, so the streams do not depend on the order robots are processed in and
 * two runs with the same seed consume identical draws.
 */

#include <tubeswarm/dynamics.hpp>
#include <tubeswarm/errors.hpp>
#include <tubeswarm/vec2.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tubeswarm {

enum class DriftScaling {
    /// Per-tick increment variance sigma_p, so Var = sigma_p * t / dt_obs after time t.
    PerStepVariance,
    /// Per-tick increment variance sigma_p * dt_obs^2, so Var = sigma_p * dt_obs * t.
    ContinuousIntegration,
};

inline std::string_view toString(DriftScaling m) {
    return m == DriftScaling::PerStepVariance ? "A" : "B";
}

struct NoiseConfig {
    double sigma_p{0.0};  ///< per-axis position-noise variance parameter [m^2]
    double sigma_v{0.0};  ///< per-axis velocity-noise variance [(m/s)^2]
    double dt_obs{0.02};
    DriftScaling drift_scaling{DriftScaling::ContinuousIntegration};
    std::uint64_t seed{0};

    void validate() const {
        require(sigma_p >= 0.0 && std::isfinite(sigma_p), "sigma_p must be >= 0");
        require(sigma_v >= 0.0 && std::isfinite(sigma_v), "sigma_v must be >= 0");
        require(dt_obs > 0.0, "dt_obs must be positive");
    }

    /// Standard deviation of one per-axis drift increment.
    [[nodiscard]] double driftStepStddev() const {
        return drift_scaling == DriftScaling::PerStepVariance ? std::sqrt(sigma_p) : std::sqrt(sigma_p) * dt_obs;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the independent substream @p stream under run seed @p seed.
inline std::uint64_t substreamSeed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Per-robot Gaussian source with a running checksum of everything it has produced.
class NoiseSource {
public:
    NoiseSource() = default;
    NoiseSource(std::uint64_t run_seed, int robot_id)
        : engine_(substreamSeed(run_seed, static_cast<std::uint64_t>(robot_id))) {}

    double gaussian(double stddev) {
        const double z = normal_(engine_);
        checksum_ = (checksum_ ^ std::bit_cast<std::uint64_t>(z)) * 0x100000001b3ULL;
        return stddev * z;
    }

    [[nodiscard]] std::uint64_t checksum() const { return checksum_; }

private:
    std::mt19937_64 engine_{0};
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t checksum_{0xcbf29ce484222325ULL};
};

struct ObservationState {
    Vec2 drift;          ///< accumulated position drift r_p
    Vec2 position_hat;   ///< true position + drift
    Vec2 velocity_hat;   ///< true velocity + white noise
};

/**
 * Advance one observation tick: add a drift increment, then form the drifted position
 * and noisy velocity. Draw order per tick is fixed (drift x, drift y, vel x, vel y) and
 * all four are drawn even when a variance is zero, keeping streams aligned across configs.
 */
inline void observeSelf(const RobotState& robot, ObservationState& obs, const NoiseConfig& cfg, NoiseSource& noise) {
    const double sd_p = cfg.driftStepStddev();
    const double sd_v = std::sqrt(cfg.sigma_v);
    const double wx = noise.gaussian(sd_p);
    const double wy = noise.gaussian(sd_p);
    const double nx = noise.gaussian(sd_v);
    const double ny = noise.gaussian(sd_v);
    obs.drift += Vec2{wx, wy};
    obs.position_hat = robot.position + obs.drift;
    obs.velocity_hat = robot.velocity + Vec2{nx, ny};
}

struct RelativeMeasurement {
    int neighbor_id{0};
    Vec2 rel_position;  ///< p_i - p_j
    Vec2 rel_velocity;  ///< v_i - v_j
};

/// Exact relative measurements to every other robot within @p r_d (inclusive), sorted by id.
inline std::vector<RelativeMeasurement> neighbors(const SwarmState& state, int robot_id, double r_d) {
    require(r_d > 0.0, "detection radius must be positive");
    const auto self = std::find_if(state.robots.begin(), state.robots.end(),
                                   [robot_id](const RobotState& r) { return r.id == robot_id; });
    require(self != state.robots.end(), "unknown robot id " + std::to_string(robot_id));

    std::vector<RelativeMeasurement> out;
    const double r_d2 = r_d * r_d;
    for (const RobotState& other : state.robots) {
        if (other.id == robot_id) continue;
        const Vec2 dp = self->position - other.position;
        if (dp.squaredNorm() <= r_d2) out.push_back({other.id, dp, self->velocity - other.velocity});
    }
    std::sort(out.begin(), out.end(),
              [](const RelativeMeasurement& a, const RelativeMeasurement& b) { return a.neighbor_id < b.neighbor_id; });
    return out;
}

}  // namespace tubeswarm
