#pragma once
/**
 * @file controllers.hpp
 * @brief Vector-field velocity commands and acceleration tracking laws for tube passing.
 *
 * The velocity command is v_c = -sat(u1 + u2 + u3 [+ u4] [+ u5], v_m) with
 *   u1  line approaching      -v_m t_c(p_hat)
 *   u2  robot avoidance       sum_j -b_ij (p_i - p_j)
 *   u3  tube keeping          (I - t_c t_c^T) c_i, evaluated at p_hat
 *   u4  cohesion              sum_j d_ij (p_i - p_j)
 *   u5  velocity alignment    k5 sum_j (v_i - v_j)
 *
 * Barrier coefficients are reciprocal barriers:
 *   b_ij = k2 (1/(d - 2 r_s) - 1/(r_a - r_s)) / d        for 2 r_s < d <= r_s + r_a
 *   |c_i| = k3 (1/(d_b - r_s) - 1/(r_a - r_s))           for r_s < d_b <= r_a
 * where d is the inter-robot distance and d_b the distance of p_hat to the tube
 * boundary. Both vanish continuously at their activation distance and diverge at the
 * hard constraint; distances closer than epsilon_dist to the constraint are clamped.
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/sensing.hpp>
#include <tubeswarm/tube_geometry.hpp>
#include <tubeswarm/vec2.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tubeswarm {

struct ControllerGains {
    double k2{1.0};
    double k3{1.0};
    double k4{2.0};
    double k5{1.0};
    double k_v{1.0};
    double v_m{1.0};
    double r_s{0.2};
    double r_a{0.3};
    double r_c{1.0};
    double r_d{2.0};
    double epsilon_dist{1e-3};
    /// Per-axis clamp on the finite-difference feedforward; defaults to 10 v_m / dt_ctrl.
    std::optional<double> a_max;
    /// Keep cohesion and alignment active after a robot has passed the finishing line.
    bool post_pass_flocking{false};

    void validate() const {
        require(k2 > 0 && k3 > 0 && k5 > 0 && k_v > 0, "gains k2, k3, k5, k_v must be positive");
        require(k4 >= 0, "k4 must be non-negative");
        require(v_m > 0, "v_m must be positive");
        require(r_s > 0 && r_s < r_a && r_a <= r_c && r_c < r_d, "radii must satisfy 0 < r_s < r_a <= r_c < r_d");
        require(epsilon_dist > 0, "epsilon_dist must be positive");
        require(!a_max || *a_max > 0, "a_max must be positive");
    }

    [[nodiscard]] double feedforwardClamp(double dt_ctrl) const { return a_max.value_or(10.0 * v_m / dt_ctrl); }
};

enum class ControllerVariant {
    /// u1 + u2 + u3 in the field, plain tracking law.
    Original,
    /// all five terms in the field, plain tracking law.
    Modified,
    /// u1..u4 in the field, alignment term subtracted inside the tracking gain.
    ModifiedAccelAlignment,
};

inline std::string_view toString(ControllerVariant v) {
    switch (v) {
        case ControllerVariant::Original: return "original";
        case ControllerVariant::Modified: return "modified";
        case ControllerVariant::ModifiedAccelAlignment: return "modified-accel";
    }
    return "?";
}

inline ControllerVariant parseVariant(std::string_view s) {
    if (s == "original") return ControllerVariant::Original;
    if (s == "modified") return ControllerVariant::Modified;
    if (s == "modified-accel") return ControllerVariant::ModifiedAccelAlignment;
    throw InvalidInput("unknown controller variant '" + std::string(s) + "'");
}

struct ControlTerms {
    Vec2 u1, u2, u3, u4, u5;
    Vec2 v_c;
    bool saturated{false};
    /// Neighbors (or the boundary) closer to the hard constraint than epsilon_dist.
    int near_collisions{0};
};

/// Radial saturation onto the closed ball of radius v_m.
[[nodiscard]] inline Vec2 sat(const Vec2& x, double v_m) {
    require(v_m > 0.0, "sat: v_m must be positive");
    const double n = x.norm();
    if (n <= v_m) return x;
    return x * (v_m / n);
}

namespace detail {
inline void checkDeltaInterval(double d1, double d2) {
    require(d1 < d2, "smooth_delta requires d1 < d2");
}
}  // namespace detail

/**
 * C^1 cubic step from 0 at d1 to 1 at d2. The cubic A x^3 + B x^2 + C x + D with
 * A = 2/(d1-d2)^3, B = -3(d1+d2)/(d1-d2)^3, C = 6 d1 d2/(d1-d2)^3, D = d1^2 (d1-3 d2)/(d1-d2)^3
 * is evaluated as 3z^2 - 2z^3 with z = (x-d1)/(d2-d1); the monomial coefficients
 * cancel badly when d1, d2 are large relative to d2 - d1.
 */
[[nodiscard]] inline double smoothDelta(double x, double d1, double d2) {
    detail::checkDeltaInterval(d1, d2);
    if (x <= d1) return 0.0;
    if (x >= d2) return 1.0;
    const double z = (x - d1) / (d2 - d1);
    return z * z * (3.0 - 2.0 * z);
}

/// d/dx of smoothDelta; zero outside (d1, d2).
[[nodiscard]] inline double smoothDeltaDerivative(double x, double d1, double d2) {
    detail::checkDeltaInterval(d1, d2);
    if (x <= d1 || x >= d2) return 0.0;
    const double w = d2 - d1;
    const double z = (x - d1) / w;
    return 6.0 * z * (1.0 - z) / w;
}

/// d_ij = k4 delta'(dist, r_c, r_d) / dist.
[[nodiscard]] inline double cohesionCoefficient(double dist, const ControllerGains& g) {
    require(dist > 0.0, "cohesion coefficient needs a positive distance");
    return g.k4 * smoothDeltaDerivative(dist, g.r_c, g.r_d) / dist;
}

/// Largest value of k4 delta'(dist) over dist, attained at (r_c + r_d) / 2.
[[nodiscard]] inline double cohesionForceCap(const ControllerGains& g) {
    return g.k4 * 1.5 / (g.r_d - g.r_c);
}

/// Inter-robot barrier coefficient b_ij. @p clamped is set when dist was within epsilon of contact.
[[nodiscard]] inline double repulsionCoefficient(double dist, const ControllerGains& g, bool* clamped = nullptr) {
    const double contact = 2.0 * g.r_s;
    const double activation = g.r_s + g.r_a;
    if (clamped) *clamped = false;
    if (dist > activation) return 0.0;
    double d = dist;
    if (d <= contact + g.epsilon_dist) {
        d = contact + g.epsilon_dist;
        if (clamped) *clamped = true;
    }
    const double b = g.k2 * (1.0 / (d - contact) - 1.0 / (activation - contact)) / d;
    return std::max(b, 0.0);
}

/// Magnitude of the boundary barrier for boundary distance @p d_b.
[[nodiscard]] inline double boundaryBarrier(double d_b, const ControllerGains& g, bool* clamped = nullptr) {
    if (clamped) *clamped = false;
    if (d_b > g.r_a) return 0.0;
    double d = d_b;
    if (d <= g.r_s + g.epsilon_dist) {
        d = g.r_s + g.epsilon_dist;
        if (clamped) *clamped = true;
    }
    return std::max(g.k3 * (1.0 / (d - g.r_s) - 1.0 / (g.r_a - g.r_s)), 0.0);
}

[[nodiscard]] inline Vec2 velocityAlignmentTerm(std::span<const RelativeMeasurement> rel, double k5) {
    Vec2 sum;
    for (const auto& m : rel) sum += m.rel_velocity;
    return sum * k5;
}

/**
 * Evaluate all control terms and the velocity command for one robot.
 * The tube is queried at the observed (drifted) position; neighbor terms use exact
 * relative measurements.
 */
[[nodiscard]] inline ControlTerms computeTerms(const ObservationState& obs, std::span<const RelativeMeasurement> rel,
                                               const TubeSpec& tube, const ControllerGains& g, bool passed,
                                               ControllerVariant variant) {
    ControlTerms t;
    const TubeQueryResult q = tube.query(obs.position_hat);
    t.u1 = q.tangent * (-g.v_m);

    const bool flocking = variant != ControllerVariant::Original && (!passed || g.post_pass_flocking);

    if (passed && !flocking) {
        // Every interaction term is zero; -sat(u1) is v_m t_c exactly.
        t.v_c = q.tangent * g.v_m;
        return t;
    }

    for (const auto& m : rel) {
        const double dist = m.rel_position.norm();
        if (!passed) {
            bool clamped = false;
            const double b = repulsionCoefficient(dist, g, &clamped);
            if (clamped) ++t.near_collisions;
            t.u2 -= m.rel_position * b;
        }
        if (flocking && dist > 0.0) t.u4 += m.rel_position * cohesionCoefficient(dist, g);
    }

    if (!passed) {
        bool clamped = false;
        const double c = boundaryBarrier(q.boundary_distance, g, &clamped);
        if (clamped) ++t.near_collisions;
        Vec2 outward;
        if (q.lateral_offset > 0.0) outward = q.normal;
        else if (q.lateral_offset < 0.0) outward = -q.normal;
        const Vec2 c_i = outward * c;
        t.u3 = c_i - q.tangent * q.tangent.dot(c_i);
    }

    if (flocking) t.u5 = velocityAlignmentTerm(rel, g.k5);

    Vec2 sum = t.u1 + t.u2 + t.u3;
    if (variant == ControllerVariant::Modified) sum += t.u4 + t.u5;
    if (variant == ControllerVariant::ModifiedAccelAlignment) sum += t.u4;
    t.saturated = sum.norm() > g.v_m;
    t.v_c = -sat(sum, g.v_m);
    return t;
}

/**
 * Previous-tick velocity command to difference against for the feedforward term.
 * For Modified the alignment term is held at its current value, so dv_c/dt carries no
 * relative-acceleration component (relative accelerations are not measured).
 */
[[nodiscard]] inline Vec2 feedforwardReference(const ControlTerms& prev, const ControlTerms& now,
                                               const ControllerGains& g, ControllerVariant variant) {
    if (variant != ControllerVariant::Modified) return prev.v_c;
    return -sat(prev.u1 + prev.u2 + prev.u3 + prev.u4 + now.u5, g.v_m);
}

/**
 * Tracking law a = k_v (v_c - v_hat [- u5]) + dv_c/dt, with the derivative taken as a
 * backward difference over one controller tick and clamped per axis.
 * @p u5 is subtracted only for ModifiedAccelAlignment.
 */
[[nodiscard]] inline Vec2 accelerationCommand(const Vec2& v_hat, const Vec2& v_c, const Vec2& v_c_prev, const Vec2& u5,
                                              const ControllerGains& g, double dt_ctrl, ControllerVariant variant) {
    require(dt_ctrl > 0.0, "dt_ctrl must be positive");
    const double clamp = g.feedforwardClamp(dt_ctrl);
    Vec2 ff = (v_c - v_c_prev) / dt_ctrl;
    ff.x = std::clamp(ff.x, -clamp, clamp);
    ff.y = std::clamp(ff.y, -clamp, clamp);

    Vec2 err = v_c - v_hat;
    if (variant == ControllerVariant::ModifiedAccelAlignment) err -= u5;
    return err * g.k_v + ff;
}

[[nodiscard]] inline Vec2 accelerationCommand(const Vec2& v_hat, const Vec2& v_c, const Vec2& v_c_prev,
                                              std::span<const RelativeMeasurement> rel, const ControllerGains& g,
                                              double dt_ctrl, ControllerVariant variant) {
    return accelerationCommand(v_hat, v_c, v_c_prev, velocityAlignmentTerm(rel, g.k5), g, dt_ctrl, variant);
}

}  // namespace tubeswarm
