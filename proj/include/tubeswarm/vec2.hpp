#pragma once
/**
 * @file vec2.hpp
 * @brief Small 2-D vector used for positions, velocities and commands.
 */

#include <cmath>
#include <ostream>

namespace tubeswarm {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(const Vec2& r) { x += r.x; y += r.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& r) { x -= r.x; y -= r.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr bool operator==(const Vec2&) const = default;

    [[nodiscard]] constexpr double dot(const Vec2& r) const { return x * r.x + y * r.y; }
    /// z-component of the 3-D cross product.
    [[nodiscard]] constexpr double cross(const Vec2& r) const { return x * r.y - y * r.x; }
    [[nodiscard]] constexpr double squaredNorm() const { return x * x + y * y; }
    [[nodiscard]] double norm() const { return std::hypot(x, y); }

    /// Rotated by +90 degrees (counter-clockwise).
    [[nodiscard]] constexpr Vec2 perp() const { return {-y, x}; }

    /// Unit vector; zero when the norm is at or below @p eps.
    [[nodiscard]] Vec2 normalized(double eps = 0.0) const {
        const double n = norm();
        return n > eps ? Vec2{x / n, y / n} : Vec2{};
    }

    [[nodiscard]] bool isFinite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << '(' << v.x << ", " << v.y << ')';
}

}  // namespace tubeswarm
