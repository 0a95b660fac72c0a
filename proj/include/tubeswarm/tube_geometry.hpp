#pragma once
/**
 * @file tube_geometry.hpp
 * @brief Curve virtual tube: a generating curve swept by perpendicular cross sections.
 *
 * The generating curve is stored as a uniform arc-length polyline. Tangents are
 * central differences of the samples (one-sided at open endpoints) and normals are
 * tangents rotated by +90 degrees. Cross sections are symmetric, so the middle point
 * of a cross section is the curve point itself and the half width is r_t(s).
 *
 * Queries project a point onto the curve (nearest sample, refined on the two adjacent
 * segments). For open tubes the first and last segments are extended as rays, so
 * points before the entrance or beyond the finishing line still get a cross section
 * with arc length < 0 or > length().
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/format.hpp>
#include <tubeswarm/vec2.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tubeswarm {

/// Half width of the tube as a function of arc length [m].
using HalfWidthProfile = std::function<double(double)>;

inline HalfWidthProfile constantHalfWidth(double r_t) {
    return [r_t](double) { return r_t; };
}

class GeneratingCurve {
public:
    GeneratingCurve() = default;

    /**
     * Build from already uniformly spaced samples. For a closed curve the last sample
     * must coincide with the first.
     */
    GeneratingCurve(std::vector<Vec2> samples, bool closed) : samples_(std::move(samples)), closed_(closed) {
        if (samples_.size() < 2) throw InvalidInput("generating curve needs at least 2 samples");
        arc_.resize(samples_.size());
        arc_[0] = 0.0;
        for (std::size_t k = 1; k < samples_.size(); ++k) {
            const double seg = (samples_[k] - samples_[k - 1]).norm();
            if (!(seg > 0.0))
                throw InvalidInput("generating curve has coincident consecutive samples at index " +
                                   std::to_string(k));
            arc_[k] = arc_[k - 1] + seg;
        }
        if (closed_ && samples_.front() != samples_.back())
            throw InvalidInput("closed generating curve must end at its first sample");
        computeTangents();
    }

    [[nodiscard]] std::span<const Vec2> samples() const { return samples_; }
    [[nodiscard]] std::span<const double> arcLengths() const { return arc_; }
    [[nodiscard]] std::span<const Vec2> tangents() const { return tangents_; }
    [[nodiscard]] bool closed() const { return closed_; }
    [[nodiscard]] double length() const { return arc_.back(); }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }

private:
    void computeTangents() {
        const std::size_t n = samples_.size();
        tangents_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            Vec2 d;
            if (closed_ && (k == 0 || k == n - 1)) {
                d = samples_[1] - samples_[n - 2];
            } else if (k == 0) {
                d = samples_[1] - samples_[0];
            } else if (k == n - 1) {
                d = samples_[n - 1] - samples_[n - 2];
            } else {
                d = samples_[k + 1] - samples_[k - 1];
            }
            tangents_[k] = d.normalized();
        }
    }

    std::vector<Vec2> samples_;
    std::vector<double> arc_;
    std::vector<Vec2> tangents_;
    bool closed_{false};
};

struct TubeQueryResult {
    double arc_length{0.0};
    Vec2 tangent;
    Vec2 normal;
    Vec2 middle;
    double half_width{0.0};
    /// Signed coordinate of the point along the normal, measured from the middle point.
    double lateral_offset{0.0};
    /// half_width - |lateral_offset|; negative outside the tube.
    double boundary_distance{0.0};
};

class TubeSpec {
public:
    TubeSpec(GeneratingCurve curve, HalfWidthProfile half_width, double resample_step)
        : curve_(std::move(curve)), half_width_(std::move(half_width)), step_(resample_step) {
        require(static_cast<bool>(half_width_), "tube needs a half-width profile");
        for (double s : curve_.arcLengths()) {
            const double w = half_width_(s);
            if (!(w > 0.0) || !std::isfinite(w))
                throw InvalidInput("tube half width must be positive, got " + std::to_string(w) +
                                   " at arc length " + std::to_string(s));
            max_half_width_ = std::max(max_half_width_, w);
            min_half_width_ = std::min(min_half_width_, w);
        }
        detectSelfApproach();
    }

    [[nodiscard]] const GeneratingCurve& curve() const { return curve_; }
    [[nodiscard]] bool closed() const { return curve_.closed(); }
    [[nodiscard]] double length() const { return curve_.length(); }
    [[nodiscard]] double resampleStep() const { return step_; }
    [[nodiscard]] double halfWidth(double s) const { return half_width_(wrap(s)); }
    [[nodiscard]] double minHalfWidth() const { return min_half_width_; }
    [[nodiscard]] double maxHalfWidth() const { return max_half_width_; }
    /// Arc length of the finishing cross section; empty for closed tubes.
    [[nodiscard]] std::optional<double> finishingArcLength() const {
        if (closed()) return std::nullopt;
        return length();
    }
    /// Non-fatal validity warnings collected at construction.
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

    /// Maps an arc length into [0, length) for closed tubes; identity for open ones.
    [[nodiscard]] double wrap(double s) const {
        if (!closed()) return s;
        const double L = length();
        double r = std::fmod(s, L);
        if (r < 0.0) r += L;
        return r;
    }

    [[nodiscard]] TubeQueryResult query(const Vec2& p) const {
        const auto pts = curve_.samples();
        const auto arc = curve_.arcLengths();
        const std::size_t n = pts.size();

        // For closed curves the duplicated last sample is skipped; index 0 stands for it.
        const std::size_t scan_end = closed() ? n - 1 : n;
        std::size_t best = 0;
        double best_d2 = (pts[0] - p).squaredNorm();
        for (std::size_t k = 1; k < scan_end; ++k) {
            const double d2 = (pts[k] - p).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = k;
            }
        }

        struct Candidate {
            double d2;
            double s;
            std::size_t seg;  // segment [seg, seg + 1]
            double u;         // parameter along the segment, may leave [0,1] on end rays
        };
        std::optional<Candidate> pick;
        auto consider = [&](std::size_t seg) {
            const Vec2 a = pts[seg];
            const Vec2 b = pts[seg + 1];
            const Vec2 ab = b - a;
            double u = (p - a).dot(ab) / ab.squaredNorm();
            const bool first_ray = !closed() && seg == 0;
            const bool last_ray = !closed() && seg + 2 == n;
            if (!first_ray) u = std::max(u, 0.0);
            if (!last_ray) u = std::min(u, 1.0);
            const Vec2 foot = a + ab * u;
            const double d2 = (foot - p).squaredNorm();
            const double s = arc[seg] + u * (arc[seg + 1] - arc[seg]);
            if (!pick || d2 < pick->d2 || (d2 == pick->d2 && s < pick->s)) pick = Candidate{d2, s, seg, u};
        };

        if (closed()) {
            consider(best);                        // [best, best+1]
            consider(best == 0 ? n - 2 : best - 1);  // previous segment, wrapping
        } else {
            if (best + 1 < n) consider(best);
            if (best > 0) consider(best - 1);
        }

        const Candidate& c = *pick;
        const double uc = std::clamp(c.u, 0.0, 1.0);
        const auto tans = curve_.tangents();
        Vec2 t = (tans[c.seg] * (1.0 - uc) + tans[c.seg + 1] * uc).normalized();
        if (t.squaredNorm() == 0.0) t = (pts[c.seg + 1] - pts[c.seg]).normalized();

        TubeQueryResult r;
        r.arc_length = closed() ? wrap(c.s) : c.s;
        r.tangent = t;
        r.normal = t.perp();
        r.middle = pts[c.seg] + (pts[c.seg + 1] - pts[c.seg]) * c.u;
        r.half_width = half_width_(std::clamp(r.arc_length, 0.0, length()));
        r.lateral_offset = (p - r.middle).dot(r.normal);
        r.boundary_distance = r.half_width - std::abs(r.lateral_offset);
        return r;
    }

    /// Finishing-line test (closed comparison). Throws on closed tubes.
    [[nodiscard]] bool hasPassed(const Vec2& p) const {
        if (closed()) throw ContractViolation("has_passed is undefined for a closed tube");
        return query(p).arc_length >= length();
    }

    /// Boundary polylines at the curve samples: "left" at lambda_l = -r_t, "right" at lambda_r = +r_t.
    [[nodiscard]] std::pair<std::vector<Vec2>, std::vector<Vec2>> boundary() const {
        std::vector<Vec2> left, right;
        const auto pts = curve_.samples();
        const auto tans = curve_.tangents();
        const auto arc = curve_.arcLengths();
        left.reserve(pts.size());
        right.reserve(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const Vec2 n = tans[k].perp();
            const double w = half_width_(arc[k]);
            left.push_back(pts[k] - n * w);
            right.push_back(pts[k] + n * w);
        }
        return {std::move(left), std::move(right)};
    }

private:
    // Flags parts of the centerline that come back within one tube width of themselves.
    void detectSelfApproach() {
        const auto pts = curve_.samples();
        const auto arc = curve_.arcLengths();
        const std::size_t n = closed() ? pts.size() - 1 : pts.size();
        const double L = length();
        const std::size_t stride =
            std::max<std::size_t>(1, static_cast<std::size_t>(0.5 * min_half_width_ / std::max(step_, 1e-12)));
        for (std::size_t i = 0; i < n; i += stride) {
            for (std::size_t j = i + stride; j < n; j += stride) {
                double sep = arc[j] - arc[i];
                if (closed()) sep = std::min(sep, L - sep);
                const double w = std::max(half_width_(arc[i]), half_width_(arc[j]));
                if (sep > std::numbers::pi * w && (pts[i] - pts[j]).norm() < 2.0 * w) {
                    warnings_.push_back("centerline passes within one tube width of itself near arc lengths " +
                                        std::to_string(arc[i]) + " and " + std::to_string(arc[j]));
                    return;
                }
            }
        }
    }

    GeneratingCurve curve_;
    HalfWidthProfile half_width_;
    double step_;
    double min_half_width_{std::numeric_limits<double>::infinity()};
    double max_half_width_{0.0};
    std::vector<std::string> warnings_;
};

/**
 * Resample a waypoint polyline at uniform arc-length spacing (<= resample_step) and
 * wrap it into a tube. For closed tubes the polyline is closed back to the first
 * waypoint unless the last waypoint already coincides with it.
 *
 * @param min_passable_width  optional lower bound on the full width 2 r_t.
 */
inline TubeSpec buildTube(std::span<const Vec2> waypoints, HalfWidthProfile half_width, bool closed,
                          double resample_step, double min_passable_width = 0.0) {
    require(resample_step > 0.0, "resample_step must be positive");
    if (waypoints.size() < 2) throw InvalidInput("a tube needs at least 2 waypoints");

    std::vector<Vec2> poly(waypoints.begin(), waypoints.end());
    for (std::size_t k = 1; k < poly.size(); ++k) {
        if (!poly[k].isFinite() || !poly[k - 1].isFinite()) throw InvalidInput("non-finite waypoint");
        if (poly[k] == poly[k - 1])
            throw InvalidInput("degenerate waypoints: consecutive points " + std::to_string(k - 1) + " and " +
                               std::to_string(k) + " coincide");
    }
    if (closed && poly.front() != poly.back()) poly.push_back(poly.front());
    if (closed && poly.size() < 4) throw InvalidInput("a closed tube needs at least 3 distinct waypoints");

    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t k = 1; k < poly.size(); ++k) cum[k] = cum[k - 1] + (poly[k] - poly[k - 1]).norm();
    const double L = cum.back();

    const auto segments = static_cast<std::size_t>(std::ceil(L / resample_step - 1e-9));
    const std::size_t count = std::max<std::size_t>(segments, 1);
    const double h = L / static_cast<double>(count);

    std::vector<Vec2> samples;
    samples.reserve(count + 1);
    std::size_t seg = 0;
    for (std::size_t k = 0; k <= count; ++k) {
        if (k == count) {
            samples.push_back(poly.back());
            break;
        }
        const double s = h * static_cast<double>(k);
        while (seg + 2 < poly.size() && cum[seg + 1] <= s) ++seg;
        const double u = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        samples.push_back(poly[seg] + (poly[seg + 1] - poly[seg]) * u);
    }

    TubeSpec tube(GeneratingCurve(std::move(samples), closed), std::move(half_width), resample_step);
    if (2.0 * tube.minHalfWidth() < min_passable_width)
        throw InvalidInput("tube is narrower than the minimum passable width " + std::to_string(min_passable_width));
    return tube;
}

inline TubeSpec buildTube(std::span<const Vec2> waypoints, double half_width, bool closed, double resample_step,
                          double min_passable_width = 0.0) {
    return buildTube(waypoints, constantHalfWidth(half_width), closed, resample_step, min_passable_width);
}

/// Writes boundary polylines as CSV rows `side,x,y`.
inline void writeBoundaryCsv(std::ostream& os, const TubeSpec& tube) {
    const auto [left, right] = tube.boundary();
    os << "side,x,y\n";
    for (const Vec2& q : left) os << "left," << formatDouble(q.x) << ',' << formatDouble(q.y) << '\n';
    for (const Vec2& q : right) os << "right," << formatDouble(q.x) << ',' << formatDouble(q.y) << '\n';
}

}  // namespace tubeswarm
