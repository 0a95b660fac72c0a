#include <tubeswarm/tube_geometry.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

using namespace tubeswarm;

namespace {

TubeSpec straightTube(double length = 10.0, double half_width = 1.0, double step = 0.01) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {length, 0.0}};
    return buildTube(wp, half_width, false, step);
}

std::vector<Vec2> circleWaypoints(double radius, int n) {
    std::vector<Vec2> wp;
    for (int k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n;
        wp.push_back({radius * std::cos(th), radius * std::sin(th)});
    }
    return wp;
}

}  // namespace

TEST(TubeGeometry, StraightTubeHasConstantFrame) {
    const TubeSpec tube = straightTube();
    for (double x = 0.0; x <= 10.0; x += 0.37) {
        const TubeQueryResult q = tube.query({x, 0.2});
        EXPECT_NEAR(q.tangent.x, 1.0, 1e-12);
        EXPECT_NEAR(q.tangent.y, 0.0, 1e-12);
        EXPECT_NEAR(q.normal.x, 0.0, 1e-12);
        EXPECT_NEAR(q.normal.y, 1.0, 1e-12);
    }
}

TEST(TubeGeometry, CircleTangentMatchesAnalytic) {
    const double R = 5.0;
    const TubeSpec tube = buildTube(circleWaypoints(R, 3600), 1.0, true, 0.01);
    ASSERT_TRUE(tube.closed());
    EXPECT_FALSE(tube.finishingArcLength().has_value());
    for (int k = 0; k < 36; ++k) {
        const double th = 2.0 * std::numbers::pi * (k + 0.3) / 36.0;
        const TubeQueryResult q = tube.query({R * std::cos(th), R * std::sin(th)});
        EXPECT_NEAR(q.tangent.x, -std::sin(th), 1e-4);
        EXPECT_NEAR(q.tangent.y, std::cos(th), 1e-4);
    }
}

TEST(TubeGeometry, LShapeArcLengthMatchesPolylineLength) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {3.0, 0.0}, {3.0, 4.0}};
    const TubeSpec tube = buildTube(wp, 0.5, false, 0.01);
    EXPECT_NEAR(tube.length(), 7.0, 1e-9);
    const auto arc = tube.curve().arcLengths();
    for (std::size_t k = 1; k < arc.size(); ++k) {
        EXPECT_GT(arc[k], arc[k - 1]);
        EXPECT_LE(arc[k] - arc[k - 1], 0.01 + 1e-12);
    }
    EXPECT_NEAR(static_cast<double>(arc.size()), 7.0 / 0.01 + 1.0, 1.0);
}

TEST(TubeGeometry, QueryOffCenterline) {
    const TubeSpec tube = straightTube();
    const TubeQueryResult q = tube.query({3.0, 0.4});
    EXPECT_NEAR(q.lateral_offset, 0.4, 1e-12);
    EXPECT_NEAR(q.boundary_distance, 0.6, 1e-12);
    EXPECT_NEAR(q.middle.x, 3.0, 1e-12);
    EXPECT_NEAR(q.middle.y, 0.0, 1e-12);
    EXPECT_NEAR(q.half_width, 1.0, 0.0);
}

TEST(TubeGeometry, QueryOnCenterline) {
    const TubeQueryResult q = straightTube().query({3.0, 0.0});
    EXPECT_EQ(q.lateral_offset, 0.0);
    EXPECT_EQ(q.boundary_distance, 1.0);
}

TEST(TubeGeometry, QueryOutsideTubeIsDefined) {
    const TubeQueryResult q = straightTube().query({5.0, -2.5});
    EXPECT_NEAR(q.lateral_offset, -2.5, 1e-12);
    EXPECT_NEAR(q.boundary_distance, -1.5, 1e-12);
}

TEST(TubeGeometry, CircleLateralOffsetAgreesWithBruteForce) {
    const double R = 5.0;
    const TubeSpec tube = buildTube(circleWaypoints(R, 720), 1.0, true, 0.01);
    const auto samples = tube.curve().samples();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < 50; ++k) {
        const double th = ang(rng);
        const Vec2 p{5.5 * std::cos(th), 5.5 * std::sin(th)};
        double best = std::numeric_limits<double>::infinity();
        for (const Vec2& s : samples) best = std::min(best, (s - p).norm());
        const TubeQueryResult q = tube.query(p);
        EXPECT_NEAR(std::abs(q.lateral_offset), 0.5, tube.resampleStep());
        EXPECT_LE(std::abs(q.lateral_offset), best + 1e-12);
    }
}

TEST(TubeGeometry, FrameIsOrthonormalEverywhere) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {3.0, 0.0}, {5.0, 2.0}, {5.0, 6.0}, {9.0, 6.5}};
    const TubeSpec tube = buildTube(wp, 0.8, false, 0.02);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-2.0, 11.0), uy(-2.0, 8.5);
    for (int k = 0; k < 2000; ++k) {
        const TubeQueryResult q = tube.query({ux(rng), uy(rng)});
        EXPECT_NEAR(q.tangent.norm(), 1.0, 1e-9);
        EXPECT_NEAR(q.normal.norm(), 1.0, 1e-9);
        EXPECT_LE(std::abs(q.tangent.dot(q.normal)), 1e-9);
        EXPECT_DOUBLE_EQ(q.boundary_distance, q.half_width - std::abs(q.lateral_offset));
    }
}

TEST(TubeGeometry, ProjectionIsIdempotent) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {4.0, 0.0}, {6.0, 3.0}, {10.0, 3.0}};
    const TubeSpec tube = buildTube(wp, 1.0, false, 0.01);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(0.0, 1.0);
    const auto samples = tube.curve().samples();
    for (int k = 0; k < 500; ++k) {
        const Vec2 c = samples[static_cast<std::size_t>(us(rng) * (samples.size() - 1))];
        const Vec2 p = c + Vec2{us(rng) - 0.5, us(rng) - 0.5};
        const TubeQueryResult q = tube.query(p);
        const TubeQueryResult q2 = tube.query(q.middle + q.normal * q.lateral_offset);
        EXPECT_NEAR(q2.arc_length, q.arc_length, tube.resampleStep());
    }
}

TEST(TubeGeometry, BoundarySignMatchesContainment) {
    const TubeSpec tube = straightTube();
    EXPECT_GT(tube.query({4.0, 0.99}).boundary_distance, 0.0);
    EXPECT_NEAR(tube.query({4.0, 1.0}).boundary_distance, 0.0, 1e-12);
    EXPECT_LT(tube.query({4.0, 1.01}).boundary_distance, 0.0);

    const auto [left, right] = tube.boundary();
    for (const Vec2& b : left) EXPECT_NEAR(tube.query(b).boundary_distance, 0.0, tube.resampleStep());
    for (const Vec2& b : right) EXPECT_NEAR(tube.query(b).boundary_distance, 0.0, tube.resampleStep());
}

TEST(TubeGeometry, ArcLengthMonotoneAlongCenterline) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {2.0, 1.0}, {4.0, -1.0}, {6.0, 0.0}};
    const TubeSpec tube = buildTube(wp, 0.5, false, 0.01);
    double last = -1.0;
    for (const Vec2& s : tube.curve().samples()) {
        const double a = tube.query(s).arc_length;
        EXPECT_GE(a, last);
        last = a;
    }
}

TEST(TubeGeometry, FinishingLine) {
    const TubeSpec tube = straightTube(10.0);
    EXPECT_TRUE(tube.hasPassed({10.5, 0.0}));
    EXPECT_FALSE(tube.hasPassed({9.9, 0.0}));
    EXPECT_TRUE(tube.hasPassed({10.0, 0.3}));
    EXPECT_FALSE(tube.hasPassed({0.0, 0.0}));
}

TEST(TubeGeometry, FinishingLineOnClosedTubeIsContractViolation) {
    const TubeSpec tube = buildTube(circleWaypoints(2.0, 100), 0.5, true, 0.01);
    EXPECT_THROW((void)tube.hasPassed({2.0, 0.0}), ContractViolation);
}

TEST(TubeGeometry, DegenerateWaypointsRejected) {
    const std::vector<Vec2> dup{{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
    EXPECT_THROW((void)buildTube(dup, 1.0, false, 0.01), InvalidInput);
    const std::vector<Vec2> one{{0.0, 0.0}};
    EXPECT_THROW((void)buildTube(one, 1.0, false, 0.01), InvalidInput);
    const std::vector<Vec2> ok{{0.0, 0.0}, {1.0, 0.0}};
    EXPECT_THROW((void)buildTube(ok, 1.0, false, 0.0), ContractViolation);
    EXPECT_THROW((void)buildTube(ok, -1.0, false, 0.01), InvalidInput);
}

TEST(TubeGeometry, ClosedCurveInvariants) {
    std::vector<Vec2> pts{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}};
    EXPECT_THROW(GeneratingCurve(pts, true), InvalidInput);
    pts.push_back({0.0, 0.0});
    EXPECT_NO_THROW(GeneratingCurve(pts, true));
}

TEST(TubeGeometry, NarrowTubeRejectedByPassableWidth) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {5.0, 0.0}};
    EXPECT_THROW((void)buildTube(wp, 0.1, false, 0.01, 0.4), InvalidInput);
    EXPECT_NO_THROW((void)buildTube(wp, 0.25, false, 0.01, 0.4));
}

TEST(TubeGeometry, SelfApproachWarnsButBuilds) {
    const std::vector<Vec2> hairpin{{0.0, 0.0}, {10.0, 0.0}, {10.0, 1.0}, {0.0, 1.0}};
    const TubeSpec tube = buildTube(hairpin, 1.0, false, 0.01);
    EXPECT_FALSE(tube.warnings().empty());
    EXPECT_TRUE(straightTube().warnings().empty());
}

TEST(TubeGeometry, VariableHalfWidthProfile) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {10.0, 0.0}};
    const TubeSpec tube = buildTube(wp, [](double s) { return 1.0 + 0.05 * s; }, false, 0.01);
    EXPECT_NEAR(tube.query({4.0, 0.0}).half_width, 1.2, 1e-9);
    EXPECT_NEAR(tube.minHalfWidth(), 1.0, 1e-12);
    EXPECT_NEAR(tube.maxHalfWidth(), 1.5, 1e-9);
}

TEST(TubeGeometry, OpenEndsExtendAsRays) {
    const TubeSpec tube = straightTube(10.0);
    const TubeQueryResult before = tube.query({-2.0, 0.3});
    EXPECT_NEAR(before.arc_length, -2.0, 1e-12);
    EXPECT_NEAR(before.lateral_offset, 0.3, 1e-12);
    const TubeQueryResult after = tube.query({12.0, -0.3});
    EXPECT_NEAR(after.arc_length, 12.0, 1e-12);
}

TEST(TubeGeometry, EquidistantTieResolvesToSmallestArcLength) {
    const std::vector<Vec2> square{{0.0, 0.0}, {2.0, 0.0}, {2.0, 2.0}, {0.0, 2.0}};
    const TubeSpec tube = buildTube(square, 1.5, true, 0.01);
    const TubeQueryResult q = tube.query({1.0, 1.0});
    EXPECT_NEAR(q.arc_length, 1.0, 1e-9);
    EXPECT_NEAR(std::abs(q.lateral_offset), 1.0, 1e-12);

    const TubeSpec circle = buildTube(circleWaypoints(3.0, 360), 0.5, true, 0.01);
    EXPECT_EQ(circle.query({0.0, 0.0}).arc_length, circle.query({0.0, 0.0}).arc_length);
}

TEST(TubeGeometry, ClosedBoundaryPolylinesAreLoops) {
    const TubeSpec tube = buildTube(circleWaypoints(3.0, 360), 0.5, true, 0.01);
    const auto [left, right] = tube.boundary();
    ASSERT_FALSE(left.empty());
    EXPECT_EQ(left.front(), left.back());
    EXPECT_EQ(right.front(), right.back());
    std::ostringstream os;
    writeBoundaryCsv(os, tube);
    EXPECT_EQ(os.str().rfind("side,x,y\nleft,", 0), 0u);
}
