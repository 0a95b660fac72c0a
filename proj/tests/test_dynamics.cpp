#include <tubeswarm/dynamics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace tubeswarm;

namespace {

SwarmState oneRobot(Vec2 p = {}, Vec2 v = {}) {
    SwarmState s;
    s.robots.push_back({0, p, v, false});
    return s;
}

TubeSpec straightTube() {
    const std::vector<Vec2> wp{{0.0, 0.0}, {10.0, 0.0}};
    return buildTube(wp, 1.0, false, 0.01);
}

}  // namespace

TEST(Dynamics, SingleEulerStep) {
    SwarmState s = oneRobot();
    const std::vector<Vec2> a{{1.0, 0.0}};
    stepDynamics(s, a, 0.001);
    EXPECT_DOUBLE_EQ(s.robots[0].velocity.x, 0.001);
    EXPECT_DOUBLE_EQ(s.robots[0].position.x, 1e-6);
    EXPECT_DOUBLE_EQ(s.time, 0.001);
}

TEST(Dynamics, BallisticMotionIsExact) {
    const Vec2 p0{1.0, -2.0}, v0{0.5, 0.25};
    SwarmState s = oneRobot(p0, v0);
    const std::vector<Vec2> a{{0.0, 0.0}};
    const int k = 1024;
    for (int i = 0; i < k; ++i) stepDynamics(s, a, 0.0009765625);  // 2^-10 keeps the sums exact
    EXPECT_EQ(s.robots[0].position, p0 + v0 * (k * 0.0009765625));
    EXPECT_EQ(s.robots[0].velocity, v0);
}

TEST(Dynamics, UniformAccelerationMatchesClosedForm) {
    const Vec2 p0{0.0, 0.0}, v0{0.3, -0.1};
    SwarmState s = oneRobot(p0, v0);
    const std::vector<Vec2> a{{1.0, 0.0}};
    for (int i = 0; i < 1000; ++i) stepDynamics(s, a, 0.001);
    EXPECT_NEAR((s.robots[0].position - p0 - v0).norm(), 0.5, 0.5e-3);
}

TEST(Dynamics, NonFiniteCommandAbortsNamingRobotAndTick) {
    SwarmState s = oneRobot();
    s.robots.push_back({7, {1.0, 0.0}, {}, false});
    const std::vector<Vec2> a{{0.0, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}};
    try {
        stepDynamics(s, a, 0.001, 42);
        FAIL() << "expected SimulationDiverged";
    } catch (const SimulationDiverged& e) {
        EXPECT_EQ(e.robotId(), 7);
        EXPECT_EQ(e.tick(), 42);
    }
}

TEST(Dynamics, CommandCountAndStepAreChecked) {
    SwarmState s = oneRobot();
    const std::vector<Vec2> none;
    EXPECT_THROW(stepDynamics(s, none, 0.001), ContractViolation);
    const std::vector<Vec2> a{{0.0, 0.0}};
    EXPECT_THROW(stepDynamics(s, a, 0.0), ContractViolation);
}

TEST(Dynamics, DeterministicTrajectory) {
    auto run = [] {
        SwarmState s = oneRobot({0.1, 0.2}, {0.3, 0.4});
        for (int i = 0; i < 500; ++i) {
            const std::vector<Vec2> a{{std::sin(0.01 * i), std::cos(0.013 * i)}};
            stepDynamics(s, a, 0.001);
        }
        return s.robots[0];
    };
    const RobotState a = run(), b = run();
    EXPECT_EQ(a.position, b.position);
    EXPECT_EQ(a.velocity, b.velocity);
}

TEST(Dynamics, MarkPassedBeyondFinishingLine) {
    const TubeSpec tube = straightTube();
    SwarmState s = oneRobot({10.5, 0.0});
    s.robots.push_back({1, {0.0, 0.0}, {}, false});
    markPassed(s, tube);
    EXPECT_TRUE(s.robots[0].passed);
    EXPECT_FALSE(s.robots[1].passed);
}

TEST(Dynamics, PassedFlagIsLatched) {
    const TubeSpec tube = straightTube();
    SwarmState s = oneRobot({10.2, 0.0});
    markPassed(s, tube);
    ASSERT_TRUE(s.robots[0].passed);
    for (double x : {9.8, 10.1, 9.0, 5.0}) {
        s.robots[0].position = {x, 0.0};
        markPassed(s, tube);
        EXPECT_TRUE(s.robots[0].passed);
    }
}

TEST(Dynamics, MarkPassedRequiresOpenTube) {
    const std::vector<Vec2> wp{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    const TubeSpec loop = buildTube(wp, 0.2, true, 0.01);
    SwarmState s = oneRobot();
    EXPECT_THROW(markPassed(s, loop), ContractViolation);
}
