#include <tubeswarm/harness.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace tubeswarm;

namespace {

Scenario noiseless(Scenario sc) {
    sc.noise.sigma_p = 0.0;
    sc.noise.sigma_v = 0.0;
    return sc;
}

Scenario singleRobotScenario() {
    Scenario sc;
    sc.name = "single";
    sc.tube_def.waypoints = {{0.0, 0.0}, {10.0, 0.0}};
    sc.tube_def.half_width = 1.0;
    sc.buildTube();
    sc.robots = {{{0.0, 0.0}, {}}};
    sc.gains.k_v = 5.0;
    sc.duration = 15.0;
    return sc;
}

}  // namespace

TEST(CanonicalScenarios, OpenTubeParameters) {
    const Scenario sc = makeOpen6Scenario();
    EXPECT_EQ(sc.gains.k2, 1.0);
    EXPECT_EQ(sc.gains.k3, 1.0);
    EXPECT_EQ(sc.gains.k4, 2.0);
    EXPECT_EQ(sc.gains.k5, 1.0);
    EXPECT_EQ(sc.gains.r_s, 0.2);
    EXPECT_EQ(sc.gains.r_a, 0.3);
    EXPECT_EQ(sc.gains.r_c, 1.0);
    EXPECT_EQ(sc.gains.r_d, 2.0);
    EXPECT_EQ(sc.gains.v_m, 1.0);
    EXPECT_EQ(sc.noise.sigma_p, 1.0);
    EXPECT_EQ(sc.noise.sigma_v, 1.0);
    EXPECT_EQ(sc.tube_def.half_width, 1.0);
    EXPECT_EQ(sc.duration, 33.0);
    EXPECT_EQ(sc.dt_physics, 0.001);
    EXPECT_EQ(sc.dt_ctrl, 0.02);
    EXPECT_EQ(sc.robots.size(), 6u);
    EXPECT_FALSE(sc.tube->closed());
    EXPECT_NO_THROW(sc.validate());
}

TEST(CanonicalScenarios, ClosedTubeParameters) {
    const Scenario sc = makeClosed10Scenario();
    EXPECT_EQ(sc.tube->maxHalfWidth(), 0.25);
    EXPECT_EQ(sc.gains.v_m, 0.1);
    EXPECT_EQ(sc.gains.r_s, 0.075);
    EXPECT_EQ(sc.gains.r_a, 0.125);
    EXPECT_EQ(sc.gains.r_c, 0.3);
    EXPECT_EQ(sc.gains.r_d, 1.0);
    EXPECT_EQ(sc.noise.sigma_p, 1e-5);
    EXPECT_EQ(sc.noise.sigma_v, 1e-5);
    EXPECT_EQ(sc.duration, 70.0);
    EXPECT_EQ(sc.robots.size(), 10u);
    EXPECT_TRUE(sc.tube->closed());
    EXPECT_NO_THROW(sc.validate());
}

TEST(CanonicalScenarios, OpenFormationIsSymmetricGrid) {
    const Scenario sc = makeOpen6Scenario();
    const double spacing = std::max(2.0 * sc.gains.r_a, sc.gains.r_c / 2.0);
    double min_gap = 1e9;
    double offset_sum = 0.0;
    for (std::size_t i = 0; i < sc.robots.size(); ++i) {
        offset_sum += sc.tube->query(sc.robots[i].position).lateral_offset;
        for (std::size_t j = i + 1; j < sc.robots.size(); ++j)
            min_gap = std::min(min_gap, (sc.robots[i].position - sc.robots[j].position).norm());
    }
    EXPECT_NEAR(min_gap, spacing, 1e-9);
    EXPECT_NEAR(offset_sum, 0.0, 1e-9);
}

TEST(RunScenario, SingleRobotTravelsUnobstructed) {
    const Scenario sc = singleRobotScenario();
    const RunResult r = runScenario(sc, 1);
    ASSERT_FALSE(r.aborted);
    for (double v : r.metrics.d_t_all_series) EXPECT_EQ(v, 0.0);
    ASSERT_TRUE(r.metrics.all_passed_time.has_value());
    const double expect = sc.tube->length() / sc.gains.v_m;
    EXPECT_NEAR(*r.metrics.all_passed_time, expect, 0.05 * expect);
}

TEST(RunScenario, NoiselessOpenTubeIsSafe) {
    const Scenario sc = noiseless(makeOpen6Scenario());
    for (ControllerVariant v :
         {ControllerVariant::Original, ControllerVariant::Modified, ControllerVariant::ModifiedAccelAlignment}) {
        Scenario s = sc;
        s.variant = v;
        const RunResult r = runScenario(s, 1, {false, false});
        EXPECT_FALSE(r.aborted) << toString(v);
        EXPECT_TRUE(r.metrics.all_passed_time.has_value()) << toString(v);
        EXPECT_EQ(r.metrics.collision_count, 0) << toString(v);
        EXPECT_EQ(r.metrics.boundary_violation_time, 0.0) << toString(v);
        EXPECT_GE(r.metrics.min_pairwise_distance, 2.0 * sc.gains.r_s) << toString(v);
    }
}

TEST(RunScenario, OneRecordPerRobotPerTick) {
    Scenario sc = makeOpen6Scenario();
    sc.duration = 2.0;
    const RunResult r = runScenario(sc, 3);
    EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(sc.controllerTicks()) * sc.robots.size());
    EXPECT_EQ(r.metrics.d_t_all_series.size(), static_cast<std::size_t>(sc.controllerTicks()));
    for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_EQ(r.trace[k].robot_id, static_cast<int>(k % 6));
}

TEST(RunScenario, DtAllNeverPositive) {
    const RunResult r = runScenario(makeOpen6Scenario(), 4, {false, false});
    for (double v : r.metrics.d_t_all_series) EXPECT_LE(v, 0.0);
    EXPECT_LE(r.metrics.d_t_all_integral, 0.0);
}

TEST(RunScenario, MetricsRecomputeFromPersistedTrace) {
    Scenario sc = makeOpen6Scenario();
    sc.duration = 10.0;
    const RunResult r = runScenario(sc, 5);
    EXPECT_EQ(dtAllFromTrace(r.trace, sc.gains.r_s), r.metrics.d_t_all_series);

    std::stringstream ss;
    writeTrace(ss, r.trace, false);
    const std::vector<TraceRecord> back = readTrace(ss);
    ASSERT_EQ(back.size(), r.trace.size());
    EXPECT_EQ(dtAllFromTrace(back, sc.gains.r_s), r.metrics.d_t_all_series);
}

TEST(RunScenario, DeterministicForSeed) {
    Scenario sc = makeOpen6Scenario();
    sc.duration = 5.0;
    std::stringstream a, b, c;
    writeTrace(a, runScenario(sc, 9).trace, false);
    writeTrace(b, runScenario(sc, 9).trace, false);
    writeTrace(c, runScenario(sc, 10).trace, false);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(RunScenario, TraceTermsRoundTrip) {
    Scenario sc = makeOpen6Scenario();
    sc.duration = 1.0;
    RunOptions opt;
    opt.trace_terms = true;
    const RunResult r = runScenario(sc, 2, opt);
    std::stringstream ss;
    writeTrace(ss, r.trace, true);
    const auto back = readTrace(ss);
    ASSERT_TRUE(back[7].terms.has_value());
    EXPECT_EQ(back[7].terms->u1, r.trace[7].terms->u1);
    EXPECT_EQ(back[7].terms->u5, r.trace[7].terms->u5);
}

TEST(RunScenario, DivergenceAbortsWithPartialTrace) {
    Scenario sc = singleRobotScenario();
    sc.gains.k_v = 1e300;
    sc.robots[0].velocity = {0.5, 0.0};
    const RunResult r = runScenario(sc, 1);
    EXPECT_TRUE(r.aborted);
    EXPECT_NE(r.diagnostic.find("robot 0"), std::string::npos);
    EXPECT_FALSE(r.trace.empty());
    EXPECT_LT(r.trace.size(), static_cast<std::size_t>(sc.controllerTicks()));
}

TEST(ScenarioValidation, RejectsBadPlacementsAndSteps) {
    Scenario sc = singleRobotScenario();
    sc.robots.push_back({{0.3, 0.0}, {}});
    EXPECT_THROW(sc.validate(), ContractViolation);
    sc = singleRobotScenario();
    sc.robots[0].position = {5.0, 1.5};
    EXPECT_THROW(sc.validate(), ContractViolation);
    sc = singleRobotScenario();
    sc.dt_ctrl = 0.0215;
    sc.noise.dt_obs = sc.dt_ctrl;
    EXPECT_THROW(sc.validate(), ContractViolation);
}

TEST(Comparison, NoiseStreamsArePaired) {
    Scenario sc = makeOpen6Scenario();
    sc.duration = 3.0;
    Scenario a = sc, b = sc;
    a.variant = ControllerVariant::Original;
    b.variant = ControllerVariant::Modified;
    EXPECT_EQ(runScenario(a, 12, {false, false}).noise_checksum, runScenario(b, 12, {false, false}).noise_checksum);
    EXPECT_NE(runScenario(a, 12, {false, false}).noise_checksum, runScenario(a, 13, {false, false}).noise_checksum);

    const ComparisonTable t = compareControllers(sc, {4, 2, 3});
    EXPECT_TRUE(t.noise_paired);
    ASSERT_EQ(t.rows.size(), 6u);
    EXPECT_EQ(t.rows[0].seed, 2u);
    EXPECT_EQ(t.rows[0].variant, ControllerVariant::Original);
    EXPECT_EQ(t.rows[1].variant, ControllerVariant::Modified);
    EXPECT_EQ(t.rows[5].seed, 4u);
    EXPECT_EQ(t.wins + t.ties + t.losses, 3);
}

TEST(Comparison, ZeroNoiseTies) {
    const ComparisonTable t = compareControllers(noiseless(makeOpen6Scenario()), {1, 2});
    EXPECT_TRUE(t.allTied());
    for (const SummaryRow& row : t.rows) {
        EXPECT_TRUE(row.metrics.all_passed_time.has_value());
        EXPECT_EQ(row.metrics.d_t_all_integral, 0.0);
    }
}

TEST(Comparison, NeedsTwoSeeds) {
    EXPECT_THROW((void)compareControllers(makeOpen6Scenario(), {1}), ContractViolation);
}

TEST(Comparison, CohesionCostsTime) {
    Scenario with = noiseless(makeOpen6Scenario());
    Scenario without = with;
    without.gains.k4 = 0.0;
    const RunResult a = runScenario(with, 1, {false, false});
    const RunResult b = runScenario(without, 1, {false, false});
    ASSERT_TRUE(a.metrics.all_passed_time && b.metrics.all_passed_time);
    EXPECT_GE(*a.metrics.all_passed_time, *b.metrics.all_passed_time);
    EXPECT_EQ(a.metrics.collision_count, 0);
    EXPECT_EQ(b.metrics.collision_count, 0);
    EXPECT_EQ(a.metrics.boundary_violation_time, 0.0);
}

TEST(TraceIo, MalformedInputNamesLine) {
    std::stringstream empty;
    EXPECT_THROW((void)readTrace(empty), InvalidInput);

    std::stringstream header_only("t,robot_id,px,py,vx,vy,phatx,phaty,vhatx,vhaty,d_t,min_nbr_dist,passed\n");
    EXPECT_THROW((void)readTrace(header_only), InvalidInput);

    std::stringstream bad("t,robot_id,px,py,vx,vy,phatx,phaty,vhatx,vhaty,d_t,min_nbr_dist,passed\n"
                          "0,0,1,2,3,4,5,6,7,8,9,inf,0\n"
                          "0,1,1,2,x,4,5,6,7,8,9,10,0\n");
    try {
        (void)readTrace(bad);
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(SummaryIo, RowFormat) {
    SummaryRow row;
    row.seed = 7;
    row.variant = ControllerVariant::Original;
    row.metrics.d_t_all_integral = -0.25;
    row.metrics.collision_count = 2;
    row.metrics.boundary_violation_time = 0.04;
    row.metrics.min_pairwise_distance = 0.5;
    std::ostringstream os;
    writeSummaryHeader(os);
    writeSummaryRow(os, row);
    EXPECT_EQ(os.str(),
              "seed,variant,d_t_all_integral,collision_count,boundary_violation_time,all_passed_time,"
              "min_pairwise_distance\n7,original,-0.25,2,0.04,,0.5\n");
}
