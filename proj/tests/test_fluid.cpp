#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "redlab/errors.hpp"
#include "redlab/fluid.hpp"
#include "redlab/stats.hpp"

using namespace redlab;

namespace {

SystemConfig cfg(int K, int d, double lambda, double mu = 1.0) {
    SystemConfig c;
    c.K = K;
    c.d = d;
    c.lambda = lambda;
    c.policy = PolicyId::Ps;
    c.service = ServiceDist::exponential(mu);
    return c;
}

FluidState random_state(const TypeTable& t, Rng& rng) {
    FluidState s;
    for (int c = 0; c < t.size(); ++c) s.n.push_back(rng.uniform() < 0.2 ? 0.0 : 5 * rng.uniform());
    return s;
}

bool all_positive(const std::vector<double>& m) {
    return std::all_of(m.begin(), m.end(), [](double x) { return x > 0.0; });
}

}  // namespace

TEST(FluidDrift, IidBalanced) {
    const SystemConfig c = cfg(5, 2, 3.0);
    const FluidState s{std::vector<double>(10, 0.7)};
    for (ServerId k = 0; k < 5; ++k) EXPECT_NEAR(drift_iid_server(c, s, k), 3.0 * 2 / 5 - 2.0, 1e-12);
}

TEST(FluidDrift, IidWorkedExample) {
    const SystemConfig c = cfg(3, 2, 1.2);
    const FluidState s{{1.0, 1.0, 0.0}};
    // m = (2, 1, 1): type {1,2} gives 1/2 + 1/1, type {1,3} gives 1/2 + 1/1.
    EXPECT_NEAR(drift_iid_server(c, s, 0), 2 * 1.2 / 3 - 3.0, 1e-12);
}

TEST(FluidDrift, RosEqualsIidOnRandomStates) {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = 2 + static_cast<int>(rng.below(6));
        const int d = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
        const SystemConfig c = cfg(K, d, 0.5 + 3 * rng.uniform());
        const TypeTable t(K, d);
        const FluidState s = random_state(t, rng);
        const auto m = server_masses(t, s);
        if (!all_positive(m)) continue;
        for (ServerId k = 0; k < K; ++k) ASSERT_EQ(drift_ros_server(c, s, k), drift_iid_server(c, s, k));
    }
}

TEST(FluidDrift, IidMaxServerBound) {
    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const SystemConfig c = cfg(5, 3, 4 * rng.uniform());
        const TypeTable t(5, 3);
        const FluidState s = random_state(t, rng);
        const auto m = server_masses(t, s);
        if (!all_positive(m)) continue;
        const auto top = static_cast<ServerId>(std::max_element(m.begin(), m.end()) - m.begin());
        EXPECT_LE(drift_iid_server(c, s, top), c.lambda * 3 / 5 - 3.0 + 1e-12);
    }
}

TEST(FluidDrift, LbAllEqual) {
    const SystemConfig c = cfg(4, 2, 1.0);
    const FluidState s{std::vector<double>(6, 1.5)};
    for (ServerId k = 0; k < 4; ++k) EXPECT_NEAR(drift_lb_server(c, s, k), 0.5 - 1.0, 1e-12);
}

TEST(FluidDrift, LbWorkedExample) {
    const SystemConfig c = cfg(3, 2, 1.0);
    const FluidState s{{1.0, 1.0, 0.0}};
    EXPECT_NEAR(lb_service_rate_split(c, s, 0), 2.0, 1e-12);
    EXPECT_NEAR(lb_service_rate_direct(c, s, 0), 2.0, 1e-12);
}

TEST(FluidDrift, LbMinServerAndIdentity) {
    Rng rng(3);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = 3 + static_cast<int>(rng.below(4));
        const int d = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K - 2)));
        const SystemConfig c = cfg(K, d, 3 * rng.uniform(), 0.5 + rng.uniform());
        const TypeTable t(K, d);
        const FluidState s = random_state(t, rng);
        const auto m = server_masses(t, s);
        if (!all_positive(m)) continue;
        for (ServerId k = 0; k < K; ++k) {
            const double direct = lb_service_rate_direct(c, s, k);
            const double split = lb_service_rate_split(c, s, k);
            ASSERT_NEAR(direct, split, 1e-12 * std::max(1.0, direct));
        }
        const auto lo = std::min_element(m.begin(), m.end());
        if (std::count(m.begin(), m.end(), *lo) == 1) {
            const auto k = static_cast<ServerId>(lo - m.begin());
            EXPECT_NEAR(drift_lb_server(c, s, k), c.lambda * d / K - c.mu(), 1e-12);
            ++checked;
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(FluidDrift, LbEmptyServerIsDegenerate) {
    const SystemConfig c = cfg(3, 2, 1.0);
    const FluidState s{{0.0, 0.0, 1.0}};
    EXPECT_THROW(drift_lb_server(c, s, 0), DegenerateState);
}

TEST(FluidDrift, LbNeedsHomogeneousSpeeds) {
    SystemConfig c = cfg(3, 2, 1.0);
    c.speeds = {1, 2, 3};
    const FluidState s{{1.0, 1.0, 1.0}};
    EXPECT_THROW(drift_lb_server(c, s, 0), Error);
}

TEST(FluidIntegrate, IidEmptiesOnTime) {
    const SystemConfig c = cfg(3, 2, 1.5);
    const double dt = 1e-3;
    const FluidTrajectory traj = integrate_fluid(c, FluidState{{0.5, 0.5, 0.5}}, FluidField::Iid, 2.0, dt);
    const auto t = first_empty_time(traj);
    ASSERT_TRUE(t);
    EXPECT_NEAR(*t, 1.0, 2 * dt);
}

TEST(FluidIntegrate, LbMinimumGrowsAtLemmaRate) {
    const SystemConfig c = cfg(3, 2, 2.1);  // rho = 0.7 > 1/2
    const FluidTrajectory traj = integrate_fluid(c, FluidState{{1.0, 2.0, 3.0}}, FluidField::Lb, 6.0, 1e-3);
    const TypeTable t(3, 2);
    std::vector<std::pair<double, double>> mins;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] < 1.0) continue;
        const auto m = server_masses(t, traj.states[i]);
        mins.emplace_back(traj.t[i], *std::min_element(m.begin(), m.end()));
    }
    const double expected = 2.1 * 2 / 3 - 1.0;
    EXPECT_NEAR(divergence_slope(mins), expected, 0.01 * expected);
}

TEST(FluidIntegrate, EmptyLbStaysEmptyBelowThreshold) {
    const SystemConfig c = cfg(3, 2, 1.2);  // rho = 0.4 < 1/2
    const FluidTrajectory traj = integrate_fluid(c, FluidState{{0.0, 0.0, 0.0}}, FluidField::Lb, 3.0, 1e-2);
    for (const FluidState& s : traj.states)
        for (double x : s.n) EXPECT_EQ(x, 0.0);
}

TEST(FluidIntegrate, MassesStayNonnegative) {
    Rng rng(6);
    const TypeTable t(4, 2);
    for (FluidField f : {FluidField::Iid, FluidField::Ros, FluidField::Lb}) {
        const SystemConfig c = cfg(4, 2, 1.0);
        const FluidTrajectory traj = integrate_fluid(c, random_state(t, rng), f, 5.0, 1e-2);
        for (const FluidState& s : traj.states)
            for (double x : s.n) ASSERT_GE(x, 0.0);
    }
}
