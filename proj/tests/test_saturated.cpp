#include <gtest/gtest.h>

#include <cmath>

#include "redlab/errors.hpp"
#include "redlab/saturated.hpp"

using namespace redlab;

TEST(ClosedForm, TableRows) {
    EXPECT_DOUBLE_EQ(ell_bar_closed_form(5, 4).ell_bar, 2.0);
    EXPECT_DOUBLE_EQ(ell_bar_closed_form(5, 4).ell_bar_over_K, 0.4);
    EXPECT_DOUBLE_EQ(ell_bar_closed_form(7, 1).ell_bar_over_K, 1.0);
    EXPECT_DOUBLE_EQ(ell_bar_closed_form(6, 6).ell_bar, 1.0);
    EXPECT_NEAR(ell_bar_closed_form(6, 6).ell_bar_over_K, 0.1667, 1e-4);
}

TEST(ClosedForm, OnlyForEdgeDegrees) {
    EXPECT_THROW(ell_bar_closed_form(4, 2), NotClosedForm);
    EXPECT_THROW(ell_bar_closed_form(9, 5), NotClosedForm);
    for (int K = 2; K <= 12; ++K) {
        EXPECT_DOUBLE_EQ(ell_bar_closed_form(K, 1).ell_bar, K);
        EXPECT_DOUBLE_EQ(ell_bar_closed_form(K, K - 1).ell_bar, 2.0);
        EXPECT_DOUBLE_EQ(ell_bar_closed_form(K, K).ell_bar, 1.0);
    }
}

TEST(Threshold, Examples) {
    EXPECT_NEAR(stability_threshold_fcfs(3, 2), 2.0 / 3.0, 1e-12);
    for (int K = 3; K <= 9; ++K) EXPECT_NEAR(stability_threshold_fcfs(K, K - 1), 2.0 / K, 1e-12);
    EXPECT_NEAR(stability_threshold_fcfs(6, 3), 0.573, 0.005);
}

TEST(ExactSolve, FourTwo) {
    const EllBarResult r = ell_bar_exact(4, 2);
    EXPECT_EQ(r.method, EllBarMethod::TruncatedSolve);
    EXPECT_NEAR(r.ell_bar_over_K, 0.719, 0.001);
    EXPECT_LT(r.error_bound, 1e-6);
}

TEST(ExactSolve, FiveThree) {
    const EllBarResult r = ell_bar_exact(5, 3);
    EXPECT_NEAR(r.ell_bar_over_K, 0.547, 0.001);
    EXPECT_LT(r.error_bound, 1e-6);
}

TEST(ExactSolve, MatchesClosedFormsOutsideItsTargetDegree) {
    // The solver is valid for any d; d = K-1 has the closed form 2.
    EXPECT_NEAR(ell_bar_exact(4, 3).ell_bar, 2.0, 1e-6);
    EXPECT_NEAR(ell_bar_exact(3, 1).ell_bar, 3.0, 1e-6);
}

TEST(ExactSolve, TruncationLevelsConverge) {
    const double a = ell_bar_truncated(4, 2, 4).ell_bar;
    const double b = ell_bar_truncated(4, 2, 12).ell_bar;
    const double c = ell_bar_truncated(4, 2, 24).ell_bar;
    EXPECT_GT(std::abs(a - c), std::abs(b - c));
}

TEST(ExactSolve, StateCapRaises) {
    ExactSolveOptions o;
    o.max_states = 50;
    EXPECT_THROW(ell_bar_exact(5, 3, o), TruncationNotConverged);
}

TEST(MonteCarlo, MatchesClosedForm) {
    Rng rng(RngSpec{3, 0});
    const EllBarResult r = ell_bar_mc(5, 4, rng);
    EXPECT_NEAR(r.ell_bar_over_K, 0.4, std::max(r.error_bound / 5, 1e-9) * 3);
}

TEST(MonteCarlo, ThreeTwo) {
    Rng rng(RngSpec{4, 0});
    const EllBarResult r = ell_bar_mc(3, 2, rng);
    EXPECT_NEAR(r.ell_bar_over_K, 2.0 / 3.0, 0.005);
}

TEST(MonteCarlo, NeverIdlesACompatibleServer) {
    Rng rng(RngSpec{5, 0});
    MonteCarloOptions o;
    o.departures = 20000;
    o.check_structure = true;
    EXPECT_NO_THROW(ell_bar_mc(6, 3, rng, o));
    EXPECT_NO_THROW(ell_bar_mc(5, 2, rng, o));
}

TEST(MonteCarlo, BoundsHold) {
    MonteCarloOptions o;
    o.departures = 100000;
    for (int K = 2; K <= 8; ++K) {
        for (int d = 1; d <= K; ++d) {
            Rng rng(RngSpec{static_cast<std::uint64_t>(10 * K + d), 0});
            const double l = ell_bar_mc(K, d, rng, o).ell_bar;
            EXPECT_GE(l, std::ceil(static_cast<double>(K) / d) - 1e-9) << K << "," << d;
            EXPECT_LE(l, K - d + 1 + 1e-9) << K << "," << d;
        }
    }
}

TEST(MonteCarlo, DecreasesInDegree) {
    // Observed, not proven: for K = 7 more copies mean fewer busy servers.
    MonteCarloOptions o;
    o.departures = 200000;
    double prev = 2.0;
    double prev_ci = 0.0;
    for (int d = 1; d <= 7; ++d) {
        Rng rng(RngSpec{70 + static_cast<std::uint64_t>(d), 0});
        const EllBarResult r = ell_bar_mc(7, d, rng, o);
        EXPECT_LE(r.ell_bar_over_K, prev + (r.error_bound + prev_ci) / 7) << d;
        prev = r.ell_bar_over_K;
        prev_ci = r.error_bound;
    }
}

TEST(MonteCarlo, Deterministic) {
    MonteCarloOptions o;
    o.departures = 50000;
    Rng a(RngSpec{9, 1});
    Rng b(RngSpec{9, 1});
    EXPECT_EQ(ell_bar_mc(6, 2, a, o).ell_bar, ell_bar_mc(6, 2, b, o).ell_bar);
}

TEST(MonteCarlo, RejectsTinyRuns) {
    Rng rng(1);
    MonteCarloOptions o;
    o.departures = 10;
    EXPECT_THROW(ell_bar_mc(4, 2, rng, o), Error);
}

TEST(Auto, PicksClosedFormWhenAvailable) {
    EXPECT_EQ(ell_bar_auto(5, 4).method, EllBarMethod::ClosedForm);
    EXPECT_EQ(ell_bar_auto(7, 3, 100000).method, EllBarMethod::MonteCarlo);
}
