#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "redlab/rng.hpp"

namespace redlab {

enum class EllBarMethod { ClosedForm, TruncatedSolve, MonteCarlo };

/// Mean number of distinct jobs in service in the saturated FCFS system with
/// identical exponential copies. Throughput is ell_bar * mu.
struct EllBarResult {
    double ell_bar = 0.0;
    double ell_bar_over_K = 0.0;
    EllBarMethod method = EllBarMethod::ClosedForm;
    /// Closed form: 0. Truncated solve: change from the previous truncation
    /// level. Monte Carlo: 95% half-width of ell_bar.
    double error_bound = 0.0;
    /// Truncated solve only.
    int l_max = 0;
    std::size_t states = 0;
};

/// d = 1 gives K, d = K-1 gives 2, d = K gives 1. Throws NotClosedForm otherwise.
EllBarResult ell_bar_closed_form(int K, int d);

struct ExactSolveOptions {
    /// First truncation level. Later levels are predicted from the geometric
    /// decay of successive changes until the bound is met.
    int l_max = 2;
    int l_max_cap = 60;
    double tolerance = 1e-6;
    std::size_t max_states = 400000;
    double residual = 1e-12;
};

/// Stationary solve of the lumped saturated chain with blocked-job counters
/// capped at l_max. Built for d = K-2 but valid for any d; large (K, d) hit
/// the state cap and throw TruncationNotConverged.
EllBarResult ell_bar_exact(int K, int d, const ExactSolveOptions& options = {});

/// Value at one fixed truncation level (no escalation).
EllBarResult ell_bar_truncated(int K, int d, int l_max, const ExactSolveOptions& options = {});

struct MonteCarloOptions {
    std::uint64_t departures = 1000000;
    std::size_t batches = 40;
    /// Verify the no-idling property after every rescan (slow).
    bool check_structure = false;
};

/// Simulates the saturated system with an explicit FIFO backlog.
EllBarResult ell_bar_mc(int K, int d, Rng& rng, const MonteCarloOptions& options = {});

/// Best available ell_bar: closed form, then the truncated solve for
/// d = K-2, then Monte Carlo with a fixed seed.
EllBarResult ell_bar_auto(int K, int d, std::uint64_t departures = 1000000, std::uint64_t seed = 1);

/// ell_bar / K.
double stability_threshold_fcfs(int K, int d);

std::string to_string(EllBarMethod method);

}  // namespace redlab
