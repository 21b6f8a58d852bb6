#pragma once

#include <cstdint>
#include <optional>

#include "redlab/model.hpp"
#include "redlab/rng.hpp"

namespace redlab {

/// First-order light-traffic approximation for identical copies and its inputs.
struct LtResult {
    PolicyId policy = PolicyId::Fcfs;
    int K = 1;
    int d = 1;
    double lambda = 0.0;
    double mu = 1.0;
    double mean_jobs_lt = 0.0;
    int optimal_d = 1;
    /// Odd K: ceil(K/2) gives the same value as optimal_d.
    std::optional<int> optimal_d_tie;
};

/// lambda/mu + c (lambda/mu)^2 / binom(K, d) with c = 3/2 for FCFS and ROS
/// and c = 1 for PS. Other policies raise DomainError.
double lt_mean_jobs(PolicyId policy, int K, int d, double lambda, double mu);

LtResult light_traffic(PolicyId policy, int K, int d, double lambda, double mu);

/// Coefficient of lambda in the mean sojourn time, obtained by Monte Carlo
/// integration of the two-job conditional sojourn tables over the other job's
/// arrival epoch and both exponential requirements. ROS uses the FCFS table,
/// since with two jobs present ROS serves them in arrival order.
double lt_first_derivative_oracle(PolicyId policy, int K, int d, double mu, std::uint64_t samples, Rng& rng);

/// Sojourn time of a tagged job of size b arriving at 0, given one other job
/// of the same type and size b1 arriving at t.
double lt_conditional_sojourn(PolicyId policy, double t, double b, double b1);

/// floor(K/2), or 1 when K = 1: the d maximizing binom(K, d).
int optimal_redundancy(int K);
/// ceil(K/2) when it ties with optimal_redundancy(K).
std::optional<int> optimal_redundancy_tie(int K);

}  // namespace redlab
