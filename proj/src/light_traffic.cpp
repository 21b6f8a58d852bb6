#include "redlab/light_traffic.hpp"

#include "redlab/errors.hpp"

namespace redlab {
namespace {

void check_inputs(PolicyId policy, int K, int d, double mu) {
    if (policy == PolicyId::PriorityExample) throw DomainError("light traffic covers fcfs, ps and ros");
    if (K < 1 || d < 1 || d > K) throw DimensionError("light traffic needs 1 <= d <= K");
    if (!(mu > 0.0)) throw DomainError("mu > 0");
}

}  // namespace

double lt_mean_jobs(PolicyId policy, int K, int d, double lambda, double mu) {
    check_inputs(policy, K, d, mu);
    if (!(lambda > 0.0)) throw DomainError("lambda > 0");
    const double r = lambda / mu;
    const double c = policy == PolicyId::Ps ? 1.0 : 1.5;
    return r + c * r * r / static_cast<double>(binomial(K, d));
}

LtResult light_traffic(PolicyId policy, int K, int d, double lambda, double mu) {
    LtResult out;
    out.policy = policy;
    out.K = K;
    out.d = d;
    out.lambda = lambda;
    out.mu = mu;
    out.mean_jobs_lt = lt_mean_jobs(policy, K, d, lambda, mu);
    out.optimal_d = optimal_redundancy(K);
    out.optimal_d_tie = optimal_redundancy_tie(K);
    return out;
}

double lt_conditional_sojourn(PolicyId policy, double t, double b, double b1) {
    if (policy == PolicyId::Ps) {
        if (t <= -b1 || t >= b) return b;
        if (b <= b1) {
            if (t <= -b1 + b) return b + b1 + t;
            if (t <= 0.0) return 2.0 * b;
            return 2.0 * b - t;
        }
        if (t <= 0.0) return b + b1 + t;
        if (t <= b - b1) return b + b1;
        return 2.0 * b - t;
    }
    // FCFS and ROS: only an earlier job still in service delays the tagged one.
    if (t >= -b1 && t <= 0.0) return t + b1 + b;
    return b;
}

double lt_first_derivative_oracle(PolicyId policy, int K, int d, double mu, std::uint64_t samples, Rng& rng) {
    check_inputs(policy, K, d, mu);
    if (samples == 0) throw DomainError("samples > 0");
    // The integrand vanishes outside [-b1, 0] (FCFS) or [-b1, b] (PS), so t is
    // drawn uniformly on that window and weighted by its length.
    double sum = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const double b = rng.exponential(mu);
        const double b1 = rng.exponential(mu);
        const double lo = -b1;
        const double hi = policy == PolicyId::Ps ? b : 0.0;
        const double t = lo + (hi - lo) * rng.uniform();
        sum += (hi - lo) * (lt_conditional_sojourn(policy, t, b, b1) - b);
    }
    return sum / static_cast<double>(samples) / static_cast<double>(binomial(K, d));
}

int optimal_redundancy(int K) {
    if (K < 1) throw DimensionError("K >= 1");
    return K == 1 ? 1 : K / 2;
}

std::optional<int> optimal_redundancy_tie(int K) {
    if (K < 1) throw DimensionError("K >= 1");
    if (K > 1 && K % 2 == 1) return K / 2 + 1;
    return std::nullopt;
}

}  // namespace redlab
