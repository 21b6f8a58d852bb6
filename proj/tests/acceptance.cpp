// Acceptance checks, one per numbered criterion. Usage: acceptance [N ...]
// With no arguments every criterion runs. Each prints a single
// "criterion N: PASS|FAIL" line preceded by its measurements.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "redlab/config_io.hpp"
#include "redlab/errors.hpp"
#include "redlab/fluid.hpp"
#include "redlab/light_traffic.hpp"
#include "redlab/manifest.hpp"
#include "redlab/policies.hpp"
#include "redlab/saturated.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"
#include "redlab/stats.hpp"

using namespace redlab;

namespace {

// Tolerances and run sizes. Changing any of these changes what "pass" means.
namespace pinned {
constexpr double kTableTol = 0.01;                  // criterion 1
constexpr std::uint64_t kDepartures = 1000000;      // criteria 1-3
constexpr double kTruncationBound = 1e-6;           // criterion 2
constexpr double kBracketWidth = 0.05;              // criterion 4
constexpr double kBracketLo = 0.1;
constexpr double kBracketHi = 1.2;
constexpr double kRootTarget = 0.91;                // criterion 6
constexpr double kRootTol = 0.005;
constexpr double kPriorityLambda = 2.9;
constexpr double kPriorityHorizon = 1e4;
constexpr int kPriorityBounded = 50;
constexpr std::uint64_t kOracleSamples = 1000000;   // criterion 7
constexpr double kOracleRelTol = 0.01;
constexpr double kLtSecondOrder = 0.1;              // |sim - lt| <= c lambda^2 + 3 ci
constexpr std::uint64_t kLtBusyPeriods = 2000000;
constexpr double kFluidIdentityTol = 1e-12;         // criterion 8
constexpr int kFluidStates = 1000;
constexpr double kFluidDt = 1e-3;
constexpr std::uint64_t kBoundingBusyPeriods = 200000;  // criterion 9
constexpr double kBoundingRho = 0.3;
constexpr double kHeteroHorizon = 20000;            // criterion 10
}  // namespace pinned

struct Check {
    bool ok = true;
    void expect(bool cond, const std::string& what) {
        std::printf("  [%s] %s\n", cond ? "ok" : "FAIL", what.c_str());
        std::fflush(stdout);
        ok = ok && cond;
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string str(double v) { return format_number(v); }

SystemConfig make(int K, int d, double rho, PolicyId policy, CopyMode mode = CopyMode::Identical) {
    SystemConfig c;
    c.K = K;
    c.d = d;
    c.policy = policy;
    c.copy_mode = mode;
    return with_load(c, rho);
}

EllBarResult mc(int K, int d, std::uint64_t seed, std::uint64_t departures = pinned::kDepartures) {
    Rng rng(RngSpec{seed, 0});
    MonteCarloOptions o;
    o.departures = departures;
    return ell_bar_mc(K, d, rng, o);
}

BoundaryEstimate boundary(const SystemConfig& c, std::uint64_t seed) {
    BoundaryOptions o;
    o.seed = seed;
    return estimate_boundary(c, pinned::kBracketLo, pinned::kBracketHi, pinned::kBracketWidth, o);
}

std::string bracket_text(const BoundaryEstimate& e) {
    return "[" + str(e.bracket.first) + ", " + str(e.bracket.second) + "]";
}

// 1. Saturated-system table and closed forms.
bool criterion1() {
    Check c;
    const struct {
        int K, d;
        double expected;
    } rows[] = {{3, 2, 0.666}, {4, 2, 0.719}, {5, 3, 0.547}, {8, 5, 0.384}, {9, 2, 0.781}};
    std::uint64_t seed = 101;
    for (const auto& r : rows) {
        const EllBarResult e = mc(r.K, r.d, seed++);
        c.expect(std::abs(e.ell_bar_over_K - r.expected) <= pinned::kTableTol,
                 "mc (" + std::to_string(r.K) + "," + std::to_string(r.d) + ") = " + str(e.ell_bar_over_K) +
                     " vs " + str(r.expected));
    }
    bool closed = true;
    for (int K = 2; K <= 12; ++K) {
        closed = closed && ell_bar_closed_form(K, 1).ell_bar == K;
        closed = closed && ell_bar_closed_form(K, K - 1).ell_bar == 2.0;
        closed = closed && ell_bar_closed_form(K, K).ell_bar == 1.0;
    }
    closed = closed && ell_bar_closed_form(5, 4).ell_bar_over_K == 0.4 && ell_bar_closed_form(7, 1).ell_bar_over_K == 1.0;
    c.expect(closed, "closed forms for d in {1, K-1, K}, K = 2..12");
    return c.ok;
}

// 2. Exact truncated solve against Monte Carlo for d = K-2.
bool criterion2() {
    Check c;
    for (int K : {4, 5, 6}) {
        const EllBarResult exact = ell_bar_exact(K, K - 2);
        const EllBarResult sim = mc(K, K - 2, 200 + static_cast<std::uint64_t>(K));
        const double diff = std::abs(exact.ell_bar - sim.ell_bar);
        c.expect(diff <= sim.error_bound, "K=" + std::to_string(K) + " exact " + str(exact.ell_bar_over_K) + " mc " +
                                              str(sim.ell_bar_over_K) + " |diff| " + str(diff) + " <= ci " +
                                              str(sim.error_bound));
        c.expect(exact.error_bound < pinned::kTruncationBound,
                 "K=" + std::to_string(K) + " truncation bound " + str(exact.error_bound) + " at l_max " +
                     std::to_string(exact.l_max));
    }
    return c.ok;
}

// 3. ell_bar/K nondecreasing in K for d = 2.
bool criterion3() {
    Check c;
    double prev = 0.0;
    double prev_ci = 0.0;
    for (int K = 2; K <= 9; ++K) {
        const EllBarResult e = K == 2 ? ell_bar_closed_form(2, 2) : mc(K, 2, 300 + static_cast<std::uint64_t>(K));
        const double ci = e.error_bound / K;
        if (K > 2)
            c.expect(e.ell_bar_over_K >= prev - (ci + prev_ci),
                     "K=" + std::to_string(K) + " " + str(e.ell_bar_over_K) + " >= " + str(prev) + " - " +
                         str(ci + prev_ci));
        prev = e.ell_bar_over_K;
        prev_ci = ci;
    }
    return c.ok;
}

// 4. Empirical stability brackets contain the known thresholds.
bool criterion4() {
    Check c;
    const struct {
        const char* name;
        SystemConfig config;
        double threshold;
    } cases[] = {
        {"iid ps K=5 d=2", make(5, 2, 1, PolicyId::Ps, CopyMode::Iid), 1.0},
        {"iid ps K=5 d=4", make(5, 4, 1, PolicyId::Ps, CopyMode::Iid), 1.0},
        {"iid ros K=5 d=2", make(5, 2, 1, PolicyId::Ros, CopyMode::Iid), 1.0},
        {"iid ros K=5 d=4", make(5, 4, 1, PolicyId::Ros, CopyMode::Iid), 1.0},
        {"identical ps K=5 d=2", make(5, 2, 1, PolicyId::Ps), 0.5},
        {"identical ps K=5 d=4", make(5, 4, 1, PolicyId::Ps), 0.25},
        {"identical ros K=5 d=2", make(5, 2, 1, PolicyId::Ros), 1.0},
        {"identical fcfs K=3 d=2", make(3, 2, 1, PolicyId::Fcfs), 0.666},
        {"identical fcfs K=5 d=4", make(5, 4, 1, PolicyId::Fcfs), 0.4},
    };
    std::uint64_t seed = 401;
    for (const auto& k : cases) {
        try {
            const BoundaryEstimate e = boundary(k.config, seed++);
            const double width = e.bracket.second - e.bracket.first;
            const bool ok = width <= pinned::kBracketWidth + 1e-12 && e.bracket.first <= k.threshold &&
                            k.threshold <= e.bracket.second;
            c.expect(ok, std::string(k.name) + " bracket " + bracket_text(e) + " contains " + str(k.threshold) +
                             " (" + to_string(e.status) + ")");
        } catch (const Error& err) {
            c.expect(false, std::string(k.name) + ": " + err.what());
        }
    }
    return c.ok;
}

// 5. FCFS boundary exceeds PS boundary for identical copies.
bool criterion5() {
    Check c;
    std::uint64_t seed = 501;
    for (int d : {2, 4}) {
        const BoundaryEstimate fcfs = boundary(make(5, d, 1, PolicyId::Fcfs), seed++);
        const BoundaryEstimate ps = boundary(make(5, d, 1, PolicyId::Ps), seed++);
        c.expect(fcfs.rho_star_empirical > ps.rho_star_empirical,
                 "K=5 d=" + std::to_string(d) + " fcfs " + bracket_text(fcfs) + " > ps " + bracket_text(ps));
    }
    return c.ok;
}

// 6. Priority counterexample: drift root and the simulated growth pattern.
bool criterion6() {
    Check c;
    double lo = 0.3;
    double hi = 4.4;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (priority_drift(mid, 1.0) < 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi) / 3.0;
    c.expect(std::abs(root - pinned::kRootTarget) <= pinned::kRootTol,
             "drift sign change at rho = " + fmt("%.6f", root) + " vs " + str(pinned::kRootTarget) + " +- " +
                 str(pinned::kRootTol));

    SystemConfig cfg = make(3, 2, 1, PolicyId::PriorityExample, CopyMode::Iid);
    cfg.lambda = pinned::kPriorityLambda;
    SimOptions o;
    o.stop = StopRule::until(pinned::kPriorityHorizon);
    o.record_trace = true;
    const RunResult r = simulate(cfg, RngSpec{601, 0}, o);
    // Types in lexicographic order: 0 = {1,2}, 1 = {1,3}, 2 = {2,3}.
    int max12 = 0;
    int max13 = 0;
    std::vector<std::pair<double, double>> n23;
    for (const EventRecord& e : r.trace) {
        max12 = std::max(max12, e.n_per_type[0]);
        max13 = std::max(max13, e.n_per_type[1]);
        if (e.time >= pinned::kPriorityHorizon / 2) n23.emplace_back(e.time, e.n_per_type[2]);
    }
    const double slope = divergence_slope(n23);
    c.expect(slope > 0.0, "N_{2,3} slope over the second half " + str(slope) + " > 0");
    c.expect(max12 < pinned::kPriorityBounded && max13 < pinned::kPriorityBounded,
             "max N_{1,2} = " + std::to_string(max12) + ", max N_{1,3} = " + std::to_string(max13) + " < " +
                 std::to_string(pinned::kPriorityBounded));
    return c.ok;
}

// 7. Light traffic: oracle coefficients, simulation cross-check, optimal d.
bool criterion7() {
    Check c;
    const double binom = static_cast<double>(binomial(5, 2));
    const struct {
        PolicyId policy;
        double coefficient;
    } oracles[] = {{PolicyId::Fcfs, 1.5}, {PolicyId::Ps, 1.0}};
    std::uint64_t seed = 701;
    for (const auto& k : oracles) {
        Rng rng(RngSpec{seed++, 0});
        const double got = lt_first_derivative_oracle(k.policy, 5, 2, 1.0, pinned::kOracleSamples, rng);
        const double want = k.coefficient / binom;
        c.expect(std::abs(got - want) <= pinned::kOracleRelTol * want,
                 to_string(k.policy) + " oracle " + fmt("%.5f", got) + " vs " + fmt("%.5f", want) + " within 1%");
    }
    for (double lambda : {0.02, 0.04}) {
        SimOptions o;
        o.stop = StopRule::cycles(pinned::kLtBusyPeriods, 1e12);
        SystemConfig cfg = make(5, 2, 1, PolicyId::Ps);
        cfg.lambda = lambda;
        const RunResult r = simulate(cfg, RngSpec{seed++, 0}, o);
        const double lt = lt_mean_jobs(PolicyId::Ps, 5, 2, lambda, 1.0);
        const double gap = std::abs(r.metrics.time_avg_jobs - lt);
        c.expect(gap <= pinned::kLtSecondOrder * lambda * lambda + 3 * r.metrics.ci_halfwidth,
                 "ps lambda=" + str(lambda) + " sim " + fmt("%.6f", r.metrics.time_avg_jobs) + " +- " +
                     fmt("%.6f", r.metrics.ci_halfwidth) + " lt " + fmt("%.6f", lt) + " |sim-lt|/lambda^2 " +
                     fmt("%.4f", gap / (lambda * lambda)));
    }
    c.expect(optimal_redundancy(5) == 2, "optimal_redundancy(5) = " + std::to_string(optimal_redundancy(5)));
    return c.ok;
}

// 8. Fluid drift identities and the emptying time.
bool criterion8() {
    Check c;
    Rng rng(RngSpec{801, 0});
    int ros_mismatch = 0;
    int lemma_checked = 0;
    double lemma_err = 0.0;
    double identity_err = 0.0;
    int states = 0;
    while (states < pinned::kFluidStates) {
        const int K = 3 + static_cast<int>(rng.below(4));
        const int d = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K - 2)));
        SystemConfig cfg = make(K, d, 0.2 + rng.uniform(), PolicyId::Ps);
        const TypeTable types(K, d);
        FluidState s;
        for (int t = 0; t < types.size(); ++t) s.n.push_back(rng.uniform() < 0.2 ? 0.0 : 5 * rng.uniform());
        const auto m = server_masses(types, s);
        if (std::any_of(m.begin(), m.end(), [](double x) { return x <= 0.0; })) continue;
        ++states;
        for (ServerId k = 0; k < K; ++k) {
            ros_mismatch += drift_ros_server(cfg, s, k) != drift_iid_server(cfg, s, k);
            const double direct = lb_service_rate_direct(cfg, s, k);
            identity_err = std::max(identity_err, std::abs(direct - lb_service_rate_split(cfg, s, k)) /
                                                      std::max(1.0, direct));
        }
        const auto lo = std::min_element(m.begin(), m.end());
        if (std::count(m.begin(), m.end(), *lo) == 1) {
            const auto k = static_cast<ServerId>(lo - m.begin());
            const double want = cfg.lambda * d / K - cfg.mu();
            lemma_err = std::max(lemma_err, std::abs(drift_lb_server(cfg, s, k) - want));
            ++lemma_checked;
        }
    }
    c.expect(ros_mismatch == 0, "ros drift == iid drift on " + std::to_string(states) + " states (" +
                                    std::to_string(ros_mismatch) + " mismatches)");
    c.expect(lemma_err <= pinned::kFluidIdentityTol,
             "lb drift at unique minimum server = lambda d/K - mu, max error " + str(lemma_err) + " over " +
                 std::to_string(lemma_checked) + " states");
    c.expect(identity_err <= pinned::kFluidIdentityTol,
             "split rate == direct rate, max relative error " + str(identity_err));

    // m_max(0) = 1, mu = 1, lambda/K = 0.5, d = 2: T = 1 / (2 (1 - 0.5)) = 1.
    SystemConfig cfg = make(3, 2, 0.5, PolicyId::Ps, CopyMode::Iid);
    const FluidTrajectory traj = integrate_fluid(cfg, FluidState{{0.5, 0.5, 0.5}}, FluidField::Iid, 2.0, pinned::kFluidDt);
    const auto t = first_empty_time(traj);
    c.expect(t && std::abs(*t - 1.0) <= 2 * pinned::kFluidDt,
             "iid fluid empties at " + (t ? str(*t) : std::string("never")) + " vs 1 +- 2dt");
    return c.ok;
}

// 9. Lower bound <= exact <= upper bound, and the upper-bound marginal.
bool criterion9() {
    Check c;
    const SystemConfig cfg = make(3, 2, pinned::kBoundingRho, PolicyId::Ps);
    std::map<BoundingMode, RunMetrics> m;
    std::uint64_t seed = 901;
    for (BoundingMode mode : {BoundingMode::PsLowerBound, BoundingMode::Exact, BoundingMode::PsUpperBound}) {
        SimOptions o;
        o.stop = StopRule::cycles(pinned::kBoundingBusyPeriods, 1e12);
        o.mode = mode;
        m[mode] = simulate(cfg, RngSpec{seed++, 0}, o).metrics;
        std::printf("  %-6s time_avg_jobs %.5f +- %.5f\n", to_string(mode).c_str(), m[mode].time_avg_jobs,
                    m[mode].ci_halfwidth);
    }
    const RunMetrics& lb = m[BoundingMode::PsLowerBound];
    const RunMetrics& ex = m[BoundingMode::Exact];
    const RunMetrics& ub = m[BoundingMode::PsUpperBound];
    c.expect(lb.time_avg_jobs + lb.ci_halfwidth < ex.time_avg_jobs - ex.ci_halfwidth, "lb < exact with CI separation");
    c.expect(ex.time_avg_jobs + ex.ci_halfwidth < ub.time_avg_jobs - ub.ci_halfwidth, "exact < ub with CI separation");
    const double a = cfg.lambda * cfg.d / cfg.K;
    const double want = a / (cfg.mu() - a);
    c.expect(std::abs(ub.mean_copies_per_server - want) <= 3 * ub.copies_ci_halfwidth,
             "ub copies per server " + fmt("%.5f", ub.mean_copies_per_server) + " +- " +
                 fmt("%.5f", ub.copies_ci_halfwidth) + " vs M/M/1 " + fmt("%.5f", want));
    return c.ok;
}

// 10. Heterogeneous speeds with full replication.
bool criterion10() {
    Check c;
    std::uint64_t seed = 1001;
    for (PolicyId policy : {PolicyId::Fcfs, PolicyId::Ps}) {
        for (double lambda : {7.0, 9.0}) {
            SystemConfig cfg;
            cfg.K = 3;
            cfg.d = 3;
            cfg.speeds = {1, 4, 8};
            cfg.policy = policy;
            cfg.lambda = lambda;
            SimOptions o;
            o.stop = StopRule::until(pinned::kHeteroHorizon);
            const ReplicatedRun r = simulate_replications(cfg, seed++, 3, o);
            const Verdict want = lambda < 8.0 ? Verdict::StableLike : Verdict::Diverging;
            c.expect(r.aggregate.verdict == want, to_string(policy) + " lambda=" + str(lambda) + " verdict " +
                                                      to_string(r.aggregate.verdict) + ", slope " +
                                                      str(r.aggregate.divergence_slope));
        }
    }
    return c.ok;
}

// 11. Equal seeds give byte-identical CSVs.
std::string csv_bundle(unsigned jobs) {
    std::ostringstream out;
    const RunConfig rc = parse_config_text("K=4 d=2 lambda=1.6 policy=ps copy_mode=identical seed=1101");
    SimOptions o;
    o.stop = StopRule::cycles(3000, 1e9);
    o.record_trace = true;
    const ReplicatedRun run = simulate_replications(rc.system, rc.seed, 3, o, jobs);
    const std::string hash = config_hash(rc);
    write_trace_csv(out, build_type_table(4, 2), run.replications.front().trace, hash, rc.seed);
    const MetricsRow row{hash, rc.seed, effective_load(rc.system), run.aggregate};
    write_metrics_csv(out, std::span<const MetricsRow>(&row, 1));

    SweepOptions so;
    so.seed = 1102;
    so.busy_periods = 2000;
    so.jobs = jobs;
    std::vector<MetricsRow> rows;
    for (const SweepRow& s : sweep(rc.system, {0.3, 0.45}, so)) {
        MetricsRow m{hash, so.seed, s.rho, {}};
        m.metrics.time_avg_jobs = s.time_avg_jobs;
        m.metrics.ci_halfwidth = s.ci_halfwidth;
        m.metrics.verdict = s.verdict;
        rows.push_back(m);
    }
    write_metrics_csv(out, rows);

    const RunConfig fc = parse_config_text("K=3 d=2 lambda=2.1 policy=ps");
    write_fluid_csv(out, build_type_table(3, 2),
                    integrate_fluid(fc.system, FluidState{{1, 2, 3}}, FluidField::Lb, 2.0, 1e-2), config_hash(fc),
                    fc.seed);

    const ExperimentManifest manifest = parse_manifest(R"({"experiments": [
      {"name": "sat", "kind": "saturate", "seed": 1103, "params": {"K": 5, "d": 3, "method": "mc", "departures": 50000},
       "anchors": [{"metric": "ell_bar_over_K", "expected": 0.547, "tol": 0.02, "tag": "published"}]},
      {"name": "mm1", "kind": "simulate", "seed": 1104, "config": {"K": 1, "d": 1, "lambda": 0.5},
       "params": {"busy_periods": 5000, "replications": 2},
       "anchors": [{"metric": "time_avg_jobs", "expected": 1, "tol": 0.2, "tag": "analytic"}]}]})");
    ManifestOptions mo;
    mo.jobs = jobs;
    write_report_csv(out, run_manifest(manifest, mo));
    return out.str();
}

bool criterion11() {
    Check c;
    const std::string a = csv_bundle(1);
    const std::string b = csv_bundle(1);
    const std::string p = csv_bundle(3);
    c.expect(a == b, "rerun with equal seeds is byte-identical (" + std::to_string(a.size()) + " bytes)");
    c.expect(a == p, "three worker threads give the same bytes as one");
    return c.ok;
}

const std::vector<std::pair<const char*, std::function<bool()>>>& criteria() {
    static const std::vector<std::pair<const char*, std::function<bool()>>> list{
        {"saturated-system table and closed forms", criterion1},
        {"exact truncated solve agrees with Monte Carlo", criterion2},
        {"ell_bar/K nondecreasing in K for d=2", criterion3},
        {"stability brackets contain known thresholds", criterion4},
        {"FCFS boundary exceeds PS boundary", criterion5},
        {"priority counterexample", criterion6},
        {"light-traffic coefficients and optimal d", criterion7},
        {"fluid drift identities and emptying time", criterion8},
        {"bounding systems order", criterion9},
        {"heterogeneous full replication", criterion10},
        {"determinism of CSV outputs", criterion11},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > static_cast<int>(criteria().size())) {
            std::fprintf(stderr, "usage: acceptance [1-%zu ...]\n", criteria().size());
            return 2;
        }
        selected.push_back(n);
    }
    if (selected.empty())
        for (int n = 1; n <= static_cast<int>(criteria().size()); ++n) selected.push_back(n);

    bool all = true;
    for (int n : selected) {
        const auto& [name, fn] = criteria()[static_cast<std::size_t>(n - 1)];
        std::printf("criterion %d (%s)\n", n, name);
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            std::printf("  [FAIL] exception: %s\n", e.what());
        }
        std::printf("criterion %d: %s\n", n, ok ? "PASS" : "FAIL");
        std::fflush(stdout);
        all = all && ok;
    }
    return all ? 0 : 1;
}
