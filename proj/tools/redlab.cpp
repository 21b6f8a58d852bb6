#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "redlab/config_io.hpp"
#include "redlab/errors.hpp"
#include "redlab/fluid.hpp"
#include "redlab/light_traffic.hpp"
#include "redlab/manifest.hpp"
#include "redlab/saturated.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"

namespace {

using namespace redlab;

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

// Output goes to stdout unless --out names a file.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw ValidationError("cannot open output file '" + path + "'");
    }
    std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::uint64_t busy_periods = 10000;
    double horizon = 1e7;
    std::uint64_t max_events = 100000000;
    std::string mode = "exact";
    std::string trace;
    std::string out;
    unsigned jobs = 1;
};

struct SaturateArgs {
    int K = 0;
    int d = 0;
    std::string method = "auto";
    std::uint64_t departures = 1000000;
    std::uint64_t seed = 1;
    std::string out;
};

struct SweepArgs {
    std::string config;
    std::string rho;
    std::optional<std::uint64_t> seed;
    int reps = 3;
    std::uint64_t busy_periods = 10000;
    double horizon = 1e5;
    std::string out;
    unsigned jobs = 1;
};

struct BoundaryArgs {
    std::string config;
    double lo = 0.1;
    double hi = 1.2;
    double tol = 0.05;
    int reps = 3;
    int budget = 24;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned jobs = 1;
};

struct LtArgs {
    std::string policy = "fcfs";
    int K = 0;
    int d = 0;
    double lambda = 0.0;
    double mu = 1.0;
    std::string out;
};

struct FluidArgs {
    std::string field = "iid";
    std::string config;
    std::string init;
    double t_end = 10.0;
    double dt = 1e-3;
    std::string out;
};

struct ReproArgs {
    std::string manifest;
    std::string out;
    unsigned jobs = 1;
    bool dump = false;
};

int run_simulate(const SimulateArgs& a) {
    const RunConfig rc = parse_config(a.config);
    const std::uint64_t seed = a.seed.value_or(rc.seed);
    const int reps = a.reps.value_or(rc.replications);
    SimOptions options;
    options.stop = StopRule{a.busy_periods, a.horizon, a.max_events};
    options.mode = parse_mode(a.mode);
    options.record_trace = !a.trace.empty();
    validate_mode(rc.system, options.mode);

    const ReplicatedRun run = simulate_replications(rc.system, seed, reps, options, a.jobs);
    const std::string hash = config_hash(rc);

    if (!a.trace.empty()) {
        Output trace(a.trace);
        write_trace_csv(trace.stream(), build_type_table(rc.system.K, rc.system.d), run.replications.front().trace,
                        hash, seed);
    }
    Output out(a.out);
    const MetricsRow row{hash, seed, effective_load(rc.system), run.aggregate};
    write_metrics_csv(out.stream(), std::span<const MetricsRow>(&row, 1));
    return 0;
}

int run_saturate(const SaturateArgs& a) {
    EllBarResult r;
    if (a.method == "auto") {
        r = ell_bar_auto(a.K, a.d, a.departures, a.seed);
    } else if (a.method == "exact") {
        r = ell_bar_exact(a.K, a.d);
    } else if (a.method == "mc") {
        Rng rng(RngSpec{a.seed, 0});
        MonteCarloOptions options;
        options.departures = a.departures;
        r = ell_bar_mc(a.K, a.d, rng, options);
    } else {
        throw ValidationError("method must be auto, exact or mc");
    }
    std::ostringstream key;
    key << "saturate K=" << a.K << " d=" << a.d << " method=" << a.method << " departures=" << a.departures;
    Output out(a.out);
    out.stream() << "K,d,method,ell_bar,ell_bar_over_K,err,config_hash,seed\n";
    const std::vector<std::string> cells{std::to_string(a.K),        std::to_string(a.d),
                                         to_string(r.method),        format_number(r.ell_bar),
                                         format_number(r.ell_bar_over_K), format_number(r.error_bound),
                                         fnv1a_hex(key.str()),       std::to_string(a.seed)};
    out.stream() << csv_line(cells);
    return 0;
}

int run_sweep(const SweepArgs& a) {
    const RunConfig rc = parse_config(a.config);
    SweepOptions options;
    options.replications = a.reps;
    options.busy_periods = a.busy_periods;
    options.horizon = a.horizon;
    options.seed = a.seed.value_or(rc.seed);
    options.jobs = a.jobs;
    const std::vector<double> rhos = parse_rho_list(a.rho);
    const std::vector<SweepRow> rows = sweep(rc.system, rhos, options);

    const std::string hash = config_hash(rc);
    std::vector<MetricsRow> metrics;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        MetricsRow m;
        m.config_hash = hash;
        m.seed = options.seed + i;
        m.rho = rows[i].rho;
        m.metrics.time_avg_jobs = rows[i].time_avg_jobs;
        m.metrics.ci_halfwidth = rows[i].ci_halfwidth;
        m.metrics.busy_periods_completed = rows[i].busy_periods;
        m.metrics.divergence_slope = rows[i].slope;
        m.metrics.verdict = rows[i].verdict;
        metrics.push_back(m);
    }
    Output out(a.out);
    write_metrics_csv(out.stream(), metrics);
    return 0;
}

int run_boundary(const BoundaryArgs& a) {
    const RunConfig rc = parse_config(a.config);
    BoundaryOptions options;
    options.replications = a.reps;
    options.budget = a.budget;
    options.seed = a.seed.value_or(rc.seed);
    options.jobs = a.jobs;
    const BoundaryEstimate e = estimate_boundary(rc.system, a.lo, a.hi, a.tol, options);

    std::string trace;
    for (const auto& [rho, verdict] : e.verdict_trace) {
        if (!trace.empty()) trace += ';';
        trace += format_number(rho) + ":" + to_string(verdict);
    }
    Output out(a.out);
    out.stream() << "config_hash,seed,rho_lo,rho_hi,rho_star,theory,status,trace\n";
    const std::vector<std::string> cells{config_hash(rc),
                                         std::to_string(options.seed),
                                         format_number(e.bracket.first),
                                         format_number(e.bracket.second),
                                         format_number(e.rho_star_empirical),
                                         e.rho_star_theory ? format_number(*e.rho_star_theory) : "",
                                         to_string(e.status),
                                         trace};
    out.stream() << csv_line(cells);
    return 0;
}

int run_lt(const LtArgs& a) {
    const LtResult r = light_traffic(parse_policy(a.policy), a.K, a.d, a.lambda, a.mu);
    std::ostringstream key;
    key << "lt policy=" << a.policy << " K=" << a.K << " d=" << a.d << " lambda=" << format_exact(a.lambda)
        << " mu=" << format_exact(a.mu);
    Output out(a.out);
    out.stream() << "policy,K,d,lambda,mu,lt_mean_jobs,optimal_d,config_hash,seed\n";
    const std::vector<std::string> cells{to_string(r.policy),         std::to_string(r.K),
                                         std::to_string(r.d),         format_number(r.lambda),
                                         format_number(r.mu),         format_number(r.mean_jobs_lt),
                                         std::to_string(r.optimal_d), fnv1a_hex(key.str()),
                                         "0"};
    out.stream() << csv_line(cells);
    return 0;
}

int run_fluid(const FluidArgs& a) {
    const RunConfig rc = parse_config(a.config);
    const TypeTable types = build_type_table(rc.system.K, rc.system.d);
    FluidState init{parse_number_list(a.init)};
    if (static_cast<int>(init.n.size()) != types.size())
        throw ValidationError("init needs " + std::to_string(types.size()) + " masses, one per type");
    const FluidTrajectory traj = integrate_fluid(rc.system, init, parse_field(a.field), a.t_end, a.dt);
    Output out(a.out);
    write_fluid_csv(out.stream(), types, traj, config_hash(rc), rc.seed);
    return 0;
}

int run_repro(const ReproArgs& a) {
    if (a.dump) {
        Output out(a.out);
        out.stream() << builtin_manifest_text() << '\n';
        return 0;
    }
    const ExperimentManifest manifest = a.manifest.empty() ? builtin_manifest() : load_manifest(a.manifest);
    ManifestOptions options;
    options.jobs = a.jobs;
    options.seed_override = seed_override_from_env();
    const ManifestReport report = run_manifest(manifest, options);

    std::string path = a.out;
    if (path.empty() && !manifest.output_dir.empty()) path = manifest.output_dir + "/report.csv";
    if (!path.empty()) {
        Output out(path);
        write_report_csv(out.stream(), report);
    }
    std::cout << report_summary(report);
    return report.all_pass() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis of redundancy-d queueing systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "redlab 1.0.0");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate one configuration and emit metrics");
    simulate->add_option("--config", sim.config, "Configuration file")->required();
    simulate->add_option("--seed", sim.seed, "Master seed (overrides the config)");
    simulate->add_option("--reps", sim.reps, "Replications (overrides the config)")->check(CLI::PositiveNumber);
    simulate->add_option("--busy-periods", sim.busy_periods, "Stop after this many busy periods (0: horizon only)");
    simulate->add_option("--horizon", sim.horizon, "Simulated time limit")->check(CLI::PositiveNumber);
    simulate->add_option("--max-events", sim.max_events, "Event limit per replication");
    simulate->add_option("--mode", sim.mode, "exact, lb or ub");
    simulate->add_option("--trace", sim.trace, "Write the event trace of the first replication here");
    simulate->add_option("--out", sim.out, "Metrics CSV (default stdout)");
    simulate->add_option("--jobs", sim.jobs, "Worker threads")->check(CLI::PositiveNumber);

    SaturateArgs sat;
    auto* saturate = app.add_subcommand("saturate", "Mean number of busy servers in the saturated FCFS system");
    saturate->add_option("--K", sat.K, "Servers")->required();
    saturate->add_option("--d", sat.d, "Copies per job")->required();
    saturate->add_option("--method", sat.method, "auto, mc or exact");
    saturate->add_option("--departures", sat.departures, "Monte Carlo departures");
    saturate->add_option("--seed", sat.seed, "Monte Carlo seed");
    saturate->add_option("--out", sat.out, "CSV output (default stdout)");

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Simulate a range of loads");
    sweep_cmd->add_option("--config", sw.config, "Configuration file")->required();
    sweep_cmd->add_option("--rho", sw.rho, "Loads as a:step:b or a comma list")->required();
    sweep_cmd->add_option("--seed", sw.seed, "Base seed; load i uses seed+i");
    sweep_cmd->add_option("--reps", sw.reps, "Replications per load")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--busy-periods", sw.busy_periods, "Busy periods per replication");
    sweep_cmd->add_option("--horizon", sw.horizon, "Simulated time limit")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sw.out, "Metrics CSV (default stdout)");
    sweep_cmd->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::PositiveNumber);

    BoundaryArgs bd;
    auto* boundary = app.add_subcommand("boundary", "Bisect for the empirical stability boundary");
    boundary->add_option("--config", bd.config, "Configuration file")->required();
    boundary->add_option("--lo", bd.lo, "Lower load");
    boundary->add_option("--hi", bd.hi, "Upper load");
    boundary->add_option("--tol", bd.tol, "Target bracket width");
    boundary->add_option("--reps", bd.reps, "Replications per probe")->check(CLI::PositiveNumber);
    boundary->add_option("--budget", bd.budget, "Maximum number of probes")->check(CLI::PositiveNumber);
    boundary->add_option("--seed", bd.seed, "Seed (overrides the config)");
    boundary->add_option("--out", bd.out, "CSV output (default stdout)");
    boundary->add_option("--jobs", bd.jobs, "Worker threads")->check(CLI::PositiveNumber);

    LtArgs lt;
    auto* lt_cmd = app.add_subcommand("lt", "Light-traffic approximation of the mean number of jobs");
    lt_cmd->add_option("--policy", lt.policy, "fcfs, ps or ros");
    lt_cmd->add_option("--K", lt.K, "Servers")->required();
    lt_cmd->add_option("--d", lt.d, "Copies per job")->required();
    lt_cmd->add_option("--lambda", lt.lambda, "Arrival rate")->required();
    lt_cmd->add_option("--mu", lt.mu, "Service rate");
    lt_cmd->add_option("--out", lt.out, "CSV output (default stdout)");

    FluidArgs fl;
    auto* fluid = app.add_subcommand("fluid", "Integrate a fluid model");
    fluid->add_option("--field", fl.field, "iid, lb or ros");
    fluid->add_option("--config", fl.config, "Configuration file")->required();
    fluid->add_option("--init", fl.init, "Initial mass per type, comma separated")->required();
    fluid->add_option("--t-end", fl.t_end, "End time")->check(CLI::PositiveNumber);
    fluid->add_option("--dt", fl.dt, "Step size")->check(CLI::PositiveNumber);
    fluid->add_option("--out", fl.out, "CSV output (default stdout)");

    ReproArgs rp;
    auto* repro = app.add_subcommand("repro", "Run an experiment manifest and compare against its anchors");
    repro->add_option("--manifest", rp.manifest, "Manifest JSON (default: the built-in reference table)");
    repro->add_option("--out", rp.out, "Report CSV");
    repro->add_option("--jobs", rp.jobs, "Experiments run concurrently")->check(CLI::PositiveNumber);
    repro->add_flag("--dump-manifest", rp.dump, "Print the built-in manifest and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*saturate) return run_saturate(sat);
        if (*sweep_cmd) return run_sweep(sw);
        if (*boundary) return run_boundary(bd);
        if (*lt_cmd) return run_lt(lt);
        if (*fluid) return run_fluid(fl);
        if (*repro) return run_repro(rp);
    } catch (const std::exception& e) {
        std::cerr << "redlab: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
