#include "redlab/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "redlab/config_io.hpp"
#include "redlab/errors.hpp"
#include "redlab/fluid.hpp"
#include "redlab/light_traffic.hpp"
#include "redlab/parallel.hpp"
#include "redlab/policies.hpp"
#include "redlab/saturated.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"

namespace redlab {
namespace {

using nlohmann::json;
using Metrics = std::map<std::string, double>;

const char* const kKinds[] = {"saturate", "simulate", "lt", "boundary", "priority_drift", "fluid"};
const char* const kTags[] = {"published", "analytic", "derived"};

template <typename T>
T param(const json& params, const char* key, T fallback) {
    if (!params.contains(key)) return fallback;
    try {
        return params.at(key).get<T>();
    } catch (const json::exception&) {
        throw ManifestError(std::string("parameter '") + key + "' has the wrong type");
    }
}

template <typename T>
T required(const json& params, const char* key) {
    if (!params.contains(key)) throw ManifestError(std::string("missing parameter '") + key + "'");
    return param<T>(params, key, T{});
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_exact(v.get<double>());
    throw ManifestError("config values must be strings or numbers");
}

// Config objects use the config-file keys, plus "rho" as an alternative to lambda.
RunConfig config_from_json(const json& cfg, std::uint64_t seed) {
    if (!cfg.is_object()) throw ManifestError("config must be an object");
    std::string text;
    std::optional<double> rho;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "rho") {
            rho = value.get<double>();
            continue;
        }
        if (key == "seed") continue;
        text += key + "=";
        if (value.is_array()) {
            for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + scalar_text(value[i]);
        } else {
            text += scalar_text(value);
        }
        text += "\n";
    }
    if (rho) {
        if (cfg.contains("lambda")) throw ManifestError("config gives both rho and lambda");
        text += "lambda=1\n";
    }
    RunConfig out = parse_config_text(text);
    if (rho) out.system = with_load(out.system, *rho);
    out.seed = seed;
    return out;
}

double priority_root(double mu) {
    // priority_drift is negative at light load and positive near the M-model limit.
    double lo = 0.3 * mu;
    double hi = 4.4 * mu;
    if (!(priority_drift(lo, mu) < 0.0 && priority_drift(hi, mu) > 0.0))
        throw DomainError("priority drift does not change sign on the search interval");
    for (int i = 0; i < 200 && hi - lo > 1e-13 * mu; ++i) {
        const double mid = 0.5 * (lo + hi);
        (priority_drift(mid, mu) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) / (3.0 * mu);
}

Metrics run_saturate(const Experiment& e, std::uint64_t seed, std::string& hash) {
    const int K = required<int>(e.params, "K");
    const int d = required<int>(e.params, "d");
    const std::string method = param<std::string>(e.params, "method", "auto");
    const auto departures = param<std::uint64_t>(e.params, "departures", 1000000);
    hash = fnv1a_hex(e.params.dump());
    EllBarResult r;
    if (method == "closed_form") {
        r = ell_bar_closed_form(K, d);
    } else if (method == "exact") {
        r = ell_bar_exact(K, d);
    } else if (method == "mc") {
        Rng rng(RngSpec{seed, 0});
        MonteCarloOptions options;
        options.departures = departures;
        r = ell_bar_mc(K, d, rng, options);
    } else if (method == "auto") {
        r = ell_bar_auto(K, d, departures, seed);
    } else {
        throw ManifestError("saturate method must be auto, mc, exact or closed_form");
    }
    return {{"ell_bar", r.ell_bar}, {"ell_bar_over_K", r.ell_bar_over_K}, {"err", r.error_bound}};
}

Metrics run_simulate(const Experiment& e, std::uint64_t seed, std::string& hash) {
    const RunConfig rc = config_from_json(e.config, seed);
    hash = config_hash(rc);
    SimOptions options;
    const auto busy = param<std::uint64_t>(e.params, "busy_periods", 0);
    const double horizon = param<double>(e.params, "horizon", busy ? 1e7 : 1e4);
    options.stop = busy ? StopRule::cycles(busy, horizon) : StopRule::until(horizon);
    options.stop.max_events = param<std::uint64_t>(e.params, "max_events", 100000000);
    options.mode = parse_mode(param<std::string>(e.params, "mode", "exact"));
    const int reps = param<int>(e.params, "replications", rc.replications);
    const auto run = simulate_replications(rc.system, seed, reps, options);
    const RunMetrics& m = run.aggregate;
    return {{"time_avg_jobs", m.time_avg_jobs},
            {"ci", m.ci_halfwidth},
            {"busy_periods", static_cast<double>(m.busy_periods_completed)},
            {"slope", m.divergence_slope},
            {"mean_copies_per_server", m.mean_copies_per_server},
            {"stable", m.verdict == Verdict::StableLike ? 1.0 : 0.0},
            {"diverging", m.verdict == Verdict::Diverging ? 1.0 : 0.0}};
}

Metrics run_lt(const Experiment& e, std::uint64_t seed, std::string& hash) {
    const PolicyId policy = parse_policy(required<std::string>(e.params, "policy"));
    const int K = required<int>(e.params, "K");
    const int d = required<int>(e.params, "d");
    const double lambda = param<double>(e.params, "lambda", 0.1);
    const double mu = param<double>(e.params, "mu", 1.0);
    hash = fnv1a_hex(e.params.dump());
    const LtResult r = light_traffic(policy, K, d, lambda, mu);
    Metrics out = {{"lt_mean_jobs", r.mean_jobs_lt}, {"optimal_d", static_cast<double>(r.optimal_d)}};
    const auto samples = param<std::uint64_t>(e.params, "oracle_samples", 0);
    if (samples > 0) {
        Rng rng(RngSpec{seed, 0});
        out["oracle_coefficient"] = lt_first_derivative_oracle(policy, K, d, mu, samples, rng);
    }
    return out;
}

Metrics run_boundary(const Experiment& e, std::uint64_t seed, std::string& hash) {
    const RunConfig rc = config_from_json(e.config, seed);
    hash = config_hash(rc);
    BoundaryOptions options;
    options.seed = seed;
    options.replications = param<int>(e.params, "replications", 3);
    const auto est = estimate_boundary(rc.system, param<double>(e.params, "lo", 0.1),
                                       param<double>(e.params, "hi", 1.2), param<double>(e.params, "tol", 0.05),
                                       options);
    const double theory = est.rho_star_theory.value_or(std::numeric_limits<double>::quiet_NaN());
    const bool contains = est.rho_star_theory && est.bracket.first <= theory && theory <= est.bracket.second;
    return {{"rho_lo", est.bracket.first},
            {"rho_hi", est.bracket.second},
            {"rho_star", est.rho_star_empirical},
            {"theory", theory},
            {"contains_theory", contains ? 1.0 : 0.0},
            {"converged", est.status == BoundaryStatus::Converged ? 1.0 : 0.0}};
}

Metrics run_priority(const Experiment& e, std::uint64_t, std::string& hash) {
    const double mu = param<double>(e.params, "mu", 1.0);
    hash = fnv1a_hex(e.params.dump());
    Metrics out = {{"root_rho", priority_root(mu)}};
    if (e.params.contains("lambda")) out["drift"] = priority_drift(e.params.at("lambda").get<double>(), mu);
    return out;
}

Metrics run_fluid(const Experiment& e, std::uint64_t seed, std::string& hash) {
    const RunConfig rc = config_from_json(e.config, seed);
    hash = config_hash(rc);
    const FluidField field = parse_field(param<std::string>(e.params, "field", "iid"));
    FluidState init{required<std::vector<double>>(e.params, "init")};
    const auto traj = integrate_fluid(rc.system, init, field, required<double>(e.params, "t_end"),
                                      required<double>(e.params, "dt"));
    double total = 0.0;
    for (double v : traj.states.back().n) total += v;
    const auto empty = first_empty_time(traj);
    return {{"empty_time", empty.value_or(std::numeric_limits<double>::infinity())}, {"final_total", total}};
}

Metrics run_experiment(const Experiment& e, std::uint64_t seed, std::string& hash) {
    if (e.kind == "saturate") return run_saturate(e, seed, hash);
    if (e.kind == "simulate") return run_simulate(e, seed, hash);
    if (e.kind == "lt") return run_lt(e, seed, hash);
    if (e.kind == "boundary") return run_boundary(e, seed, hash);
    if (e.kind == "priority_drift") return run_priority(e, seed, hash);
    if (e.kind == "fluid") return run_fluid(e, seed, hash);
    throw ManifestError("unknown experiment kind '" + e.kind + "'");
}

}  // namespace

ExperimentManifest parse_manifest(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");
    ExperimentManifest m;
    m.hash = fnv1a_hex(doc.dump());
    try {
        m.name = doc.value("name", "");
        m.output_dir = doc.value("output_dir", "");
        const json experiments = doc.value("experiments", json::array());
        if (!experiments.is_array()) throw ManifestError("experiments must be an array");
        for (const json& item : experiments) {
            Experiment e;
            e.name = item.at("name").get<std::string>();
            e.kind = item.at("kind").get<std::string>();
            if (std::find(std::begin(kKinds), std::end(kKinds), e.kind) == std::end(kKinds))
                throw ManifestError("experiment '" + e.name + "': unknown kind '" + e.kind + "'");
            e.config = item.value("config", json::object());
            e.params = item.value("params", json::object());
            e.seed = item.value("seed", std::uint64_t{1});
            for (const json& a : item.value("anchors", json::array())) {
                Anchor anchor{a.at("metric").get<std::string>(), a.at("expected").get<double>(),
                              a.value("tol", 0.0), a.at("tag").get<std::string>()};
                if (std::find(std::begin(kTags), std::end(kTags), anchor.tag) == std::end(kTags))
                    throw ManifestError("experiment '" + e.name + "': tag must be published, analytic or derived");
                if (!(anchor.tol >= 0.0)) throw ManifestError("experiment '" + e.name + "': tol must be >= 0");
                e.anchors.push_back(std::move(anchor));
            }
            m.experiments.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

ExperimentManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open manifest '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_manifest(text.str());
}

bool ManifestReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.status == "PASS"; });
}

std::optional<std::uint64_t> seed_override_from_env() {
    const char* raw = std::getenv("REDLAB_SEED");
    if (!raw || !*raw) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (*end != '\0') throw ValidationError("REDLAB_SEED must be an unsigned integer");
    return static_cast<std::uint64_t>(v);
}

ManifestReport run_manifest(const ExperimentManifest& manifest, const ManifestOptions& options) {
    const std::size_t n = manifest.experiments.size();
    std::vector<std::vector<ReportRow>> rows(n);
    parallel_for(n, options.jobs, [&](std::size_t i) {
        const Experiment& e = manifest.experiments[i];
        const std::uint64_t seed = options.seed_override.value_or(e.seed);
        std::string hash;
        Metrics metrics;
        std::string error;
        try {
            metrics = run_experiment(e, seed, hash);
        } catch (const std::exception& ex) {
            error = ex.what();
        }
        for (const Anchor& a : e.anchors) {
            ReportRow r{e.name, a.metric, a.tag, a.expected, std::numeric_limits<double>::quiet_NaN(), a.tol,
                        "ERROR", hash, seed, error};
            if (error.empty()) {
                auto it = metrics.find(a.metric);
                if (it == metrics.end()) {
                    r.error = "experiment does not produce metric '" + a.metric + "'";
                } else {
                    r.observed = it->second;
                    r.status = std::abs(r.observed - a.expected) <= a.tol ? "PASS" : "FAIL";
                }
            }
            rows[i].push_back(std::move(r));
        }
    });
    ManifestReport report;
    report.manifest_hash = manifest.hash;
    for (auto& group : rows)
        for (auto& r : group) report.rows.push_back(std::move(r));
    return report;
}

void write_report_csv(std::ostream& out, const ManifestReport& report) {
    out << "manifest_hash,experiment,metric,tag,expected,observed,tol,status,config_hash,seed\n";
    for (const ReportRow& r : report.rows) {
        const std::vector<std::string> row = {report.manifest_hash, r.experiment,          r.metric,
                                              r.tag,                format_number(r.expected), format_number(r.observed),
                                              format_number(r.tol), r.status,              r.config_hash,
                                              std::to_string(r.seed)};
        out << csv_line(row);
    }
}

std::string report_summary(const ManifestReport& report) {
    std::string out;
    std::size_t pass = 0;
    for (const ReportRow& r : report.rows) {
        char line[512];
        std::snprintf(line, sizeof line, "%-5s %s/%s expected %s observed %s tol %s", r.status.c_str(),
                      r.experiment.c_str(), r.metric.c_str(), format_number(r.expected).c_str(),
                      format_number(r.observed).c_str(), format_number(r.tol).c_str());
        out += line;
        if (!r.error.empty()) out += " (" + r.error + ")";
        out += '\n';
        if (r.status == "PASS") ++pass;
    }
    out += std::to_string(pass) + "/" + std::to_string(report.rows.size()) + " anchors pass\n";
    return out;
}

}  // namespace redlab
