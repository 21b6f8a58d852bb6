#include "redlab/manifest.hpp"

namespace redlab {
namespace {

// Reference results reproduced by `redlab repro`. Seeds are fixed so reruns
// produce identical reports.
constexpr const char* kReferenceManifest = R"json({
  "name": "reference",
  "experiments": [
    {"name": "saturated_3_2", "kind": "saturate", "seed": 11,
     "params": {"K": 3, "d": 2, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.666, "tol": 0.01, "tag": "published"}]},
    {"name": "saturated_4_2", "kind": "saturate", "seed": 12,
     "params": {"K": 4, "d": 2, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.719, "tol": 0.01, "tag": "published"}]},
    {"name": "saturated_5_3", "kind": "saturate", "seed": 13,
     "params": {"K": 5, "d": 3, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.547, "tol": 0.01, "tag": "published"}]},
    {"name": "saturated_6_3", "kind": "saturate", "seed": 14,
     "params": {"K": 6, "d": 3, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.573, "tol": 0.01, "tag": "published"}]},
    {"name": "saturated_8_5", "kind": "saturate", "seed": 15,
     "params": {"K": 8, "d": 5, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.384, "tol": 0.01, "tag": "published"}]},
    {"name": "saturated_9_2", "kind": "saturate", "seed": 16,
     "params": {"K": 9, "d": 2, "method": "mc", "departures": 1000000},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.781, "tol": 0.01, "tag": "published"}]},
    {"name": "closed_form_5_4", "kind": "saturate",
     "params": {"K": 5, "d": 4, "method": "closed_form"},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.4, "tol": 0, "tag": "published"}]},
    {"name": "closed_form_7_1", "kind": "saturate",
     "params": {"K": 7, "d": 1, "method": "closed_form"},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 1, "tol": 0, "tag": "published"}]},
    {"name": "closed_form_6_6", "kind": "saturate",
     "params": {"K": 6, "d": 6, "method": "closed_form"},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.166, "tol": 0.001, "tag": "published"}]},
    {"name": "exact_4_2", "kind": "saturate",
     "params": {"K": 4, "d": 2, "method": "exact"},
     "anchors": [{"metric": "ell_bar_over_K", "expected": 0.719, "tol": 0.001, "tag": "published"},
                 {"metric": "err", "expected": 0, "tol": 1e-6, "tag": "derived"}]},
    {"name": "mm1", "kind": "simulate", "seed": 21,
     "config": {"K": 1, "d": 1, "lambda": 0.5, "mu": 1, "policy": "fcfs", "copy_mode": "identical", "service": "exp"},
     "params": {"busy_periods": 200000},
     "anchors": [{"metric": "time_avg_jobs", "expected": 1.0, "tol": 0.05, "tag": "analytic"}]},
    {"name": "full_replication_fcfs", "kind": "simulate", "seed": 22,
     "config": {"K": 5, "d": 5, "lambda": 0.5, "mu": 1, "policy": "fcfs", "copy_mode": "identical", "service": "exp"},
     "params": {"busy_periods": 200000},
     "anchors": [{"metric": "time_avg_jobs", "expected": 1.0, "tol": 0.05, "tag": "analytic"}]},
    {"name": "heterogeneous_full_ps_below", "kind": "simulate", "seed": 23,
     "config": {"K": 3, "d": 3, "lambda": 7, "mu": 1, "speeds": [1, 4, 8], "policy": "ps", "copy_mode": "identical", "service": "exp"},
     "params": {"horizon": 20000, "replications": 3},
     "anchors": [{"metric": "stable", "expected": 1, "tol": 0, "tag": "published"}]},
    {"name": "heterogeneous_full_ps_above", "kind": "simulate", "seed": 24,
     "config": {"K": 3, "d": 3, "lambda": 9, "mu": 1, "speeds": [1, 4, 8], "policy": "ps", "copy_mode": "identical", "service": "exp"},
     "params": {"horizon": 20000, "replications": 3},
     "anchors": [{"metric": "diverging", "expected": 1, "tol": 0, "tag": "published"}]},
    {"name": "light_traffic_fcfs", "kind": "lt",
     "params": {"policy": "fcfs", "K": 5, "d": 2, "lambda": 0.2, "mu": 1},
     "anchors": [{"metric": "lt_mean_jobs", "expected": 0.206, "tol": 1e-9, "tag": "published"},
                 {"metric": "optimal_d", "expected": 2, "tol": 0, "tag": "published"}]},
    {"name": "light_traffic_ps", "kind": "lt",
     "params": {"policy": "ps", "K": 5, "d": 2, "lambda": 0.2, "mu": 1},
     "anchors": [{"metric": "lt_mean_jobs", "expected": 0.204, "tol": 1e-9, "tag": "published"}]},
    {"name": "light_traffic_oracle_ps", "kind": "lt", "seed": 31,
     "params": {"policy": "ps", "K": 5, "d": 2, "mu": 1, "oracle_samples": 1000000},
     "anchors": [{"metric": "oracle_coefficient", "expected": 0.1, "tol": 0.001, "tag": "published"}]},
    {"name": "light_traffic_oracle_fcfs", "kind": "lt", "seed": 32,
     "params": {"policy": "fcfs", "K": 5, "d": 2, "mu": 1, "oracle_samples": 1000000},
     "anchors": [{"metric": "oracle_coefficient", "expected": 0.15, "tol": 0.0015, "tag": "published"}]},
    {"name": "priority_counterexample", "kind": "priority_drift",
     "params": {"mu": 1},
     "anchors": [{"metric": "root_rho", "expected": 0.91, "tol": 0.005, "tag": "published"},
                 {"metric": "root_rho", "expected": 0.917237, "tol": 1e-5, "tag": "derived"}]},
    {"name": "fluid_iid_emptying", "kind": "fluid",
     "config": {"K": 3, "d": 2, "lambda": 1.5, "mu": 1, "copy_mode": "iid", "policy": "ps"},
     "params": {"field": "iid", "init": [0.5, 0.5, 0.5], "t_end": 2, "dt": 0.001},
     "anchors": [{"metric": "empty_time", "expected": 1.0, "tol": 0.002, "tag": "published"}]},
    {"name": "boundary_ps_identical_d4", "kind": "boundary", "seed": 41,
     "config": {"K": 5, "d": 4, "lambda": 1, "mu": 1, "policy": "ps", "copy_mode": "identical", "service": "exp"},
     "params": {"lo": 0.1, "hi": 1.2, "tol": 0.05},
     "anchors": [{"metric": "contains_theory", "expected": 1, "tol": 0, "tag": "published"}]},
    {"name": "boundary_ros_identical_d2", "kind": "boundary", "seed": 42,
     "config": {"K": 5, "d": 2, "lambda": 1, "mu": 1, "policy": "ros", "copy_mode": "identical", "service": "exp"},
     "params": {"lo": 0.1, "hi": 1.2, "tol": 0.05},
     "anchors": [{"metric": "contains_theory", "expected": 1, "tol": 0, "tag": "published"}]}
  ]
})json";

}  // namespace

ExperimentManifest builtin_manifest() { return parse_manifest(kReferenceManifest); }

const char* builtin_manifest_text() { return kReferenceManifest; }

}  // namespace redlab
