#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace redlab {

/// Expected value of one metric. `tag` records where the value comes from:
/// "published" (a reported table or figure), "analytic" (a closed form), or
/// "derived" (an independent computation).
struct Anchor {
    std::string metric;
    double expected = 0.0;
    double tol = 0.0;
    std::string tag;
};

struct Experiment {
    std::string name;
    /// saturate, simulate, lt, boundary, priority_drift or fluid.
    std::string kind;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 1;
    std::vector<Anchor> anchors;
};

struct ExperimentManifest {
    std::string name;
    std::string output_dir;
    std::vector<Experiment> experiments;
    /// FNV-1a of the canonical JSON text.
    std::string hash;
};

/// Throws ManifestError on malformed JSON, unknown kinds or bad tags.
ExperimentManifest parse_manifest(std::string_view json_text);
ExperimentManifest load_manifest(const std::string& path);
/// The table of reference results shipped with the tool.
ExperimentManifest builtin_manifest();
const char* builtin_manifest_text();

struct ReportRow {
    std::string experiment;
    std::string metric;
    std::string tag;
    double expected = 0.0;
    double observed = 0.0;
    double tol = 0.0;
    /// PASS, FAIL, or ERROR when the experiment itself threw.
    std::string status;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string error;
};

struct ManifestReport {
    std::string manifest_hash;
    std::vector<ReportRow> rows;
    bool all_pass() const;
};

struct ManifestOptions {
    unsigned jobs = 1;
    /// Replaces every experiment seed when set.
    std::optional<std::uint64_t> seed_override;
};

/// REDLAB_SEED, if set to an unsigned integer.
std::optional<std::uint64_t> seed_override_from_env();

ManifestReport run_manifest(const ExperimentManifest& manifest, const ManifestOptions& options = {});

void write_report_csv(std::ostream& out, const ManifestReport& report);
/// One line per anchor plus a totals line.
std::string report_summary(const ManifestReport& report);

}  // namespace redlab
