#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redlab/fluid.hpp"
#include "redlab/model.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"

namespace redlab {

/// Contents of a configuration file: the system plus run-level settings.
struct RunConfig {
    SystemConfig system;
    std::uint64_t seed = 1;
    int replications = 1;
    bool operator==(const RunConfig&) const = default;
};

/// key=value pairs separated by newlines or blanks; '#' starts a comment.
/// Required keys: K, d, lambda. Throws ParseError (with line) or ValidationError.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::string& path);

/// Canonical text, one key per line in a fixed order; parse(emit(c)) == c.
std::string emit_config(const RunConfig& config);

/// FNV-1a 64 of the canonical text without the seed, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::string fnv1a_hex(std::string_view text);

/// "exp", "det" or "dhe:<p>".
ServiceDist parse_service(std::string_view text, double mu);
PolicyId parse_policy(std::string_view text);
CopyMode parse_copy_mode(std::string_view text);
BoundingMode parse_mode(std::string_view text);
FluidField parse_field(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_exact(double value);
/// Nine significant digits, as written to every CSV.
std::string format_number(double value);

/// Joins fields with commas; the caller supplies already formatted cells.
std::string csv_line(std::span<const std::string> cells);

void write_trace_csv(std::ostream& out, const TypeTable& types, std::span<const EventRecord> trace,
                     const std::string& hash, std::uint64_t seed);

struct MetricsRow {
    std::string config_hash;
    std::uint64_t seed = 0;
    double rho = 0.0;
    RunMetrics metrics;
};
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

void write_fluid_csv(std::ostream& out, const TypeTable& types, const FluidTrajectory& trajectory,
                     const std::string& hash, std::uint64_t seed);

/// Parses "a:step:b" (inclusive range) or a comma list.
std::vector<double> parse_rho_list(std::string_view text);
/// Comma-separated nonnegative masses.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace redlab
