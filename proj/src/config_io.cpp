#include "redlab/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "redlab/errors.hpp"

namespace redlab {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct Entry {
    std::string value;
    int line;
};

}  // namespace

ServiceDist parse_service(std::string_view text, double mu) {
    if (text == "exp") return ServiceDist::exponential(mu);
    if (text == "det") return ServiceDist{ServiceDist::Kind::Deterministic, mu, 1.0};
    if (text.substr(0, 4) == "dhe:") {
        const auto p = to_double(text.substr(4));
        if (!p) throw ValidationError("dhe needs a probability, e.g. dhe:0.25");
        return ServiceDist::degenerate_hyperexp(mu, *p);
    }
    throw ValidationError("service must be exp, det or dhe:<p>");
}

PolicyId parse_policy(std::string_view text) {
    if (text == "fcfs") return PolicyId::Fcfs;
    if (text == "ps") return PolicyId::Ps;
    if (text == "ros") return PolicyId::Ros;
    if (text == "priority_example") return PolicyId::PriorityExample;
    throw ValidationError("policy must be fcfs, ps, ros or priority_example");
}

CopyMode parse_copy_mode(std::string_view text) {
    if (text == "iid") return CopyMode::Iid;
    if (text == "identical") return CopyMode::Identical;
    throw ValidationError("copy_mode must be iid or identical");
}

BoundingMode parse_mode(std::string_view text) {
    if (text == "exact") return BoundingMode::Exact;
    if (text == "lb") return BoundingMode::PsLowerBound;
    if (text == "ub") return BoundingMode::PsUpperBound;
    throw ValidationError("mode must be exact, lb or ub");
}

FluidField parse_field(std::string_view text) {
    if (text == "iid") return FluidField::Iid;
    if (text == "lb") return FluidField::Lb;
    if (text == "ros") return FluidField::Ros;
    throw ValidationError("field must be iid, lb or ros");
}

RunConfig parse_config_text(std::string_view text) {
    static const char* const known[] = {"K",       "d",      "lambda",  "mu",   "speeds",
                                        "copy_mode", "policy", "service", "seed", "replications"};
    std::map<std::string, Entry> entries;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::istringstream tokens{std::string(line)};
        std::string token;
        while (tokens >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos || eq == 0) throw ParseError(line_no, "expected key=value, got '" + token + "'");
            std::string key = token.substr(0, eq);
            std::string value = token.substr(eq + 1);
            if (std::find(std::begin(known), std::end(known), key) == std::end(known))
                throw ParseError(line_no, "unknown key '" + key + "'");
            if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
            if (entries.count(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
            entries.emplace(key, Entry{value, line_no});
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }

    auto require = [&](const char* key) -> const Entry& {
        auto it = entries.find(key);
        if (it == entries.end()) throw ParseError(line_no, std::string("missing required key '") + key + "'");
        return it->second;
    };
    auto number = [&](const Entry& e, const char* key) {
        const auto v = to_double(e.value);
        if (!v) throw ParseError(e.line, std::string("'") + key + "' is not a number");
        return *v;
    };
    auto integer = [&](const Entry& e, const char* key) {
        const auto v = to_int<long long>(e.value);
        if (!v) throw ParseError(e.line, std::string("'") + key + "' is not an integer");
        return *v;
    };

    RunConfig out;
    SystemConfig& c = out.system;
    c.K = static_cast<int>(integer(require("K"), "K"));
    c.d = static_cast<int>(integer(require("d"), "d"));
    c.lambda = number(require("lambda"), "lambda");
    const double mu = entries.count("mu") ? number(entries.at("mu"), "mu") : 1.0;
    if (auto it = entries.find("speeds"); it != entries.end()) {
        for (auto part : split(it->second.value, ',')) {
            const auto v = to_double(part);
            if (!v) throw ParseError(it->second.line, "speeds must be a comma list of numbers");
            c.speeds.push_back(*v);
        }
    }
    auto with_line = [&](const char* key, auto&& fn) {
        auto it = entries.find(key);
        if (it == entries.end()) return;
        try {
            fn(it->second.value);
        } catch (const ValidationError& e) {
            throw ParseError(it->second.line, e.what());
        }
    };
    c.service = ServiceDist::exponential(mu);
    with_line("copy_mode", [&](const std::string& v) { c.copy_mode = parse_copy_mode(v); });
    with_line("policy", [&](const std::string& v) { c.policy = parse_policy(v); });
    with_line("service", [&](const std::string& v) { c.service = parse_service(v, mu); });
    if (auto it = entries.find("seed"); it != entries.end()) {
        const auto v = to_int<std::uint64_t>(it->second.value);
        if (!v) throw ParseError(it->second.line, "'seed' is not an unsigned integer");
        out.seed = *v;
    }
    if (auto it = entries.find("replications"); it != entries.end()) {
        out.replications = static_cast<int>(integer(it->second, "replications"));
        if (out.replications < 1) throw ValidationError("replications >= 1");
    }
    c.validate();
    return out;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

std::string format_exact(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace {

std::string emit_service(const ServiceDist& s) {
    switch (s.kind) {
        case ServiceDist::Kind::Exponential: return "exp";
        case ServiceDist::Kind::Deterministic: return "det";
        case ServiceDist::Kind::DegenerateHyperExp: return "dhe:" + format_exact(s.p);
    }
    return "?";
}

std::string emit_body(const RunConfig& config, bool with_seed) {
    const SystemConfig& c = config.system;
    std::string out;
    out += "K=" + std::to_string(c.K) + "\n";
    out += "d=" + std::to_string(c.d) + "\n";
    out += "lambda=" + format_exact(c.lambda) + "\n";
    out += "mu=" + format_exact(c.mu()) + "\n";
    if (!c.speeds.empty()) {
        out += "speeds=";
        for (std::size_t i = 0; i < c.speeds.size(); ++i) out += (i ? "," : "") + format_exact(c.speeds[i]);
        out += "\n";
    }
    out += "copy_mode=" + to_string(c.copy_mode) + "\n";
    out += "policy=" + to_string(c.policy) + "\n";
    out += "service=" + emit_service(c.service) + "\n";
    if (with_seed) out += "seed=" + std::to_string(config.seed) + "\n";
    out += "replications=" + std::to_string(config.replications) + "\n";
    return out;
}

}  // namespace

std::string to_string(const ServiceDist& dist) { return emit_service(dist); }

std::string emit_config(const RunConfig& config) { return emit_body(config, true); }

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(emit_body(config, false)); }

std::string csv_line(std::span<const std::string> cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

void write_trace_csv(std::ostream& out, const TypeTable& types, std::span<const EventRecord> trace,
                     const std::string& hash, std::uint64_t seed) {
    std::vector<std::string> header = {"time", "event", "job_id", "type_id", "server", "N_total"};
    for (TypeId c = 0; c < types.size(); ++c) header.push_back("N_" + types.label(c));
    header.push_back("config_hash");
    header.push_back("seed");
    out << csv_line(header);
    const std::string seed_text = std::to_string(seed);
    for (const EventRecord& e : trace) {
        std::vector<std::string> row = {format_number(e.time),
                                        to_string(e.kind),
                                        e.job_id >= 0 ? std::to_string(e.job_id) : "",
                                        e.type >= 0 ? types.label(e.type) : "",
                                        e.server >= 0 ? std::to_string(e.server + 1) : "",
                                        std::to_string(e.n_total)};
        for (int n : e.n_per_type) row.push_back(std::to_string(n));
        row.push_back(hash);
        row.push_back(seed_text);
        out << csv_line(row);
    }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
    out << "config_hash,seed,rho,time_avg_jobs,ci,busy_periods,slope,verdict\n";
    for (const MetricsRow& r : rows) {
        const std::vector<std::string> row = {r.config_hash,
                                              std::to_string(r.seed),
                                              format_number(r.rho),
                                              format_number(r.metrics.time_avg_jobs),
                                              format_number(r.metrics.ci_halfwidth),
                                              std::to_string(r.metrics.busy_periods_completed),
                                              format_number(r.metrics.divergence_slope),
                                              to_string(r.metrics.verdict)};
        out << csv_line(row);
    }
}

void write_fluid_csv(std::ostream& out, const TypeTable& types, const FluidTrajectory& trajectory,
                     const std::string& hash, std::uint64_t seed) {
    std::vector<std::string> header = {"t"};
    for (int s = 0; s < types.servers(); ++s) header.push_back("m_" + std::to_string(s + 1));
    header.push_back("total");
    header.push_back("config_hash");
    header.push_back("seed");
    out << csv_line(header);
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
        std::vector<std::string> row = {format_number(trajectory.t[i])};
        for (double m : server_masses(types, trajectory.states[i])) row.push_back(format_number(m));
        double total = 0.0;
        for (double v : trajectory.states[i].n) total += v;
        row.push_back(format_number(total));
        row.push_back(hash);
        row.push_back(std::to_string(seed));
        out << csv_line(row);
    }
}

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> out;
    for (auto part : split(text, ',')) {
        const auto v = to_double(part);
        if (!v) throw ValidationError("expected a comma list of numbers");
        out.push_back(*v);
    }
    return out;
}

std::vector<double> parse_rho_list(std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() == 1) return parse_number_list(text);
    if (parts.size() != 3) throw ValidationError("rho range must be start:step:stop");
    const auto a = to_double(parts[0]);
    const auto step = to_double(parts[1]);
    const auto b = to_double(parts[2]);
    if (!a || !step || !b || !(*step > 0.0) || *b < *a) throw ValidationError("rho range must be start:step:stop");
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor((*b - *a) / *step + 1e-9));
    for (long long i = 0; i <= n; ++i) out.push_back(*a + static_cast<double>(i) * *step);
    return out;
}

}  // namespace redlab
