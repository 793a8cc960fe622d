#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flipline/oracle.hpp"
#include "flipline/params.hpp"
#include "flipline/semiclassics.hpp"

namespace flipline::cli {

inline constexpr const char* kVersion = "1.0.0";

struct SweepSpec {
    std::string parameter;  // a ModelParams field: mu, alpha_d, lambda, kappa
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
    bool log_spacing = false;
    std::vector<double> values() const;
};

// Sampling of g for the orbits command and fig5; empty bounds default to the
// deep-well orbit range.
struct GridSpec {
    int count = 200;
    std::optional<double> g_lo, g_hi;
};

struct OracleConfig {
    int N = 0;
    int max_N = 2000;
    DetuningConvention convention = DetuningConvention::Bare;
};

struct RunConfig {
    std::string command;
    ModelParams params;
    std::optional<SweepSpec> sweep;
    GridSpec grid;
    std::string output_dir = "out";
    Tolerances tol;
    std::string figure_id;
    std::vector<double> figure_mu;  // fig6 curves; defaults to -0.5, 0.1, 0.5
    OracleConfig oracle;
    int m_max = 12;
    RatePoint rate_point = RatePoint::Midpoint;
};

struct Overrides {
    std::optional<double> mu, alpha_d, lambda, kappa;
    std::optional<std::string> out;
};

extern const std::vector<std::string> kCommands;

// Parses and validates a JSON run configuration. command_hint (from the
// command line) fills or must match the "command" key. Figure commands fall
// back to the figure's own parameter set when "params" is absent.
RunConfig parse_config(const std::string& text, const std::string& command_hint = "",
                       const Overrides& ov = {});

// Canonical JSON of a validated config (sorted keys, defaults filled).
std::string canonical_json(const RunConfig& c);

// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace flipline::cli
