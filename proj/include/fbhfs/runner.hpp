#pragma once

#include "fbhfs/hyperfine.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbhfs {

/// Box with a relative weight instead of a count; counts follow from N.
struct BoxTemplate {
    std::array<std::string, 6> bounds;  // A1 A2 B1 B2 C1 C2 as decimal strings
    double weight = 1;
};

/// Everything a run needs. Numbers that enter extended-precision arithmetic
/// are kept as decimal strings until the precision is known.
struct RunConfig {
    std::string system = "he4";  // he3 | he4 | custom
    std::optional<std::array<std::string, 3>> masses;
    std::optional<std::array<std::string, 3>> charges;
    std::size_t n = 400;
    /// Nested sizes for convergence and spreads; empty means the default ladder.
    std::vector<std::size_t> sizes;
    /// Empty means the isotope preset.
    std::vector<BoxTemplate> boxes;
    std::string basis_file;
    int digits = 64;
    std::optional<std::string> tolerance;
    bool prune = true;
    int optimizer_budget = 0;
    std::vector<std::pair<std::string, double>> constants;
    /// hfs.delta21 etc.; when present `hfs` skips the solve.
    std::optional<double> delta21, delta31, delta32;
    double spread21 = 0, spread31 = 0, spread32 = 0;
    std::string out_dir = ".";

    /// Sorted key = value lines with defaults resolved; the hash input.
    std::string canonical() const;
};

/// Applies `key = value` lines; `#` starts a comment. Throws ConfigError
/// naming the line for a malformed line, unknown or repeated key, or bad value.
void apply_config_text(RunConfig& config, std::string_view text);

/// Same for a single override such as a command-line flag.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Checks every module precondition that can be checked without computing.
/// Throws ConfigError.
void validate_config(const RunConfig& config);

/// Boxes used when the configuration names none: electron scale,
/// correlation, a second electron-scale box and an electron-muon short-range box,
/// equal counts.
std::vector<BoxTemplate> preset_boxes();

/// FNV-1a 64 of canonical(), as 16 hex digits.
std::string config_hash(const RunConfig& config);

enum class Command { Solve, Convergence, Expect, Hfs, Oracle, All };

/// Throws ConfigError for an unknown name.
Command parse_command(std::string_view name);
std::string to_string(Command command);

struct Artifact {
    std::string name;
    std::string content;
};

struct RunOutput {
    /// Human-readable report.
    std::string text;
    /// Files for the output directory; the structured report is the .json one.
    std::vector<Artifact> artifacts;
    /// False when a self-check (the oracle comparisons) failed.
    bool passed = true;
};

/// Validates the configuration, then runs one subcommand entirely in memory.
/// `progress` receives one line per stage. Throws fbhfs::Error.
RunOutput run(const RunConfig& config, Command command,
              const std::function<void(const std::string&)>& progress = {});

/// Writes every artifact to a temporary name first and renames only after all
/// writes succeeded, so a failure leaves no new files behind.
void write_artifacts(const std::string& directory, const std::vector<Artifact>& artifacts);

/// Short machine-readable name of an error class, e.g. "config error".
std::string error_kind(const std::exception& error);

}  // namespace fbhfs
