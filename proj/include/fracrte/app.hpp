#pragma once

// Subcommand execution behind the fracrte executable.

#include <filesystem>
#include <string>
#include <vector>

namespace fracrte {

/// Exit codes of the executable.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitHypothesis = 3,
    kExitConvergence = 4,
};

struct CommandOptions {
    /// forward, reduce, carleman, invert, stability or validate
    std::string subcommand;
    std::filesystem::path config;
    std::filesystem::path out_dir = "out";
    int threads = 1;
    bool validate_only = false;
};

struct CommandResult {
    int exit_code = kExitOk;
    /// config, precondition, hypothesis, convergence or internal; empty on success
    std::string error_kind;
    std::string error_message;
    std::vector<std::string> diagnostics;
    std::vector<std::string> warnings;
    /// Paths relative to the output directory, in the order written.
    std::vector<std::string> artifacts;
    std::string config_hash;
};

const std::vector<std::string>& subcommands();

/// Loads, validates and runs one subcommand. Never throws; failures are
/// reported through the result (and error.json in the output directory).
CommandResult run_command(const CommandOptions& opt);

/// Machine-readable record of a result: {"status", "kind", "message", "diagnostics", ...}.
std::string result_json(const CommandResult& r);

}  // namespace fracrte
