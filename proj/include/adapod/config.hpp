#pragma once

#include "adapod/bench.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adapod {

/// Settings of one command-line run.
struct RunConfig
{
    std::string command;
    ExperimentConfig experiment;
    bool quick = false;
    bool verbose = false;

    std::string out_dir = ".";
    std::string snapshots_path; ///< empty: <out>/snapshots.txt
    std::string basis_path;     ///< empty: <out>/basis.txt
    std::string rom_path;       ///< empty: <out>/rom.txt
    std::size_t rom_dim = 0;    ///< 0: the POD rank

    std::string snapshots_file() const;
    std::string basis_file() const;
    std::string rom_file() const;

    /// Line of each key set from a config file, for diagnostics.
    std::map<std::string, int> key_lines;
    std::string source;
};

/// Experiment defaults for a problem, with the reduced-cost profile if quick.
ExperimentConfig experiment_defaults(ProblemKind problem, bool quick);

/// Problem solved by a command: bench-burgers implies Burgers, bench-cd
/// convection-diffusion, other commands read the `problem` key.
ProblemKind problem_for_command(std::string_view command, ProblemKind configured);

/// Parses `key = value` lines (`#` starts a comment) on top of the defaults
/// for `command`. Throws ConfigError with the line number for unknown keys,
/// malformed values and duplicates. The result is not yet validated.
RunConfig parse_config(std::string_view text, std::string_view command, bool quick = false,
                       const std::string & source = "<config>");

/// validate() with the failing field's config line added to the message.
void validate_config(const RunConfig & cfg);

/// The experiment settings as config-file lines; parsing them back gives
/// the same settings.
std::string format_experiment(const ExperimentConfig & cfg);

/// Documented keys and their meaning, for --help.
std::string config_keys_help();

} // namespace adapod
