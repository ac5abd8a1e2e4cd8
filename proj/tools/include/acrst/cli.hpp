#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace acrst::cli {

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

enum class Subcommand { run, sweep, report };

struct CommandSpec {
  Subcommand subcommand = Subcommand::run;
  std::string config_path;
  std::string output_dir;  // input directory for `report`
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, bool>> toggle_overrides;  // (name, enabled), applied in order
};

/// Runs one experiment and writes report.json and epochs.csv to output_dir.
int cmd_run(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// Runs every (toggle combination x seed) of the config's sweep section into
/// one subdirectory each, plus summary.csv. Failed runs are recorded and the
/// sweep continues; the exit code is 1 when any run failed.
int cmd_sweep(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// Prints a text summary of a run or sweep directory and writes per-metric
/// `<metric>_vs_epoch.csv` slices next to each report.json.
int cmd_report(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// Parses argv (`acrst run|sweep|report ...`) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace acrst::cli
