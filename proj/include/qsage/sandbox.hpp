#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qsage {

struct RunSpec {
  std::string script;
  /// Interpreter command line; the script path is appended.
  std::vector<std::string> interpreter{"python3"};
  std::string script_name = "solver.py";
  /// Parent of the fresh per-run working directory (system temp dir if empty).
  std::filesystem::path work_root;
  double timeout_s = 300.0;
  std::uint64_t memory_bytes = std::uint64_t{8} << 30; ///< RLIMIT_AS; 0 disables
  std::vector<std::string> env_allowlist{"PATH", "LANG", "LC_ALL", "PYTHONPATH",
                                         "OMP_NUM_THREADS", "VIRTUAL_ENV", "TZ"};
  std::map<std::string, std::string> extra_env;
  bool isolate_network = true;
  bool keep_workdir = false;
  std::size_t max_stream_bytes = std::size_t{16} << 20;
};

struct ExecutionResult {
  std::optional<int> exit_status; ///< absent when terminated by a signal
  std::optional<int> signal;
  std::string stdout_text;
  std::string stderr_text;
  double duration_s = 0.0;
  bool timed_out = false;
  bool network_isolated = false;
  bool truncated = false;
  std::filesystem::path workdir; ///< empty unless keep_workdir

  bool clean() const { return !timed_out && exit_status && *exit_status == 0; }
  nlohmann::json to_json() const;
  static ExecutionResult from_json(const nlohmann::json &j);
};

/// Runs the script in its own process group and fresh working directory.
/// On return no process of that group survives. A missing interpreter is an
/// Infrastructure error.
ExecutionResult run_script(const RunSpec &spec);

/// Resolves a command name against PATH; empty if not found or not executable.
std::filesystem::path find_executable(std::string_view command);

struct ParsedResult {
  std::optional<double> value;
  std::string failure; ///< set iff value is absent

  bool ok() const { return value.has_value(); }
};

/// Value of the last `RESULT: <float>` line. With `lenient`, falls back to
/// the last floating-point token anywhere in the output.
ParsedResult parse_result(std::string_view stdout_text, bool lenient = false);

} // namespace qsage
