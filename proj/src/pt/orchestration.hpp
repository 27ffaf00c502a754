#ifndef PT__ORCHESTRATION_HPP_
#define PT__ORCHESTRATION_HPP_

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pt/recorder.hpp"

namespace pt::orchestration
{

inline constexpr const char * kEnvSession = "PT_TRACE_SESSION";
inline constexpr const char * kEnvEvents = "PT_TRACE_EVENTS";  // comma-separated patterns
inline constexpr const char * kEnvOutputDir = "PT_TRACE_OUTPUT_DIR";
inline constexpr const char * kEnvCapacity = "PT_TRACE_CAPACITY";
inline constexpr const char * kEnvStateDir = "PT_STATE_DIR";

struct TraceSettings
{
  std::string session_name = "pt";
  std::vector<std::string> events = {"pt:*"};
  std::filesystem::path output_dir = ".";
};

struct NodeSpec
{
  std::string fixture;
  std::vector<std::string> args;
};

struct LaunchDocument
{
  std::optional<TraceSettings> trace;
  std::vector<NodeSpec> nodes;
};

/// Parses and validates a launch document. Throws Error{parse_error} on bad
/// JSON and Error{schema_error} on unknown keys, missing nodes, wrong types
/// or invalid event patterns.
LaunchDocument parse_launch(std::string_view text);

struct ProcessReport
{
  std::string fixture;
  pid_t pid = -1;
  bool spawn_failed = false;
  int exit_code = 0;
  int term_signal = 0;  // nonzero when killed by a signal
  std::optional<std::filesystem::path> trace_file;
  bool trace_valid = false;
  uint64_t events = 0;
  uint64_t dropped = 0;

  bool ok() const {return !spawn_failed && term_signal == 0 && exit_code == 0;}
};

struct LaunchReport
{
  std::vector<ProcessReport> processes;
  bool tracing_enabled = false;
  uint64_t total_events = 0;
  uint64_t total_dropped = 0;

  bool all_ok() const;
};

struct LaunchOptions
{
  /// Command prefix the node fixtures are spawned with; the fixture name and
  /// its args are appended (typically {"/path/to/pt", "run-fixture"}).
  std::vector<std::string> runner_command;
};

/// Spawns one process per node entry, passing the trace configuration through
/// the PT_TRACE_* environment so each child records its own session strictly
/// before node construction. Waits for every process and collects one trace
/// file per process; trace collection runs exactly once regardless of exit
/// order or failures. Throws Error{spawn_failure} only when nothing spawned.
LaunchReport launch(const LaunchDocument & document, const LaunchOptions & options);

/// Per-process trace file name: <session_name>-<pid>.ptrc in output_dir.
std::filesystem::path trace_file_path(
  const std::filesystem::path & output_dir, const std::string & session_name, pid_t pid);

// --- session-control file (the `pt trace` command state) ---

std::filesystem::path state_dir();
std::filesystem::path control_file_path();

std::optional<TraceSettings> load_session_control();
void save_session_control(const TraceSettings & settings);
bool clear_session_control();

struct StopSummary
{
  std::string session_name;
  std::size_t file_count = 0;
  uint64_t events = 0;
  uint64_t dropped = 0;
};

/// `pt trace start`: validates patterns and writes the control file so
/// subsequently launched fixtures trace themselves.
void trace_cmd_start(const TraceSettings & settings);

/// `pt trace stop`: removes the control file and sums up the session's trace
/// files. Throws Error{no_active_session} when no session was started.
StopSummary trace_cmd_stop();

/// `pt trace status`: the active control settings, if any.
std::optional<TraceSettings> trace_cmd_status();

// --- child-process side ---

/// Trace configuration for this process: PT_TRACE_* environment first, then
/// the control file. Empty when tracing is disabled.
std::optional<TraceSettings> trace_config_from_process_env();

/// Starts the per-process session described by the environment (or control
/// file); returns nullptr when tracing is disabled. Called by the fixture
/// runner before any node construction.
std::unique_ptr<Session> begin_session_from_process_env();

}  // namespace pt::orchestration

#endif  // PT__ORCHESTRATION_HPP_
