#include "pt/orchestration.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pt/error.hpp"
#include "pt/trace_io.hpp"

extern char ** environ;

namespace pt::orchestration
{

namespace
{

void validate_patterns(const std::vector<std::string> & patterns)
{
  for (const auto & pattern : patterns) {
    EventPattern::parse(pattern);
  }
}

std::string join(const std::vector<std::string> & parts, char separator)
{
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) {
      out.push_back(separator);
    }
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char separator)
{
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(separator, start);
    if (end == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

TraceSettings settings_from_json(const nlohmann::json & object)
{
  TraceSettings settings;
  for (const auto & [key, value] : object.items()) {
    if (key == "session_name") {
      if (!value.is_string()) {
        throw Error(ErrorCode::schema_error, "trace.session_name must be a string");
      }
      settings.session_name = value.get<std::string>();
    } else if (key == "events") {
      if (!value.is_array()) {
        throw Error(ErrorCode::schema_error, "trace.events must be an array of strings");
      }
      settings.events.clear();
      for (const auto & item : value) {
        if (!item.is_string()) {
          throw Error(ErrorCode::schema_error, "trace.events must be an array of strings");
        }
        settings.events.push_back(item.get<std::string>());
      }
    } else if (key == "output_dir") {
      if (!value.is_string()) {
        throw Error(ErrorCode::schema_error, "trace.output_dir must be a string");
      }
      settings.output_dir = value.get<std::string>();
    } else {
      throw Error(ErrorCode::schema_error, "unknown trace key '" + key + "'");
    }
  }
  if (settings.session_name.empty()) {
    throw Error(ErrorCode::schema_error, "trace.session_name must be non-empty");
  }
  try {
    validate_patterns(settings.events);
  } catch (const Error & e) {
    throw Error(ErrorCode::schema_error, e.what());
  }
  return settings;
}

nlohmann::json settings_to_json(const TraceSettings & settings)
{
  return {
    {"session_name", settings.session_name},
    {"events", settings.events},
    {"output_dir", settings.output_dir.string()},
  };
}

// Children of the launch in flight; a SIGTERM/SIGINT to the launcher is
// forwarded so every child still stops its session and flushes its trace.
struct LaunchSignalState
{
  volatile sig_atomic_t active = 0;
  volatile pid_t pids[256] = {};
  volatile sig_atomic_t count = 0;
};

LaunchSignalState g_launch_signals;

void forward_signal_to_children(int signo)
{
  for (sig_atomic_t i = 0; i < g_launch_signals.count; ++i) {
    const pid_t pid = g_launch_signals.pids[i];
    if (pid > 0) {
      ::kill(pid, signo);
    }
  }
}

class ScopedSignalForwarding
{
public:
  ScopedSignalForwarding()
  {
    g_launch_signals.count = 0;
    g_launch_signals.active = 1;
    struct sigaction action{};
    action.sa_handler = forward_signal_to_children;
    ::sigaction(SIGTERM, &action, &old_term_);
    ::sigaction(SIGINT, &action, &old_int_);
  }

  ~ScopedSignalForwarding()
  {
    ::sigaction(SIGTERM, &old_term_, nullptr);
    ::sigaction(SIGINT, &old_int_, nullptr);
    g_launch_signals.active = 0;
    g_launch_signals.count = 0;
  }

  void track(pid_t pid)
  {
    if (g_launch_signals.count < 256) {
      g_launch_signals.pids[g_launch_signals.count] = pid;
      g_launch_signals.count = g_launch_signals.count + 1;
    }
  }

private:
  struct sigaction old_term_{};
  struct sigaction old_int_{};
};

}  // namespace

LaunchDocument parse_launch(std::string_view text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::schema_error, "launch document must be a JSON object");
  }

  LaunchDocument document;
  bool saw_nodes = false;
  for (const auto & [key, value] : doc.items()) {
    if (key == "trace") {
      if (!value.is_object()) {
        throw Error(ErrorCode::schema_error, "trace must be an object");
      }
      document.trace = settings_from_json(value);
    } else if (key == "nodes") {
      if (!value.is_array()) {
        throw Error(ErrorCode::schema_error, "nodes must be an array");
      }
      saw_nodes = true;
      for (const auto & entry : value) {
        if (!entry.is_object()) {
          throw Error(ErrorCode::schema_error, "node entries must be objects");
        }
        NodeSpec spec;
        bool saw_fixture = false;
        for (const auto & [node_key, node_value] : entry.items()) {
          if (node_key == "fixture") {
            if (!node_value.is_string()) {
              throw Error(ErrorCode::schema_error, "node.fixture must be a string");
            }
            spec.fixture = node_value.get<std::string>();
            saw_fixture = true;
          } else if (node_key == "args") {
            if (!node_value.is_array()) {
              throw Error(ErrorCode::schema_error, "node.args must be an array of strings");
            }
            for (const auto & arg : node_value) {
              if (!arg.is_string()) {
                throw Error(ErrorCode::schema_error, "node.args must be an array of strings");
              }
              spec.args.push_back(arg.get<std::string>());
            }
          } else {
            throw Error(ErrorCode::schema_error, "unknown node key '" + node_key + "'");
          }
        }
        if (!saw_fixture) {
          throw Error(ErrorCode::schema_error, "node entry is missing 'fixture'");
        }
        document.nodes.push_back(std::move(spec));
      }
    } else {
      throw Error(ErrorCode::schema_error, "unknown key '" + key + "'");
    }
  }
  if (!saw_nodes) {
    throw Error(ErrorCode::schema_error, "launch document is missing 'nodes'");
  }
  if (document.nodes.empty()) {
    throw Error(ErrorCode::schema_error, "launch document needs at least one node");
  }
  return document;
}

bool LaunchReport::all_ok() const
{
  for (const auto & process : processes) {
    if (!process.ok()) {
      return false;
    }
  }
  return true;
}

std::filesystem::path trace_file_path(
  const std::filesystem::path & output_dir, const std::string & session_name, pid_t pid)
{
  return output_dir / (session_name + "-" + std::to_string(pid) + ".ptrc");
}

LaunchReport launch(const LaunchDocument & document, const LaunchOptions & options)
{
  if (options.runner_command.empty()) {
    throw Error(ErrorCode::spawn_failure, "no runner command configured");
  }

  LaunchReport report;
  report.tracing_enabled = document.trace.has_value();

  if (document.trace) {
    std::filesystem::create_directories(document.trace->output_dir);
  }

  // child environment: inherited, plus the trace configuration
  std::vector<std::string> env_storage;
  for (char ** entry = environ; *entry != nullptr; ++entry) {
    const std::string_view text(*entry);
    if (text.starts_with("PT_TRACE_")) {
      continue;  // never leak the launcher's own trace settings
    }
    env_storage.emplace_back(text);
  }
  if (document.trace) {
    env_storage.push_back(std::string(kEnvSession) + "=" + document.trace->session_name);
    env_storage.push_back(std::string(kEnvEvents) + "=" + join(document.trace->events, ','));
    env_storage.push_back(
      std::string(kEnvOutputDir) + "=" + document.trace->output_dir.string());
  }
  std::vector<char *> envp;
  envp.reserve(env_storage.size() + 1);
  for (auto & entry : env_storage) {
    envp.push_back(entry.data());
  }
  envp.push_back(nullptr);

  ScopedSignalForwarding signal_forwarding;

  for (const auto & node : document.nodes) {
    ProcessReport process;
    process.fixture = node.fixture;

    std::vector<std::string> arg_storage = options.runner_command;
    arg_storage.push_back(node.fixture);
    for (const auto & arg : node.args) {
      arg_storage.push_back(arg);
    }
    std::vector<char *> argv;
    argv.reserve(arg_storage.size() + 1);
    for (auto & arg : arg_storage) {
      argv.push_back(arg.data());
    }
    argv.push_back(nullptr);

    pid_t pid = -1;
    const int rc = ::posix_spawnp(
      &pid, argv[0], nullptr, nullptr, argv.data(), envp.data());
    if (rc != 0) {
      process.spawn_failed = true;
      process.exit_code = -1;
    } else {
      process.pid = pid;
      signal_forwarding.track(pid);
    }
    report.processes.push_back(std::move(process));
  }

  bool any_spawned = false;
  for (auto & process : report.processes) {
    if (process.spawn_failed) {
      continue;
    }
    any_spawned = true;
    int status = 0;
    if (::waitpid(process.pid, &status, 0) < 0) {
      process.exit_code = -1;
      continue;
    }
    if (WIFEXITED(status)) {
      process.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      process.term_signal = WTERMSIG(status);
      process.exit_code = -1;
    }
  }

  // collect trace files exactly once, whatever happened above
  if (document.trace) {
    for (auto & process : report.processes) {
      if (process.spawn_failed) {
        continue;
      }
      const auto path =
        trace_file_path(document.trace->output_dir, document.trace->session_name, process.pid);
      if (!std::filesystem::exists(path)) {
        continue;
      }
      process.trace_file = path;
      try {
        const auto trace = io::read_trace(path);
        process.trace_valid = true;
        process.events = trace.events.size();
        process.dropped = trace.dropped_count;
        report.total_events += process.events;
        report.total_dropped += process.dropped;
      } catch (const Error &) {
        process.trace_valid = false;
      }
    }
  }

  if (!any_spawned) {
    throw Error(
            ErrorCode::spawn_failure,
            "could not spawn any process via '" + options.runner_command.front() + "'");
  }
  return report;
}

std::filesystem::path state_dir()
{
  if (const char * dir = std::getenv(kEnvStateDir); dir != nullptr && *dir != '\0') {
    return dir;
  }
  if (const char * home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return std::filesystem::path(home) / ".pt";
  }
  return std::filesystem::path("/tmp") / ("pt-state-" + std::to_string(::getuid()));
}

std::filesystem::path control_file_path()
{
  return state_dir() / "session.json";
}

std::optional<TraceSettings> load_session_control()
{
  const auto path = control_file_path();
  std::ifstream in(path);
  if (!in) {
    return std::nullopt;
  }
  nlohmann::json doc;
  try {
    in >> doc;
    return settings_from_json(doc);
  } catch (const std::exception &) {
    return std::nullopt;  // unreadable control file counts as no session
  }
}

void save_session_control(const TraceSettings & settings)
{
  std::filesystem::create_directories(state_dir());
  const auto path = control_file_path();
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot write " + path.string());
  }
  out << settings_to_json(settings).dump(2) << '\n';
  if (!out) {
    throw Error(ErrorCode::io_failure, "short write to " + path.string());
  }
}

bool clear_session_control()
{
  std::error_code ec;
  return std::filesystem::remove(control_file_path(), ec);
}

void trace_cmd_start(const TraceSettings & settings)
{
  validate_patterns(settings.events);
  if (load_session_control()) {
    throw Error(
            ErrorCode::already_recording,
            "a session is already active (control file " + control_file_path().string() + ")");
  }
  std::filesystem::create_directories(settings.output_dir);
  save_session_control(settings);
}

StopSummary trace_cmd_stop()
{
  const auto control = load_session_control();
  if (!control) {
    throw Error(ErrorCode::no_active_session, "no active session");
  }
  StopSummary summary;
  summary.session_name = control->session_name;
  clear_session_control();

  std::error_code ec;
  const std::string prefix = control->session_name + "-";
  for (const auto & entry : std::filesystem::directory_iterator(control->output_dir, ec)) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const auto filename = entry.path().filename().string();
    if (!filename.starts_with(prefix) || !filename.ends_with(".ptrc")) {
      continue;
    }
    try {
      const auto trace = io::read_trace(entry.path());
      ++summary.file_count;
      summary.events += trace.events.size();
      summary.dropped += trace.dropped_count;
    } catch (const Error &) {
      // invalid/foreign file, skip it
    }
  }
  return summary;
}

std::optional<TraceSettings> trace_cmd_status()
{
  return load_session_control();
}

std::optional<TraceSettings> trace_config_from_process_env()
{
  const char * session = std::getenv(kEnvSession);
  if (session != nullptr && *session != '\0') {
    TraceSettings settings;
    settings.session_name = session;
    if (const char * events = std::getenv(kEnvEvents); events != nullptr && *events != '\0') {
      settings.events = split(events, ',');
    }
    if (const char * dir = std::getenv(kEnvOutputDir); dir != nullptr && *dir != '\0') {
      settings.output_dir = dir;
    }
    return settings;
  }
  return load_session_control();
}

std::unique_ptr<Session> begin_session_from_process_env()
{
  const auto settings = trace_config_from_process_env();
  if (!settings) {
    return nullptr;
  }
  std::error_code ec;
  std::filesystem::create_directories(settings->output_dir, ec);
  SessionConfig config;
  config.session_name = settings->session_name;
  config.enabled_patterns = settings->events;
  config.output_path =
    trace_file_path(settings->output_dir, settings->session_name, ::getpid());
  config.backend = Backend::ring;
  if (const char * capacity = std::getenv(kEnvCapacity); capacity != nullptr) {
    config.buffer_capacity_events = std::strtoull(capacity, nullptr, 10);
  }
  return session_start(std::move(config));
}

}  // namespace pt::orchestration
