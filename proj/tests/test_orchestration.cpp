#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdlib.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pt/analysis.hpp"
#include "pt/error.hpp"
#include "pt/orchestration.hpp"
#include "pt/trace_io.hpp"

using namespace pt;
using namespace pt::orchestration;

namespace
{

const char * cli_bin()
{
  return ::getenv("PT_CLI_BIN");
}

std::filesystem::path fresh_dir(const std::string & tag)
{
  auto dir = std::filesystem::temp_directory_path() /
    ("pt-orch-" + tag + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string & command_line)
{
  const int status = std::system(command_line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture_cli(const std::string & command_line)
{
  FILE * pipe = ::popen(command_line.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buffer[512];
  while (::fgets(buffer, sizeof(buffer), pipe) != nullptr) {
    output += buffer;
  }
  ::pclose(pipe);
  return output;
}

}  // namespace

TEST_CASE("parse_launch accepts the documented shape")
{
  const auto document = parse_launch(R"({
    "trace": {"session_name": "ros2", "events": ["pt:*"]},
    "nodes": [
      {"fixture": "talker", "args": ["--count", "3"]},
      {"fixture": "listener"}
    ]
  })");
  REQUIRE(document.nodes.size() == 2);
  CHECK(document.nodes[0].fixture == "talker");
  CHECK(document.nodes[0].args == std::vector<std::string>{"--count", "3"});
  CHECK(document.nodes[1].args.empty());
  REQUIRE(document.trace.has_value());
  CHECK(document.trace->session_name == "ros2");
  CHECK(document.trace->events == std::vector<std::string>{"pt:*"});
  CHECK(document.trace->output_dir == ".");  // default
}

TEST_CASE("parse_launch schema violations")
{
  // missing nodes
  CHECK_THROWS_AS(parse_launch(R"({"trace": {"session_name": "x"}})"), Error);
  try {
    parse_launch(R"({"trace": {"session_name": "x"}})");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::schema_error);
  }
  // empty nodes
  CHECK_THROWS_AS(parse_launch(R"({"nodes": []})"), Error);
  // unknown top-level key
  CHECK_THROWS_AS(parse_launch(R"({"nodes": [{"fixture": "x"}], "extra": 1})"), Error);
  // unknown trace key
  CHECK_THROWS_AS(
    parse_launch(R"({"trace": {"wat": 1}, "nodes": [{"fixture": "x"}]})"), Error);
  // node without fixture
  CHECK_THROWS_AS(parse_launch(R"({"nodes": [{"args": []}]})"), Error);
  // bad event pattern
  CHECK_THROWS_AS(
    parse_launch(R"({"trace": {"events": ["nope"]}, "nodes": [{"fixture": "x"}]})"), Error);
  // malformed JSON
  CHECK_THROWS_AS(parse_launch("{nodes: ["), Error);
  try {
    parse_launch("{nodes: [");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}

TEST_CASE("a document without trace is valid and disables tracing")
{
  const auto document = parse_launch(R"({"nodes": [{"fixture": "talker"}]})");
  CHECK_FALSE(document.trace.has_value());
  CHECK(document.nodes.size() == 1);
}

TEST_CASE("environment round-trip for the child trace configuration")
{
  ::unsetenv(kEnvSession);
  ::unsetenv(kEnvEvents);
  ::unsetenv(kEnvOutputDir);
  ::setenv(kEnvStateDir, fresh_dir("no-state").c_str(), 1);
  CHECK_FALSE(trace_config_from_process_env().has_value());

  ::setenv(kEnvSession, "envtest", 1);
  ::setenv(kEnvEvents, "pt:core_*,pt:callback_start", 1);
  ::setenv(kEnvOutputDir, "/tmp/pt-env", 1);
  const auto settings = trace_config_from_process_env();
  REQUIRE(settings.has_value());
  CHECK(settings->session_name == "envtest");
  CHECK(settings->events == std::vector<std::string>{"pt:core_*", "pt:callback_start"});
  CHECK(settings->output_dir == "/tmp/pt-env");
  ::unsetenv(kEnvSession);
  ::unsetenv(kEnvEvents);
  ::unsetenv(kEnvOutputDir);
}

TEST_CASE("launching two traced fixtures yields one valid trace file each")
{
  REQUIRE(cli_bin() != nullptr);
  const auto out_dir = fresh_dir("launch");

  LaunchDocument document;
  document.trace = TraceSettings{"launchtest", {"pt:*"}, out_dir};
  document.nodes.push_back({"talker", {"--count", "5", "--period-us", "100"}});
  document.nodes.push_back({"pubsub", {"--count", "7"}});

  LaunchOptions options;
  options.runner_command = {cli_bin(), "run-fixture"};
  const auto report = launch(document, options);

  REQUIRE(report.processes.size() == 2);
  CHECK(report.all_ok());
  for (const auto & process : report.processes) {
    CHECK(process.exit_code == 0);
    REQUIRE(process.trace_file.has_value());
    CHECK(process.trace_valid);
    CHECK(process.events > 0);

    const auto trace = io::read_trace(*process.trace_file);
    // core_init is the first event of each per-process trace
    REQUIRE_FALSE(trace.events.empty());
    CHECK(trace.events.front().tracepoint == TracepointId::core_init);
    CHECK(trace.events.front().seq == 0);
    for (const auto & event : trace.events) {
      CHECK(event.timestamp_ns >= trace.header.clock_base_ns);
    }
  }
  CHECK(report.total_events > 0);

  // merged multi-process analysis: handles from different processes stay
  // distinct, so the joined model covers every node
  std::vector<std::vector<TraceEvent>> streams;
  for (const auto & process : report.processes) {
    streams.push_back(io::read_trace(*process.trace_file).events);
  }
  const auto merged = io::merge_events(streams);
  const auto model = analysis::build_model(merged);
  CHECK(model.nodes.size() == 3);  // talker + pubsub's two nodes
  CHECK(model.diagnostics.empty());
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("launch without trace runs the processes but writes no files")
{
  REQUIRE(cli_bin() != nullptr);
  const auto out_dir = fresh_dir("untraced");

  LaunchDocument document;
  document.nodes.push_back({"talker", {"--count", "2", "--period-us", "10"}});

  LaunchOptions options;
  options.runner_command = {cli_bin(), "run-fixture"};
  // make sure no stale environment leaks into the child
  ::unsetenv(kEnvSession);
  ::setenv(kEnvStateDir, (out_dir / "state").c_str(), 1);
  const auto report = launch(document, options);
  CHECK(report.all_ok());
  CHECK_FALSE(report.tracing_enabled);
  CHECK(report.total_events == 0);
  bool no_trace_files = true;
  for (const auto & entry : std::filesystem::directory_iterator(out_dir)) {
    no_trace_files = no_trace_files && entry.path().extension() != ".ptrc";
  }
  CHECK(no_trace_files);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("a crashing node is reported and tracing still wraps up")
{
  REQUIRE(cli_bin() != nullptr);
  const auto out_dir = fresh_dir("crash");

  LaunchDocument document;
  document.trace = TraceSettings{"crashtest", {"pt:*"}, out_dir};
  document.nodes.push_back({"talker", {"--count", "2", "--period-us", "10"}});
  document.nodes.push_back({"fail", {}});

  LaunchOptions options;
  options.runner_command = {cli_bin(), "run-fixture"};
  const auto report = launch(document, options);

  REQUIRE(report.processes.size() == 2);
  CHECK_FALSE(report.all_ok());
  CHECK(report.processes[0].exit_code == 0);
  CHECK(report.processes[1].exit_code == 3);
  // the failing fixture still stopped its session: its file is valid
  REQUIRE(report.processes[1].trace_file.has_value());
  CHECK(report.processes[1].trace_valid);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("unknown fixtures surface as nonzero exits")
{
  REQUIRE(cli_bin() != nullptr);
  LaunchDocument document;
  document.nodes.push_back({"no_such_fixture", {}});
  LaunchOptions options;
  options.runner_command = {cli_bin(), "run-fixture"};
  const auto report = launch(document, options);
  REQUIRE(report.processes.size() == 1);
  CHECK(report.processes[0].exit_code != 0);
}

TEST_CASE("trace command: start, status, stop against the control file")
{
  REQUIRE(cli_bin() != nullptr);
  const auto state = fresh_dir("state");
  // deliberately not created up front: start must make it
  const auto out_dir = fresh_dir("cmd") / "nested" / "out";
  ::setenv(kEnvStateDir, state.c_str(), 1);
  ::unsetenv(kEnvSession);
  const std::string cli = cli_bin();

  // stop without start
  CHECK(run_cli(cli + " trace stop >/dev/null 2>&1") == 1);
  const auto stop_msg = capture_cli(cli + " trace stop 2>&1");
  CHECK(stop_msg.find("no active session") != std::string::npos);

  // status without a session
  CHECK(capture_cli(cli + " trace status").find("no active session") != std::string::npos);

  // start, then status shows name and patterns
  CHECK(
    run_cli(
      cli + " trace start --session smoke --events 'pt:core_*' --output-dir " +
      out_dir.string() + " >/dev/null") == 0);
  const auto status = capture_cli(cli + " trace status");
  CHECK(status.find("smoke") != std::string::npos);
  CHECK(status.find("pt:core_*") != std::string::npos);

  // double start fails
  CHECK(run_cli(cli + " trace start >/dev/null 2>&1") == 1);

  // a subsequently launched fixture picks the session up from the control file
  CHECK(run_cli(cli + " run-fixture pubsub --count 3 >/dev/null") == 0);

  // stop prints the recorded totals
  const auto stop_out = capture_cli(cli + " trace stop");
  CHECK(stop_out.find("events recorded") != std::string::npos);
  CHECK(stop_out.find("0 events recorded") == std::string::npos);  // it did record

  // and now the session is gone
  CHECK(run_cli(cli + " trace stop >/dev/null 2>&1") == 1);

  // start/stop with no workload prints zero events
  CHECK(
    run_cli(
      cli + " trace start --session idle --output-dir " + out_dir.string() +
      " >/dev/null") == 0);
  const auto idle_out = capture_cli(cli + " trace stop");
  CHECK(idle_out.find("0 events recorded") != std::string::npos);

  ::unsetenv(kEnvStateDir);
  std::filesystem::remove_all(state);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("cli usage errors exit with code 2")
{
  REQUIRE(cli_bin() != nullptr);
  const std::string cli = cli_bin();
  CHECK(run_cli(cli + " >/dev/null 2>&1") == 2);
  CHECK(run_cli(cli + " analyze >/dev/null 2>&1") == 2);  // missing required options
  CHECK(run_cli(cli + " no-such-command >/dev/null 2>&1") == 2);
}

TEST_CASE("pt launch runs a document end to end")
{
  REQUIRE(cli_bin() != nullptr);
  const auto out_dir = fresh_dir("cli-launch");
  const auto launch_file = out_dir / "launch.json";
  {
    std::ofstream out(launch_file);
    out << R"({
      "trace": {"session_name": "clilaunch", "events": ["pt:*"], "output_dir": ")"
        << out_dir.string() << R"("},
      "nodes": [
        {"fixture": "pubsub", "args": ["--count", "4"]},
        {"fixture": "talker", "args": ["--count", "2", "--period-us", "10"]}
      ]
    })";
  }
  const std::string cli = cli_bin();
  const auto output = capture_cli(cli + " launch " + launch_file.string());
  CHECK(output.find("pubsub: exit 0") != std::string::npos);
  CHECK(output.find("talker: exit 0") != std::string::npos);
  CHECK(output.find("events recorded") != std::string::npos);

  std::size_t trace_files = 0;
  for (const auto & entry : std::filesystem::directory_iterator(out_dir)) {
    if (entry.path().extension() == ".ptrc") {
      ++trace_files;
    }
  }
  CHECK(trace_files == 2);
  std::filesystem::remove_all(out_dir);
}
