#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <pt/pt.h>

#include "fixtures.hpp"

namespace
{

int fail(pt_status status, const std::string & what)
{
  std::cerr << "pt: " << what << ": " << pt_status_str(status);
  const std::string detail = pt_last_error();
  if (!detail.empty()) {
    std::cerr << " (" << detail << ")";
  }
  std::cerr << '\n';
  return 1;
}

std::vector<const char *> c_strings(const std::vector<std::string> & strings)
{
  std::vector<const char *> out;
  out.reserve(strings.size());
  for (const auto & s : strings) {
    out.push_back(s.c_str());
  }
  return out;
}

int cmd_trace(
  const std::string & action, const std::string & session,
  const std::vector<std::string> & events, const std::string & output_dir)
{
  if (action == "start") {
    const auto patterns = c_strings(events);
    const pt_status status = pt_trace_cmd_start(
      session.empty() ? nullptr : session.c_str(),
      patterns.empty() ? nullptr : patterns.data(),
      static_cast<uint32_t>(patterns.size()),
      output_dir.empty() ? nullptr : output_dir.c_str());
    if (status != PT_OK) {
      return fail(status, "trace start");
    }
    std::cout << "tracing started" << (session.empty() ? "" : " (session " + session + ")")
              << '\n';
    return 0;
  }
  if (action == "stop") {
    char name[256] = {};
    uint64_t event_count = 0;
    uint64_t dropped = 0;
    uint32_t files = 0;
    const pt_status status =
      pt_trace_cmd_stop(name, sizeof(name), &event_count, &dropped, &files);
    if (status == PT_ERR_NO_ACTIVE_SESSION) {
      std::cerr << "pt: no active session\n";
      return 1;
    }
    if (status != PT_OK) {
      return fail(status, "trace stop");
    }
    std::cout << event_count << " events recorded, " << dropped << " dropped ("
              << files << " trace file" << (files == 1 ? "" : "s") << ", session "
              << name << ")\n";
    return 0;
  }
  if (action == "status") {
    int active = 0;
    char name[256] = {};
    char patterns[1024] = {};
    const pt_status status =
      pt_trace_cmd_status(&active, name, sizeof(name), patterns, sizeof(patterns));
    if (status != PT_OK) {
      return fail(status, "trace status");
    }
    if (active == 0) {
      std::cout << "no active session\n";
    } else {
      std::cout << "session " << name << " active, events: " << patterns << '\n';
    }
    return 0;
  }
  std::cerr << "pt: unknown trace action '" << action << "'\n";
  return 2;
}

int cmd_launch(const std::string & file, const std::string & self)
{
  pt_launch_report * report = nullptr;
  const pt_status status = pt_launch_file(file.c_str(), self.c_str(), &report);
  if (status != PT_OK) {
    return fail(status, "launch");
  }
  const uint32_t count = pt_launch_report_process_count(report);
  for (uint32_t i = 0; i < count; ++i) {
    const char * fixture = nullptr;
    int exit_code = 0;
    const char * trace_file = nullptr;
    int trace_valid = 0;
    pt_launch_report_process(report, i, &fixture, &exit_code, &trace_file, &trace_valid);
    std::cout << fixture << ": exit " << exit_code;
    if (trace_file != nullptr) {
      std::cout << ", trace " << trace_file << (trace_valid != 0 ? "" : " (invalid)");
    }
    std::cout << '\n';
  }
  std::cout << pt_launch_report_total_events(report) << " events recorded, "
            << pt_launch_report_total_dropped(report) << " dropped\n";
  const bool ok = pt_launch_report_all_ok(report) != 0;
  pt_launch_report_free(report);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"pt — tracing toolkit for the layered publish-subscribe runtime"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pt_version());

  // trace
  auto * trace = app.add_subcommand("trace", "control the tracer for launched fixtures");
  std::string trace_action;
  trace->add_option("action", trace_action, "start|stop|status")->required();
  std::string trace_session;
  trace->add_option("--session", trace_session, "session name");
  std::vector<std::string> trace_events;
  trace->add_option("--events", trace_events, "event pattern, e.g. pt:*");
  std::string trace_output_dir;
  trace->add_option("--output-dir", trace_output_dir, "trace output directory");

  // launch
  auto * launch = app.add_subcommand("launch", "run a launch document");
  std::string launch_file;
  launch->add_option("file", launch_file, "launch JSON file")->required();

  // analyze
  auto * analyze = app.add_subcommand("analyze", "build the model and compute metrics");
  std::vector<std::string> analyze_inputs;
  analyze->add_option("--input", analyze_inputs, "trace file(s)")->required();
  std::string analyze_report;
  analyze->add_option("--report", analyze_report, "report output directory")->required();
  std::string analyze_timer;
  analyze->add_option("--timer", analyze_timer, "timer symbol for input-output linkage");

  // bench
  auto * bench = app.add_subcommand("bench", "instrumentation overhead benchmark");
  std::vector<int> bench_rates;
  bench->add_option("--rates", bench_rates, "publishing rates (Hz)");
  std::vector<int> bench_sizes;
  bench->add_option("--sizes", bench_sizes, "message sizes (KiB)");
  double bench_duration = 30.0;
  bench->add_option("--duration-s", bench_duration, "seconds per cell");
  double bench_warmup = 2.0;
  bench->add_option("--warmup-s", bench_warmup, "warmup seconds discarded per cell");
  std::string bench_out = "bench-out";
  bench->add_option("--out", bench_out, "output directory");
  bool bench_no_rt = false;
  bench->add_flag("--no-realtime", bench_no_rt, "skip the SCHED_FIFO attempt");

  // export
  auto * export_cmd = app.add_subcommand("export", "trace file to newline-delimited JSON");
  std::string export_input;
  export_cmd->add_option("--input", export_input, "trace file")->required();
  std::string export_out = "-";
  export_cmd->add_option("--out", export_out, "output file, - for stdout");

  // run-fixture: everything after the name goes to the fixture untouched
  auto * run = app.add_subcommand("run-fixture", "run a built-in node program");
  std::string fixture_name;
  run->add_option("name", fixture_name, "fixture name")->required();
  run->prefix_command();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return 2;  // usage error
  }

  if (trace->parsed()) {
    return cmd_trace(trace_action, trace_session, trace_events, trace_output_dir);
  }

  if (launch->parsed()) {
    return cmd_launch(launch_file, argv[0]);
  }

  if (analyze->parsed()) {
    const auto inputs = c_strings(analyze_inputs);
    const pt_status status = pt_analyze(
      inputs.data(), static_cast<uint32_t>(inputs.size()), analyze_report.c_str(),
      analyze_timer.empty() ? nullptr : analyze_timer.c_str());
    if (status != PT_OK) {
      return fail(status, "analyze");
    }
    std::cout << "report written to " << analyze_report << '\n';
    return 0;
  }

  if (bench->parsed()) {
    pt_bench_opts opts{};
    opts.rates_hz = bench_rates.empty() ? nullptr : bench_rates.data();
    opts.rate_count = static_cast<uint32_t>(bench_rates.size());
    opts.sizes_kib = bench_sizes.empty() ? nullptr : bench_sizes.data();
    opts.size_count = static_cast<uint32_t>(bench_sizes.size());
    opts.duration_s = bench_duration;
    opts.warmup_s = bench_warmup;
    opts.out_dir = bench_out.c_str();
    opts.attempt_realtime = bench_no_rt ? 0 : 1;
    const pt_status status = pt_bench_run(&opts);
    if (status != PT_OK) {
      return fail(status, "bench");
    }
    std::cout << "bench results written to " << bench_out << '\n';
    return 0;
  }

  if (export_cmd->parsed()) {
    const pt_status status = pt_trace_export_json(export_input.c_str(), export_out.c_str());
    if (status != PT_OK) {
      return fail(status, "export");
    }
    return 0;
  }

  if (run->parsed()) {
    const std::vector<std::string> fixture_args = run->remaining();
    pt_session * session = nullptr;
    const pt_status status = pt_session_start_from_env(&session);
    if (status != PT_OK) {
      return fail(status, "session from environment");
    }
    int exit_code = 0;
    try {
      exit_code = run_fixture(fixture_name, fixture_args);
    } catch (const std::exception & e) {
      std::cerr << "pt run-fixture: " << e.what() << '\n';
      exit_code = 1;
    }
    if (session != nullptr) {
      uint64_t emitted = 0;
      uint64_t dropped = 0;
      const pt_status stop_status = pt_session_stop(session, &emitted, &dropped);
      pt_session_free(session);
      if (stop_status != PT_OK && exit_code == 0) {
        return fail(stop_status, "session stop");
      }
    }
    return exit_code;
  }

  return 2;
}
