#include "pt/pt.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "pt/analysis.hpp"
#include "pt/bench.hpp"
#include "pt/error.hpp"
#include "pt/orchestration.hpp"
#include "pt/recorder.hpp"
#include "pt/runtime.hpp"
#include "pt/test_utils.hpp"
#include "pt/trace_io.hpp"
#include "pt/version.hpp"

namespace
{

thread_local std::string t_last_error;

pt_status map_code(pt::ErrorCode code)
{
  using pt::ErrorCode;
  switch (code) {
    case ErrorCode::schema_mismatch: return PT_ERR_SCHEMA_MISMATCH;
    case ErrorCode::malformed_payload: return PT_ERR_MALFORMED_PAYLOAD;
    case ErrorCode::invalid_config: return PT_ERR_INVALID_CONFIG;
    case ErrorCode::invalid_pattern: return PT_ERR_INVALID_PATTERN;
    case ErrorCode::already_recording: return PT_ERR_ALREADY_RECORDING;
    case ErrorCode::already_stopped: return PT_ERR_ALREADY_STOPPED;
    case ErrorCode::flush_failure: return PT_ERR_FLUSH_FAILURE;
    case ErrorCode::io_failure: return PT_ERR_IO;
    case ErrorCode::truncated_file: return PT_ERR_TRUNCATED_FILE;
    case ErrorCode::bad_magic: return PT_ERR_BAD_MAGIC;
    case ErrorCode::unsupported_version: return PT_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::unknown_tracepoint: return PT_ERR_UNKNOWN_TRACEPOINT;
    case ErrorCode::duplicate_node_name: return PT_ERR_DUPLICATE_NODE_NAME;
    case ErrorCode::unknown_node: return PT_ERR_UNKNOWN_NODE;
    case ErrorCode::inactive_lifecycle_node: return PT_ERR_INACTIVE_LIFECYCLE_NODE;
    case ErrorCode::invalid_period: return PT_ERR_INVALID_PERIOD;
    case ErrorCode::unknown_service: return PT_ERR_UNKNOWN_SERVICE;
    case ErrorCode::illegal_transition: return PT_ERR_ILLEGAL_TRANSITION;
    case ErrorCode::no_nodes: return PT_ERR_NO_NODES;
    case ErrorCode::parse_error: return PT_ERR_PARSE;
    case ErrorCode::schema_error: return PT_ERR_SCHEMA;
    case ErrorCode::spawn_failure: return PT_ERR_SPAWN_FAILURE;
    case ErrorCode::inconsistent_trace: return PT_ERR_INCONSISTENT_TRACE;
    case ErrorCode::unknown_timer: return PT_ERR_UNKNOWN_TIMER;
    case ErrorCode::cell_mismatch: return PT_ERR_CELL_MISMATCH;
    case ErrorCode::empty_input: return PT_ERR_EMPTY_INPUT;
    case ErrorCode::overrun: return PT_ERR_OVERRUN;
    case ErrorCode::no_active_session: return PT_ERR_NO_ACTIVE_SESSION;
  }
  return PT_ERR_INTERNAL;
}

template<typename Fn>
pt_status guarded(Fn && fn)
{
  try {
    fn();
    return PT_OK;
  } catch (const pt::Error & e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception & e) {
    t_last_error = e.what();
    return PT_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return PT_ERR_INTERNAL;
  }
}

pt_status invalid_argument(const char * what)
{
  t_last_error = what;
  return PT_ERR_INVALID_ARGUMENT;
}

void copy_string(const std::string & text, char * out, size_t size)
{
  if (out == nullptr || size == 0) {
    return;
  }
  const size_t n = std::min(size - 1, text.size());
  std::memcpy(out, text.data(), n);
  out[n] = '\0';
}

}  // namespace

struct pt_session
{
  std::unique_ptr<pt::Session> session;
};

struct pt_context
{
  pt::runtime::Context context;
  // wrappers handed out through the C API live as long as their context
  std::vector<std::shared_ptr<void>> owned;

  template<typename T>
  T * adopt(T * wrapper)
  {
    owned.emplace_back(wrapper, [](void * p) {delete static_cast<T *>(p);});
    return wrapper;
  }
};

struct pt_node
{
  std::shared_ptr<pt::runtime::Node> node;
  pt_context * owner = nullptr;
};

struct pt_publisher
{
  std::shared_ptr<pt::runtime::Publisher> publisher;
};

struct pt_subscription
{
  std::shared_ptr<pt::runtime::Subscription> subscription;
};

struct pt_timer
{
  std::shared_ptr<pt::runtime::Timer> timer;
};

struct pt_service
{
  std::shared_ptr<pt::runtime::Service> service;
};

struct pt_client
{
  std::shared_ptr<pt::runtime::Client> client;
};

struct pt_executor
{
  pt::runtime::Executor executor;
  explicit pt_executor(unsigned threads)
  : executor(threads) {}
};

struct pt_service_reply
{
  std::vector<uint8_t> data;
};

struct pt_launch_report
{
  pt::orchestration::LaunchReport report;
  std::vector<std::string> trace_paths;
};

extern "C" {

const char * pt_status_str(pt_status status)
{
  switch (status) {
    case PT_OK: return "ok";
    case PT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PT_ERR_SCHEMA_MISMATCH: return "schema mismatch";
    case PT_ERR_MALFORMED_PAYLOAD: return "malformed payload";
    case PT_ERR_INVALID_CONFIG: return "invalid configuration";
    case PT_ERR_INVALID_PATTERN: return "invalid event pattern";
    case PT_ERR_ALREADY_RECORDING: return "a session is already recording";
    case PT_ERR_ALREADY_STOPPED: return "session already stopped";
    case PT_ERR_FLUSH_FAILURE: return "trace flush failed";
    case PT_ERR_IO: return "i/o failure";
    case PT_ERR_TRUNCATED_FILE: return "truncated trace file";
    case PT_ERR_BAD_MAGIC: return "not a trace file";
    case PT_ERR_UNSUPPORTED_VERSION: return "unsupported trace format version";
    case PT_ERR_UNKNOWN_TRACEPOINT: return "unknown tracepoint id";
    case PT_ERR_DUPLICATE_NODE_NAME: return "duplicate node name";
    case PT_ERR_UNKNOWN_NODE: return "unknown node";
    case PT_ERR_INACTIVE_LIFECYCLE_NODE: return "lifecycle node is not active";
    case PT_ERR_INVALID_PERIOD: return "invalid timer period";
    case PT_ERR_UNKNOWN_SERVICE: return "unknown service";
    case PT_ERR_ILLEGAL_TRANSITION: return "illegal lifecycle transition";
    case PT_ERR_NO_NODES: return "executor has no nodes";
    case PT_ERR_PARSE: return "parse error";
    case PT_ERR_SCHEMA: return "schema error";
    case PT_ERR_SPAWN_FAILURE: return "spawn failure";
    case PT_ERR_INCONSISTENT_TRACE: return "inconsistent trace";
    case PT_ERR_UNKNOWN_TIMER: return "unknown timer";
    case PT_ERR_CELL_MISMATCH: return "bench cell mismatch";
    case PT_ERR_EMPTY_INPUT: return "empty input";
    case PT_ERR_OVERRUN: return "publisher overrun";
    case PT_ERR_NO_ACTIVE_SESSION: return "no active session";
    case PT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char * pt_last_error(void)
{
  return t_last_error.c_str();
}

const char * pt_version(void)
{
  return pt::kToolVersion;
}

uint32_t pt_catalog_size(void)
{
  return static_cast<uint32_t>(pt::catalog().size());
}

pt_status pt_catalog_get(uint32_t index, pt_tracepoint_info * out)
{
  if (out == nullptr) {
    return invalid_argument("out must not be NULL");
  }
  const auto all = pt::catalog();
  if (index >= all.size()) {
    return invalid_argument("catalog index out of range");
  }
  const auto & descriptor = all[index];
  out->name = descriptor.name.data();
  out->layer = pt::to_string(descriptor.layer).data();
  out->kind = descriptor.kind == pt::EventKind::initialization ? 'I' : 'R';
  out->hot_path = descriptor.hot_path == pt::HotPath::publish_path ? 'P' :
    descriptor.hot_path == pt::HotPath::receive_path ? 'S' : '-';
  out->field_count = static_cast<uint32_t>(descriptor.payload_schema.size());
  return PT_OK;
}

pt_status pt_session_start(const pt_session_opts * opts, pt_session ** out)
{
  if (opts == nullptr || out == nullptr || opts->session_name == nullptr ||
    opts->output_path == nullptr)
  {
    return invalid_argument("opts, session_name and output_path are required");
  }
  return guarded(
    [&]() {
      pt::SessionConfig config;
      config.session_name = opts->session_name;
      if (opts->pattern_count > 0) {
        config.enabled_patterns.clear();
        for (uint32_t i = 0; i < opts->pattern_count; ++i) {
          config.enabled_patterns.emplace_back(opts->patterns[i]);
        }
      }
      if (opts->buffer_capacity_events > 0) {
        config.buffer_capacity_events = opts->buffer_capacity_events;
      }
      config.output_path = opts->output_path;
      config.backend = opts->ring_backend != 0 ? pt::Backend::ring : pt::Backend::null;
      *out = new pt_session{pt::session_start(std::move(config))};
    });
}

pt_status pt_session_start_from_env(pt_session ** out)
{
  if (out == nullptr) {
    return invalid_argument("out must not be NULL");
  }
  *out = nullptr;
  return guarded(
    [&]() {
      auto session = pt::orchestration::begin_session_from_process_env();
      if (session) {
        *out = new pt_session{std::move(session)};
      }
    });
}

pt_status pt_session_set_enabled(
  pt_session * session, const char * pattern, int on, uint32_t * matched)
{
  if (session == nullptr || pattern == nullptr) {
    return invalid_argument("session and pattern are required");
  }
  return guarded(
    [&]() {
      const auto count = session->session->set_enabled(pattern, on != 0);
      if (matched != nullptr) {
        *matched = static_cast<uint32_t>(count);
      }
    });
}

pt_status pt_session_stop(pt_session * session, uint64_t * total_emitted, uint64_t * dropped)
{
  if (session == nullptr) {
    return invalid_argument("session must not be NULL");
  }
  return guarded(
    [&]() {
      const auto stats = session->session->stop();
      if (total_emitted != nullptr) {
        *total_emitted = stats.total_emitted;
      }
      if (dropped != nullptr) {
        *dropped = stats.dropped_event_count;
      }
    });
}

void pt_session_free(pt_session * session)
{
  delete session;
}

pt_status pt_context_create(pt_context ** out)
{
  if (out == nullptr) {
    return invalid_argument("out must not be NULL");
  }
  return guarded([&]() {*out = new pt_context{};});
}

void pt_context_free(pt_context * context)
{
  delete context;
}

pt_status pt_node_create(
  pt_context * context, const char * name, const char * ns, pt_node ** out)
{
  if (context == nullptr || name == nullptr || out == nullptr) {
    return invalid_argument("context, name and out are required");
  }
  return guarded(
    [&]() {
      auto node = context->context.create_node(name, ns != nullptr ? ns : "/");
      *out = context->adopt(new pt_node{std::move(node), context});
    });
}

pt_status pt_lifecycle_node_create(
  pt_context * context, const char * name, const char * ns, pt_node ** out)
{
  if (context == nullptr || name == nullptr || out == nullptr) {
    return invalid_argument("context, name and out are required");
  }
  return guarded(
    [&]() {
      auto node = context->context.create_lifecycle_node(name, ns != nullptr ? ns : "/");
      *out = context->adopt(new pt_node{std::move(node), context});
    });
}

pt_status pt_publisher_create(
  pt_node * node, const char * topic, uint32_t queue_depth, pt_publisher ** out)
{
  if (node == nullptr || topic == nullptr || out == nullptr) {
    return invalid_argument("node, topic and out are required");
  }
  return guarded(
    [&]() {
      auto publisher = node->node->create_publisher(topic, queue_depth);
      *out = node->owner->adopt(new pt_publisher{std::move(publisher)});
    });
}

pt_status pt_publish(pt_publisher * publisher, const uint8_t * data, size_t size)
{
  if (publisher == nullptr || (data == nullptr && size > 0)) {
    return invalid_argument("publisher (and data when size > 0) are required");
  }
  return guarded([&]() {publisher->publisher->publish({data, size});});
}

pt_status pt_subscription_create(
  pt_node * node, const char * topic, uint32_t queue_depth,
  pt_subscription_cb callback, void * user, const char * symbol, pt_subscription ** out)
{
  if (node == nullptr || topic == nullptr || callback == nullptr || out == nullptr) {
    return invalid_argument("node, topic, callback and out are required");
  }
  return guarded(
    [&]() {
      auto subscription = node->node->create_subscription(
        topic, queue_depth,
        [callback, user](const pt::runtime::Message & message) {
          callback(message.data->data(), message.data->size(), user);
        },
        symbol != nullptr ? symbol : "");
      *out = node->owner->adopt(new pt_subscription{std::move(subscription)});
    });
}

pt_status pt_timer_create(
  pt_node * node, int64_t period_ns, pt_timer_cb callback, void * user,
  const char * symbol, pt_timer ** out)
{
  if (node == nullptr || callback == nullptr || out == nullptr) {
    return invalid_argument("node, callback and out are required");
  }
  return guarded(
    [&]() {
      auto timer = node->node->create_timer(
        period_ns, [callback, user]() {callback(user);}, symbol != nullptr ? symbol : "");
      *out = node->owner->adopt(new pt_timer{std::move(timer)});
    });
}

void pt_service_reply_set(pt_service_reply * reply, const uint8_t * data, size_t size)
{
  if (reply == nullptr) {
    return;
  }
  reply->data.assign(data, data + size);
}

pt_status pt_service_create(
  pt_node * node, const char * name, pt_service_cb callback, void * user,
  const char * symbol, pt_service ** out)
{
  if (node == nullptr || name == nullptr || callback == nullptr || out == nullptr) {
    return invalid_argument("node, name, callback and out are required");
  }
  return guarded(
    [&]() {
      auto service = node->node->create_service(
        name,
        [callback, user](const std::vector<uint8_t> & request) {
          pt_service_reply reply;
          callback(request.data(), request.size(), &reply, user);
          return std::move(reply.data);
        },
        symbol != nullptr ? symbol : "");
      *out = node->owner->adopt(new pt_service{std::move(service)});
    });
}

pt_status pt_client_create(pt_node * node, const char * name, pt_client ** out)
{
  if (node == nullptr || name == nullptr || out == nullptr) {
    return invalid_argument("node, name and out are required");
  }
  return guarded(
    [&]() {
      auto client = node->node->create_client(name);
      *out = node->owner->adopt(new pt_client{std::move(client)});
    });
}

pt_status pt_client_call(
  pt_client * client, const uint8_t * request, size_t size,
  uint8_t ** response, size_t * response_size)
{
  if (client == nullptr || (request == nullptr && size > 0) ||
    response == nullptr || response_size == nullptr)
  {
    return invalid_argument("client, response and response_size are required");
  }
  return guarded(
    [&]() {
      const auto reply = client->client->call({request, size});
      *response = static_cast<uint8_t *>(std::malloc(reply.size() > 0 ? reply.size() : 1));
      if (*response == nullptr) {
        throw std::bad_alloc();
      }
      std::memcpy(*response, reply.data(), reply.size());
      *response_size = reply.size();
    });
}

pt_status pt_lifecycle_transition(
  pt_node * node, const char * transition, const char ** new_state)
{
  if (node == nullptr || transition == nullptr) {
    return invalid_argument("node and transition are required");
  }
  return guarded(
    [&]() {
      const auto state = node->node->lifecycle_transition(transition);
      if (new_state != nullptr) {
        *new_state = pt::runtime::to_string(state).data();
      }
    });
}

pt_status pt_executor_create(pt_context * context, uint32_t threads, pt_executor ** out)
{
  if (context == nullptr || out == nullptr) {
    return invalid_argument("context and out are required");
  }
  return guarded([&]() {*out = new pt_executor(threads == 0 ? 1 : threads);});
}

void pt_executor_free(pt_executor * executor)
{
  delete executor;
}

pt_status pt_executor_add_node(pt_executor * executor, pt_node * node)
{
  if (executor == nullptr || node == nullptr) {
    return invalid_argument("executor and node are required");
  }
  return guarded([&]() {executor->executor.add_node(node->node);});
}

pt_status pt_executor_spin_work(pt_executor * executor, uint64_t n)
{
  if (executor == nullptr) {
    return invalid_argument("executor must not be NULL");
  }
  return guarded([&]() {executor->executor.spin_work(n);});
}

pt_status pt_executor_spin_for(pt_executor * executor, int64_t duration_ns)
{
  if (executor == nullptr || duration_ns < 0) {
    return invalid_argument("executor and a non-negative duration are required");
  }
  return guarded(
    [&]() {executor->executor.spin_for(std::chrono::nanoseconds(duration_ns));});
}

pt_status pt_executor_spin(pt_executor * executor)
{
  if (executor == nullptr) {
    return invalid_argument("executor must not be NULL");
  }
  return guarded(
    [&]() {
      pt::runtime::SpinOptions options;
      executor->executor.spin(options);
    });
}

void pt_executor_shutdown(pt_executor * executor)
{
  if (executor != nullptr) {
    executor->executor.shutdown();
  }
}

void pt_free(void * ptr)
{
  std::free(ptr);
}

pt_status pt_trace_file_stats(
  const char * path, uint64_t * event_count, uint64_t * dropped_count)
{
  if (path == nullptr) {
    return invalid_argument("path must not be NULL");
  }
  return guarded(
    [&]() {
      const auto trace = pt::io::read_trace(path);
      if (event_count != nullptr) {
        *event_count = trace.events.size();
      }
      if (dropped_count != nullptr) {
        *dropped_count = trace.dropped_count;
      }
    });
}

pt_status pt_trace_export_json(const char * path, const char * out_path)
{
  if (path == nullptr || out_path == nullptr) {
    return invalid_argument("path and out_path are required");
  }
  return guarded(
    [&]() {
      const auto trace = pt::io::read_trace(path);
      const auto text = pt::io::export_json(trace.events);
      if (std::string_view(out_path) == "-") {
        std::cout << text;
        return;
      }
      std::ofstream out(out_path, std::ios::trunc);
      if (!out) {
        throw pt::Error(pt::ErrorCode::io_failure, std::string("cannot write ") + out_path);
      }
      out << text;
    });
}

pt_status pt_launch_file(
  const char * launch_path, const char * runner, pt_launch_report ** out)
{
  if (launch_path == nullptr || runner == nullptr || out == nullptr) {
    return invalid_argument("launch_path, runner and out are required");
  }
  return guarded(
    [&]() {
      std::ifstream in(launch_path);
      if (!in) {
        throw pt::Error(
                pt::ErrorCode::io_failure, std::string("cannot open ") + launch_path);
      }
      const std::string text(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto document = pt::orchestration::parse_launch(text);
      pt::orchestration::LaunchOptions options;
      options.runner_command = {runner, "run-fixture"};
      auto report = std::make_unique<pt_launch_report>();
      report->report = pt::orchestration::launch(document, options);
      for (const auto & process : report->report.processes) {
        report->trace_paths.push_back(
          process.trace_file ? process.trace_file->string() : "");
      }
      *out = report.release();
    });
}

uint32_t pt_launch_report_process_count(const pt_launch_report * report)
{
  return report == nullptr ? 0 : static_cast<uint32_t>(report->report.processes.size());
}

pt_status pt_launch_report_process(
  const pt_launch_report * report, uint32_t index, const char ** fixture,
  int * exit_code, const char ** trace_file, int * trace_valid)
{
  if (report == nullptr || index >= report->report.processes.size()) {
    return invalid_argument("report and a valid index are required");
  }
  const auto & process = report->report.processes[index];
  if (fixture != nullptr) {
    *fixture = process.fixture.c_str();
  }
  if (exit_code != nullptr) {
    *exit_code = process.exit_code;
  }
  if (trace_file != nullptr) {
    *trace_file =
      report->trace_paths[index].empty() ? nullptr : report->trace_paths[index].c_str();
  }
  if (trace_valid != nullptr) {
    *trace_valid = process.trace_valid ? 1 : 0;
  }
  return PT_OK;
}

uint64_t pt_launch_report_total_events(const pt_launch_report * report)
{
  return report == nullptr ? 0 : report->report.total_events;
}

uint64_t pt_launch_report_total_dropped(const pt_launch_report * report)
{
  return report == nullptr ? 0 : report->report.total_dropped;
}

int pt_launch_report_all_ok(const pt_launch_report * report)
{
  return report != nullptr && report->report.all_ok() ? 1 : 0;
}

void pt_launch_report_free(pt_launch_report * report)
{
  delete report;
}

pt_status pt_trace_cmd_start(
  const char * session_name, const char * const * patterns, uint32_t pattern_count,
  const char * output_dir)
{
  return guarded(
    [&]() {
      pt::orchestration::TraceSettings settings;
      if (session_name != nullptr && *session_name != '\0') {
        settings.session_name = session_name;
      }
      if (pattern_count > 0) {
        settings.events.clear();
        for (uint32_t i = 0; i < pattern_count; ++i) {
          settings.events.emplace_back(patterns[i]);
        }
      }
      if (output_dir != nullptr && *output_dir != '\0') {
        settings.output_dir = output_dir;
      }
      pt::orchestration::trace_cmd_start(settings);
    });
}

pt_status pt_trace_cmd_stop(
  char * session_name, size_t session_name_size,
  uint64_t * events, uint64_t * dropped, uint32_t * file_count)
{
  return guarded(
    [&]() {
      const auto summary = pt::orchestration::trace_cmd_stop();
      copy_string(summary.session_name, session_name, session_name_size);
      if (events != nullptr) {
        *events = summary.events;
      }
      if (dropped != nullptr) {
        *dropped = summary.dropped;
      }
      if (file_count != nullptr) {
        *file_count = static_cast<uint32_t>(summary.file_count);
      }
    });
}

pt_status pt_trace_cmd_status(
  int * active, char * session_name, size_t session_name_size,
  char * patterns_joined, size_t patterns_size)
{
  if (active == nullptr) {
    return invalid_argument("active must not be NULL");
  }
  return guarded(
    [&]() {
      const auto settings = pt::orchestration::trace_cmd_status();
      *active = settings.has_value() ? 1 : 0;
      if (settings) {
        copy_string(settings->session_name, session_name, session_name_size);
        std::string joined;
        for (std::size_t i = 0; i < settings->events.size(); ++i) {
          if (i > 0) {
            joined += ",";
          }
          joined += settings->events[i];
        }
        copy_string(joined, patterns_joined, patterns_size);
      }
    });
}

pt_status pt_analyze(
  const char * const * inputs, uint32_t input_count, const char * report_dir,
  const char * timer_symbol)
{
  if (inputs == nullptr || input_count == 0 || report_dir == nullptr) {
    return invalid_argument("inputs and report_dir are required");
  }
  return guarded(
    [&]() {
      std::vector<std::vector<pt::TraceEvent>> streams;
      streams.reserve(input_count);
      for (uint32_t i = 0; i < input_count; ++i) {
        streams.push_back(pt::io::read_trace(inputs[i]).events);
      }
      const auto merged = pt::io::merge_events(streams);
      std::optional<std::string> symbol;
      if (timer_symbol != nullptr && *timer_symbol != '\0') {
        symbol = timer_symbol;
      }
      const auto report = pt::analysis::analyze(merged, symbol);
      pt::analysis::write_report(report_dir, report);
    });
}

pt_status pt_bench_run(const pt_bench_opts * opts)
{
  return guarded(
    [&]() {
      pt::bench::BenchConfig config;
      if (opts != nullptr) {
        if (opts->rate_count > 0) {
          config.rates_hz.assign(opts->rates_hz, opts->rates_hz + opts->rate_count);
        }
        if (opts->size_count > 0) {
          config.sizes_kib.assign(opts->sizes_kib, opts->sizes_kib + opts->size_count);
        }
        if (opts->duration_s > 0) {
          config.duration_s = opts->duration_s;
        }
        if (opts->warmup_s > 0) {
          config.warmup_s = opts->warmup_s;
        }
        if (opts->out_dir != nullptr) {
          config.out_dir = opts->out_dir;
        }
        config.attempt_realtime = opts->attempt_realtime != 0;
      }
      pt::bench::run_bench(config);
    });
}

}  // extern "C"
