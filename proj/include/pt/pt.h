/* pt — tracing toolkit for the layered publish-subscribe runtime.
 *
 * C API of the shared library. All functions return pt_status; objects are
 * opaque handles created and destroyed through this interface. Unless noted,
 * functions are not thread-safe for the same object; pt_publish and the
 * instrumentation behind it are safe from any thread.
 */
#ifndef PT_PT_H_
#define PT_PT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pt_status
{
  PT_OK = 0,
  PT_ERR_INVALID_ARGUMENT,
  PT_ERR_SCHEMA_MISMATCH,
  PT_ERR_MALFORMED_PAYLOAD,
  PT_ERR_INVALID_CONFIG,
  PT_ERR_INVALID_PATTERN,
  PT_ERR_ALREADY_RECORDING,
  PT_ERR_ALREADY_STOPPED,
  PT_ERR_FLUSH_FAILURE,
  PT_ERR_IO,
  PT_ERR_TRUNCATED_FILE,
  PT_ERR_BAD_MAGIC,
  PT_ERR_UNSUPPORTED_VERSION,
  PT_ERR_UNKNOWN_TRACEPOINT,
  PT_ERR_DUPLICATE_NODE_NAME,
  PT_ERR_UNKNOWN_NODE,
  PT_ERR_INACTIVE_LIFECYCLE_NODE,
  PT_ERR_INVALID_PERIOD,
  PT_ERR_UNKNOWN_SERVICE,
  PT_ERR_ILLEGAL_TRANSITION,
  PT_ERR_NO_NODES,
  PT_ERR_PARSE,
  PT_ERR_SCHEMA,
  PT_ERR_SPAWN_FAILURE,
  PT_ERR_INCONSISTENT_TRACE,
  PT_ERR_UNKNOWN_TIMER,
  PT_ERR_CELL_MISMATCH,
  PT_ERR_EMPTY_INPUT,
  PT_ERR_OVERRUN,
  PT_ERR_NO_ACTIVE_SESSION,
  PT_ERR_INTERNAL
} pt_status;

const char * pt_status_str(pt_status status);

/* Detail message of the last failing call on this thread. */
const char * pt_last_error(void);

const char * pt_version(void);

/* ---- tracepoint catalog ---- */

typedef struct pt_tracepoint_info
{
  const char * name;
  const char * layer;     /* "api" | "core" | "transport" */
  char kind;              /* 'I' initialization, 'R' runtime */
  char hot_path;          /* 'P' publish, 'S' receive, '-' none */
  uint32_t field_count;
} pt_tracepoint_info;

uint32_t pt_catalog_size(void);
pt_status pt_catalog_get(uint32_t index, pt_tracepoint_info * out);

/* ---- recording sessions ---- */

typedef struct pt_session pt_session;

typedef struct pt_session_opts
{
  const char * session_name;
  const char * const * patterns;   /* "pt:<name>", trailing '*' wildcard */
  uint32_t pattern_count;          /* 0 means pt:* */
  uint32_t buffer_capacity_events; /* per thread, 0 means default 65536 */
  const char * output_path;
  int ring_backend;                /* nonzero: ring buffer; zero: null backend */
} pt_session_opts;

pt_status pt_session_start(const pt_session_opts * opts, pt_session ** out);

/* Session from PT_TRACE_* environment (or the pt trace control file);
 * *out is NULL with PT_OK when tracing is disabled. */
pt_status pt_session_start_from_env(pt_session ** out);

pt_status pt_session_set_enabled(
  pt_session * session, const char * pattern, int on, uint32_t * matched);
pt_status pt_session_stop(
  pt_session * session, uint64_t * total_emitted, uint64_t * dropped);
void pt_session_free(pt_session * session);

/* ---- runtime ----
 *
 * Nodes and the objects created from them belong to their pt_context and are
 * released by pt_context_free; executors and sessions have explicit free
 * functions. Object creation is an initialization-phase activity: creating
 * objects while an executor is spinning is unsupported. */

typedef struct pt_context pt_context;
typedef struct pt_node pt_node;
typedef struct pt_publisher pt_publisher;
typedef struct pt_subscription pt_subscription;
typedef struct pt_timer pt_timer;
typedef struct pt_service pt_service;
typedef struct pt_client pt_client;
typedef struct pt_executor pt_executor;

pt_status pt_context_create(pt_context ** out);
void pt_context_free(pt_context * context);

pt_status pt_node_create(
  pt_context * context, const char * name, const char * ns, pt_node ** out);
pt_status pt_lifecycle_node_create(
  pt_context * context, const char * name, const char * ns, pt_node ** out);

pt_status pt_publisher_create(
  pt_node * node, const char * topic, uint32_t queue_depth, pt_publisher ** out);
pt_status pt_publish(pt_publisher * publisher, const uint8_t * data, size_t size);

typedef void (* pt_subscription_cb)(const uint8_t * data, size_t size, void * user);
pt_status pt_subscription_create(
  pt_node * node, const char * topic, uint32_t queue_depth,
  pt_subscription_cb callback, void * user, const char * symbol, pt_subscription ** out);

typedef void (* pt_timer_cb)(void * user);
pt_status pt_timer_create(
  pt_node * node, int64_t period_ns, pt_timer_cb callback, void * user,
  const char * symbol, pt_timer ** out);

/* Service callbacks copy their reply through pt_service_reply_set. */
typedef struct pt_service_reply pt_service_reply;
void pt_service_reply_set(pt_service_reply * reply, const uint8_t * data, size_t size);
typedef void (* pt_service_cb)(
  const uint8_t * request, size_t size, pt_service_reply * reply, void * user);
pt_status pt_service_create(
  pt_node * node, const char * name, pt_service_cb callback, void * user,
  const char * symbol, pt_service ** out);

pt_status pt_client_create(pt_node * node, const char * name, pt_client ** out);
/* Blocks for the response; *response is malloc'd, release with pt_free. */
pt_status pt_client_call(
  pt_client * client, const uint8_t * request, size_t size,
  uint8_t ** response, size_t * response_size);

/* Applies configure/activate/deactivate/cleanup/shutdown; *new_state (may be
 * NULL) points at a static state name. */
pt_status pt_lifecycle_transition(
  pt_node * node, const char * transition, const char ** new_state);

pt_status pt_executor_create(pt_context * context, uint32_t threads, pt_executor ** out);
void pt_executor_free(pt_executor * executor);
pt_status pt_executor_add_node(pt_executor * executor, pt_node * node);
/* Spin until n callback executions completed. */
pt_status pt_executor_spin_work(pt_executor * executor, uint64_t n);
/* Spin until the deadline (and keep serving work until then). */
pt_status pt_executor_spin_for(pt_executor * executor, int64_t duration_ns);
/* Spin until pt_executor_shutdown is called from another thread/callback. */
pt_status pt_executor_spin(pt_executor * executor);
void pt_executor_shutdown(pt_executor * executor);

void pt_free(void * ptr);

/* ---- trace files ---- */

pt_status pt_trace_file_stats(
  const char * path, uint64_t * event_count, uint64_t * dropped_count);
/* Newline-delimited JSON; out_path "-" writes to stdout. */
pt_status pt_trace_export_json(const char * path, const char * out_path);

/* ---- orchestration ---- */

typedef struct pt_launch_report pt_launch_report;

/* Parses the launch JSON file and runs it; node fixtures are spawned as
 * "<runner> run-fixture <fixture> <args...>". */
pt_status pt_launch_file(
  const char * launch_path, const char * runner, pt_launch_report ** out);
uint32_t pt_launch_report_process_count(const pt_launch_report * report);
pt_status pt_launch_report_process(
  const pt_launch_report * report, uint32_t index, const char ** fixture,
  int * exit_code, const char ** trace_file, int * trace_valid);
uint64_t pt_launch_report_total_events(const pt_launch_report * report);
uint64_t pt_launch_report_total_dropped(const pt_launch_report * report);
int pt_launch_report_all_ok(const pt_launch_report * report);
void pt_launch_report_free(pt_launch_report * report);

/* pt trace start/stop/status against the session-control file. */
pt_status pt_trace_cmd_start(
  const char * session_name, const char * const * patterns, uint32_t pattern_count,
  const char * output_dir);
pt_status pt_trace_cmd_stop(
  char * session_name, size_t session_name_size,
  uint64_t * events, uint64_t * dropped, uint32_t * file_count);
/* PT_OK and *active=0 when no session is active. */
pt_status pt_trace_cmd_status(
  int * active, char * session_name, size_t session_name_size,
  char * patterns_joined, size_t patterns_size);

/* ---- analysis ---- */

/* Reads and merges the input traces, reconstructs the model, computes the
 * metrics and writes report.json and samples.csv into report_dir.
 * timer_symbol (optional) selects the timer for input-output linkage. */
pt_status pt_analyze(
  const char * const * inputs, uint32_t input_count, const char * report_dir,
  const char * timer_symbol);

/* ---- benchmark ---- */

typedef struct pt_bench_opts
{
  const int * rates_hz;
  uint32_t rate_count;      /* 0: default grid 100,500,1000,2000 */
  const int * sizes_kib;
  uint32_t size_count;      /* 0: default grid 1,32,64,256 */
  double duration_s;        /* 0: default 30 */
  double warmup_s;          /* 0: default 2 */
  const char * out_dir;     /* NULL: "bench-out" */
  int attempt_realtime;
} pt_bench_opts;

pt_status pt_bench_run(const pt_bench_opts * opts);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* PT_PT_H_ */
