#include "pt/bench.hpp"

#include <sched.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pt/analysis.hpp"
#include "pt/clock.hpp"
#include "pt/error.hpp"
#include "pt/runtime.hpp"
#include "pt/trace_io.hpp"

namespace pt::bench
{

namespace
{

constexpr uint32_t kQueueDepth = 4096;
constexpr char kTopic[] = "bench/data";

void sleep_until_ns(uint64_t deadline_ns)
{
  timespec ts;
  ts.tv_sec = static_cast<time_t>(deadline_ns / 1000000000ull);
  ts.tv_nsec = static_cast<long>(deadline_ns % 1000000000ull);
  while (clock_nanosleep(CLOCK_MONOTONIC, TIMER_ABSTIME, &ts, nullptr) == EINTR) {
  }
}

std::string cell_name(int rate_hz, int size_kib)
{
  return "r" + std::to_string(rate_hz) + "-s" + std::to_string(size_kib);
}

double mean_of(std::span<const double> values)
{
  double sum = 0.0;
  for (const double value : values) {
    sum += value;
  }
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double percentile_sorted(std::span<const double> sorted, double fraction)
{
  if (sorted.empty()) {
    return 0.0;
  }
  const auto rank = static_cast<std::size_t>(
    std::ceil(fraction * static_cast<double>(sorted.size())));
  return sorted[rank == 0 ? 0 : rank - 1];
}

}  // namespace

uint64_t percentile_nearest_rank(std::span<const uint64_t> sorted, double fraction)
{
  if (sorted.empty()) {
    return 0;
  }
  const auto rank = static_cast<std::size_t>(
    std::ceil(fraction * static_cast<double>(sorted.size())));
  return sorted[rank == 0 ? 0 : rank - 1];
}

bool try_enable_realtime()
{
  const int max_priority = sched_get_priority_max(SCHED_FIFO);
  if (max_priority <= 0) {
    std::fprintf(
      stderr,
      "pt bench: real-time scheduling disabled by the kernel configuration, "
      "using default policy\n");
    return false;
  }
  sched_param param{};
  param.sched_priority = max_priority;
  if (sched_setscheduler(0, SCHED_FIFO, &param) != 0) {
    std::fprintf(
      stderr, "pt bench: real-time scheduling unavailable (%s), using default policy\n",
      std::strerror(errno));
    return false;
  }
  return true;
}

CellResult run_cell(
  int rate_hz, int size_kib, TracingMode tracing, double duration_s, double warmup_s,
  const std::filesystem::path & trace_dir)
{
  if (rate_hz <= 0 || size_kib <= 0 || warmup_s >= duration_s) {
    throw Error(ErrorCode::invalid_config, "bad bench cell parameters");
  }

  CellResult result;
  result.rate_hz = rate_hz;
  result.size_kib = size_kib;
  result.tracing = tracing;

  const uint64_t expected_messages =
    static_cast<uint64_t>(static_cast<double>(rate_hz) * duration_s) + 16;

  std::filesystem::path trace_path;
  std::unique_ptr<Session> session;
  if (tracing == TracingMode::all) {
    std::filesystem::create_directories(trace_dir);
    trace_path = trace_dir / ("cell-" + cell_name(rate_hz, size_kib) + ".ptrc");
    SessionConfig config;
    config.session_name = "bench";
    config.enabled_patterns = {"pt:*"};
    // executor thread records up to 8 events per message plus idle waits
    config.buffer_capacity_events =
      std::max<std::size_t>(1 << 16, expected_messages * 9 + 8192);
    config.output_path = trace_path;
    config.backend = Backend::ring;
    session = session_start(std::move(config));
  }

  {
    runtime::Context context;
    auto pub_node = context.create_node("bench_pub");
    auto sub_node = context.create_node("bench_sub");
    auto publisher = pub_node->create_publisher(kTopic, kQueueDepth);

    struct Sample
    {
      uint64_t publish_ns;
      uint64_t latency_ns;
    };
    std::vector<Sample> samples;
    samples.reserve(expected_messages);
    std::atomic<uint64_t> delivered{0};

    sub_node->create_subscription(
      kTopic, kQueueDepth,
      [&samples, &delivered](const runtime::Message & message) {
        const uint64_t arrival_ns = monotonic_now_ns();
        uint64_t publish_ns = 0;
        std::memcpy(&publish_ns, message.data->data(), sizeof(publish_ns));
        samples.push_back({publish_ns, arrival_ns - publish_ns});
        delivered.fetch_add(1, std::memory_order_release);
      },
      "bench_on_msg");

    runtime::Executor executor = runtime::Executor::single_threaded();
    executor.add_node(sub_node);
    std::atomic<bool> stop{false};
    std::thread spinner([&executor, &stop]() {
        runtime::SpinOptions options;
        options.shutdown_flag = &stop;
        options.wait_timeout = std::chrono::milliseconds(20);
        executor.spin(options);
      });

    std::vector<uint8_t> payload(static_cast<std::size_t>(size_kib) * 1024);
    const uint64_t period_ns = 1000000000ull / static_cast<uint64_t>(rate_hz);
    const uint64_t start_ns = monotonic_now_ns();
    const uint64_t end_ns = start_ns + static_cast<uint64_t>(duration_s * 1e9);
    uint64_t next_ns = start_ns;
    uint64_t missed = 0;

    while (next_ns < end_ns) {
      sleep_until_ns(next_ns);
      const uint64_t publish_ns = monotonic_now_ns();
      if (publish_ns > next_ns + period_ns) {
        ++missed;
      }
      std::memcpy(payload.data(), &publish_ns, sizeof(publish_ns));
      publisher->publish(payload);
      ++result.published;
      next_ns += period_ns;
    }
    result.late_publishes = missed;
    // overrun means the schedule slipped and stayed slipped: the last publish
    // trails its slot by more than scheduling noise can explain
    const uint64_t backlog_budget = std::max<uint64_t>(
      static_cast<uint64_t>(duration_s * 1e9 * 0.02), 25 * period_ns);
    result.overrun = monotonic_now_ns() > end_ns + backlog_budget;

    // drain: give the executor a moment to finish the queue
    const uint64_t drain_deadline = monotonic_now_ns() + 2000000000ull;
    while (delivered.load(std::memory_order_acquire) < result.published &&
      monotonic_now_ns() < drain_deadline)
    {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    stop.store(true, std::memory_order_release);
    executor.notify();
    spinner.join();
    result.delivered = delivered.load(std::memory_order_acquire);

    const uint64_t warmup_end_ns = start_ns + static_cast<uint64_t>(warmup_s * 1e9);
    for (const auto & sample : samples) {
      if (sample.publish_ns >= warmup_end_ns) {
        result.latencies_ns.push_back(sample.latency_ns);
      }
    }
  }

  if (session) {
    const DropStats stats = session->stop();
    result.trace_dropped = stats.dropped_event_count;
    const auto trace = io::read_trace(trace_path);
    result.trace_events = trace.events.size();
    for (const auto & event : trace.events) {
      if (event.tracepoint == TracepointId::callback_start) {
        ++result.trace_callback_starts;
      }
    }
  }

  const auto summary = analysis::summarize(result.latencies_ns);
  result.mean_ns = summary.mean;
  result.std_ns = summary.std_dev;
  std::vector<uint64_t> sorted = result.latencies_ns;
  std::sort(sorted.begin(), sorted.end());
  result.p50_ns = percentile_nearest_rank(sorted, 0.50);
  result.p99_ns = percentile_nearest_rank(sorted, 0.99);
  return result;
}

CellOverhead overhead(const CellResult & untraced, const CellResult & traced)
{
  if (untraced.rate_hz != traced.rate_hz || untraced.size_kib != traced.size_kib) {
    throw Error(
            ErrorCode::cell_mismatch,
            cell_name(untraced.rate_hz, untraced.size_kib) + " vs " +
            cell_name(traced.rate_hz, traced.size_kib));
  }
  if (untraced.tracing != TracingMode::off || traced.tracing != TracingMode::all) {
    throw Error(ErrorCode::cell_mismatch, "expected an (untraced, traced) pair");
  }
  CellOverhead result;
  result.rate_hz = untraced.rate_hz;
  result.size_kib = untraced.size_kib;
  result.absolute_ns = traced.mean_ns - untraced.mean_ns;
  result.relative = untraced.mean_ns > 0.0 ? result.absolute_ns / untraced.mean_ns : 0.0;
  return result;
}

OverheadResult aggregate(std::span<const std::pair<CellResult, CellResult>> cells)
{
  if (cells.empty()) {
    throw Error(ErrorCode::empty_input, "no cell pairs to aggregate");
  }
  OverheadResult result;
  std::vector<double> untraced_pool;
  std::vector<double> traced_pool;
  for (const auto & [untraced, traced] : cells) {
    result.cells.push_back(overhead(untraced, traced));
    const double base_mean = untraced.mean_ns;
    for (const uint64_t latency : untraced.latencies_ns) {
      untraced_pool.push_back(static_cast<double>(latency) - base_mean);
    }
    for (const uint64_t latency : traced.latencies_ns) {
      traced_pool.push_back(static_cast<double>(latency) - base_mean);
    }
  }
  result.untraced_count = untraced_pool.size();
  result.traced_count = traced_pool.size();
  result.untraced_mean_ns = mean_of(untraced_pool);
  result.traced_mean_ns = mean_of(traced_pool);
  std::sort(untraced_pool.begin(), untraced_pool.end());
  std::sort(traced_pool.begin(), traced_pool.end());
  result.untraced_iqr_ns[0] = percentile_sorted(untraced_pool, 0.25);
  result.untraced_iqr_ns[1] = percentile_sorted(untraced_pool, 0.75);
  result.traced_iqr_ns[0] = percentile_sorted(traced_pool, 0.25);
  result.traced_iqr_ns[1] = percentile_sorted(traced_pool, 0.75);
  return result;
}

namespace
{

nlohmann::json cell_json(const CellResult & cell)
{
  return {
    {"cell", cell_name(cell.rate_hz, cell.size_kib)},
    {"rate_hz", cell.rate_hz},
    {"size_kib", cell.size_kib},
    {"tracing", cell.tracing == TracingMode::all ? "all" : "off"},
    {"samples", cell.latencies_ns.size()},
    {"mean_ns", cell.mean_ns},
    {"std_ns", cell.std_ns},
    {"p50_ns", cell.p50_ns},
    {"p99_ns", cell.p99_ns},
    {"published", cell.published},
    {"delivered", cell.delivered},
    {"overrun", cell.overrun},
    {"late_publishes", cell.late_publishes},
    {"trace_events", cell.trace_events},
    {"trace_callback_starts", cell.trace_callback_starts},
    {"trace_dropped", cell.trace_dropped},
  };
}

void write_outputs(const BenchConfig & config, const BenchRun & run)
{
  std::filesystem::create_directories(config.out_dir);

  nlohmann::json doc;
  doc["config"] = {
    {"rates_hz", config.rates_hz},
    {"sizes_kib", config.sizes_kib},
    {"duration_s", config.duration_s},
    {"warmup_s", config.warmup_s},
  };
  doc["cells"] = nlohmann::json::array();
  for (const auto & [untraced, traced] : run.cells) {
    doc["cells"].push_back(cell_json(untraced));
    doc["cells"].push_back(cell_json(traced));
  }
  doc["overhead"] = nlohmann::json::array();
  for (const auto & cell : run.overall.cells) {
    doc["overhead"].push_back(
      {{"cell", cell_name(cell.rate_hz, cell.size_kib)},
        {"absolute_ns", cell.absolute_ns},
        {"relative", cell.relative}});
  }
  doc["aggregate"] = {
    {"untraced_mean_ns", run.overall.untraced_mean_ns},
    {"traced_mean_ns", run.overall.traced_mean_ns},
    {"untraced_iqr_ns", {run.overall.untraced_iqr_ns[0], run.overall.untraced_iqr_ns[1]}},
    {"traced_iqr_ns", {run.overall.traced_iqr_ns[0], run.overall.traced_iqr_ns[1]}},
    {"untraced_samples", run.overall.untraced_count},
    {"traced_samples", run.overall.traced_count},
  };

  {
    std::ofstream out(config.out_dir / "bench.json", std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::io_failure, "cannot write bench.json");
    }
    out << doc.dump(2) << '\n';
  }

  std::ofstream csv(config.out_dir / "bench.csv", std::ios::trunc);
  if (!csv) {
    throw Error(ErrorCode::io_failure, "cannot write bench.csv");
  }
  csv << "cell,rate_hz,size_kib,tracing,mean_ns,std_ns,p50_ns,p99_ns\n";
  const auto row = [&csv](const CellResult & cell) {
      csv << cell_name(cell.rate_hz, cell.size_kib) << ',' << cell.rate_hz << ','
          << cell.size_kib << ',' << (cell.tracing == TracingMode::all ? "all" : "off") << ','
          << cell.mean_ns << ',' << cell.std_ns << ',' << cell.p50_ns << ','
          << cell.p99_ns << '\n';
    };
  for (const auto & [untraced, traced] : run.cells) {
    row(untraced);
    row(traced);
  }
}

}  // namespace

BenchRun run_bench(const BenchConfig & config)
{
  if (config.rates_hz.empty() || config.sizes_kib.empty()) {
    throw Error(ErrorCode::invalid_config, "rates and sizes must be non-empty");
  }
  if (config.warmup_s >= config.duration_s) {
    throw Error(ErrorCode::invalid_config, "warmup_s must be < duration_s");
  }
  if (config.attempt_realtime) {
    try_enable_realtime();
  }

  BenchRun run;
  const auto trace_dir = config.out_dir / "traces";
  for (const int size_kib : config.sizes_kib) {
    for (const int rate_hz : config.rates_hz) {
      auto untraced = run_cell(
        rate_hz, size_kib, TracingMode::off, config.duration_s, config.warmup_s, trace_dir);
      auto traced = run_cell(
        rate_hz, size_kib, TracingMode::all, config.duration_s, config.warmup_s, trace_dir);
      run.cells.emplace_back(std::move(untraced), std::move(traced));
    }
  }
  run.overall = aggregate(run.cells);
  write_outputs(config, run);
  return run;
}

double measure_emit_cost_ns(Backend backend, std::size_t total_emits)
{
  const auto path = std::filesystem::temp_directory_path() /
    ("pt-emit-cost-" + std::to_string(::getpid()) + ".ptrc");
  SessionConfig config;
  config.session_name = "emit-cost";
  config.enabled_patterns = {"pt:*"};
  config.buffer_capacity_events =
    backend == Backend::ring ? total_emits + 1024 : std::size_t{65536};
  config.output_path = path;
  config.backend = backend;
  auto session = session_start(std::move(config));

  const FieldValue payload[] = {Handle{1}};
  constexpr std::size_t kBatch = 64;
  const std::size_t batches = std::max<std::size_t>(1, total_emits / kBatch);
  std::vector<double> batch_means;
  batch_means.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const uint64_t t0 = monotonic_now_ns();
    for (std::size_t i = 0; i < kBatch; ++i) {
      emit_event(TracepointId::callback_end, payload);
    }
    const uint64_t t1 = monotonic_now_ns();
    batch_means.push_back(static_cast<double>(t1 - t0) / static_cast<double>(kBatch));
  }
  session->stop();
  std::filesystem::remove(path);

  std::sort(batch_means.begin(), batch_means.end());
  return batch_means[batch_means.size() / 2];
}

}  // namespace pt::bench
