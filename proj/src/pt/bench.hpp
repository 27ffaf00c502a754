#ifndef PT__BENCH_HPP_
#define PT__BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "pt/recorder.hpp"

namespace pt::bench
{

enum class TracingMode : uint8_t {off, all};

struct BenchConfig
{
  std::vector<int> rates_hz = {100, 500, 1000, 2000};
  std::vector<int> sizes_kib = {1, 32, 64, 256};
  double duration_s = 30.0;
  double warmup_s = 2.0;  // discarded, must be < duration_s
  std::filesystem::path out_dir = "bench-out";
  bool attempt_realtime = true;
};

struct CellResult
{
  int rate_hz = 0;
  int size_kib = 0;
  TracingMode tracing = TracingMode::off;
  std::vector<uint64_t> latencies_ns;  // post-warmup samples
  double mean_ns = 0.0;
  double std_ns = 0.0;
  uint64_t p50_ns = 0;
  uint64_t p99_ns = 0;
  bool overrun = false;  // publisher could not sustain the rate; cell invalid
  uint64_t late_publishes = 0;  // wakes more than one period behind schedule
  uint64_t published = 0;
  uint64_t delivered = 0;
  uint64_t trace_events = 0;           // tracing=all only
  uint64_t trace_callback_starts = 0;  // tracing=all only
  uint64_t trace_dropped = 0;          // tracing=all only
};

/// One benchmark cell: one publisher node and one subscription node in this
/// process, the publisher paced at rate_hz for duration_s. Latency is
/// publisher pre-publish clock read (embedded in the message) to callback
/// entry, measured the same way with tracing off or on.
CellResult run_cell(
  int rate_hz, int size_kib, TracingMode tracing, double duration_s, double warmup_s,
  const std::filesystem::path & trace_dir);

struct CellOverhead
{
  int rate_hz = 0;
  int size_kib = 0;
  double absolute_ns = 0.0;  // mean_traced - mean_untraced
  double relative = 0.0;     // absolute / mean_untraced
};

/// Throws Error{cell_mismatch} unless the cells share (rate, size) and are an
/// (untraced, traced) pair.
CellOverhead overhead(const CellResult & untraced, const CellResult & traced);

struct OverheadResult
{
  std::vector<CellOverhead> cells;
  // pooled mean-subtracted distributions, per condition
  double untraced_mean_ns = 0.0;
  double traced_mean_ns = 0.0;
  double untraced_iqr_ns[2] = {0.0, 0.0};
  double traced_iqr_ns[2] = {0.0, 0.0};
  std::size_t untraced_count = 0;
  std::size_t traced_count = 0;
};

/// Subtracts each pair's untraced mean from every latency in both sets and
/// pools across cells, so higher rates weigh in with their larger sample
/// counts. Throws Error{empty_input}.
OverheadResult aggregate(std::span<const std::pair<CellResult, CellResult>> cells);

struct BenchRun
{
  std::vector<std::pair<CellResult, CellResult>> cells;  // (untraced, traced)
  OverheadResult overall;
};

/// Full grid, untraced and traced per cell, sequentially; writes bench.json
/// and bench.csv into config.out_dir.
BenchRun run_bench(const BenchConfig & config);

/// Median cost of one emit call, taken over per-batch means (64 emits per
/// batch) so the clock reads stay out of the figure.
double measure_emit_cost_ns(Backend backend, std::size_t total_emits);

/// SCHED_FIFO at max priority; false (with a one-line warning) without the
/// privilege.
bool try_enable_realtime();

uint64_t percentile_nearest_rank(std::span<const uint64_t> sorted, double fraction);

}  // namespace pt::bench

#endif  // PT__BENCH_HPP_
