#ifndef PT__ANALYSIS_HPP_
#define PT__ANALYSIS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pt/trace_model.hpp"

namespace pt::analysis
{

struct NodeInfo
{
  Handle handle;
  Handle transport_handle;
  std::string name;
  std::string node_namespace;
  std::optional<Handle> state_machine;
};

struct PublisherInfo
{
  Handle handle;
  std::optional<Handle> transport_handle;
  std::optional<uint64_t> gid;
  Handle node;
  std::string topic;
  uint64_t queue_depth = 0;
};

struct SubscriptionInfo
{
  Handle handle;
  std::optional<Handle> transport_handle;
  std::optional<uint64_t> gid;
  Handle node;
  std::string topic;
  uint64_t queue_depth = 0;
  std::optional<Handle> api_object;
  std::optional<Handle> callback;
  std::string symbol;
};

struct TimerInfo
{
  Handle handle;
  int64_t period_ns = 0;
  std::optional<Handle> callback;
  std::string symbol;
  std::optional<Handle> node;
};

struct ServiceInfo
{
  Handle handle;
  Handle node;
  Handle transport_handle;
  std::string name;
  std::optional<Handle> callback;
  std::string symbol;
};

struct ClientInfo
{
  Handle handle;
  Handle node;
  Handle transport_handle;
  std::string name;
};

enum class CallbackOwnerKind : uint8_t {subscription, timer, service};

struct CallbackOwner
{
  CallbackOwnerKind kind;
  Handle owner;
};

/// The system model joined from initialization events.
struct SystemModel
{
  std::map<Handle, NodeInfo> nodes;
  std::map<Handle, PublisherInfo> publishers;
  std::map<Handle, SubscriptionInfo> subscriptions;
  std::map<Handle, TimerInfo> timers;
  std::map<Handle, ServiceInfo> services;
  std::map<Handle, ClientInfo> clients;
  std::map<Handle, Handle> lifecycle_machines;  // state machine -> node
  std::map<Handle, CallbackOwner> callback_owners;
  std::map<Handle, Handle> transport_subscriptions;  // transport handle -> subscription
  std::vector<std::string> diagnostics;  // partial joins, never fatal
};

/// Joins initialization events by shared handles (the transport->core link
/// uses same-thread adjacency since those payloads share none). Throws
/// Error{inconsistent_trace} when one handle is initialized twice with
/// conflicting payloads; partial chains become diagnostics.
SystemModel build_model(std::span<const TraceEvent> events);

struct CallbackInstance
{
  Handle callback;
  uint64_t start_ns = 0;
  uint64_t end_ns = 0;
  uint32_t thread_id = 0;

  bool operator==(const CallbackInstance &) const = default;
};

struct CallbackInstanceResult
{
  std::vector<CallbackInstance> instances;
  std::vector<CallbackInstance> unmatched_starts;  // end_ns = 0
};

/// Pairs each callback_start with the next callback_end of the same callback
/// handle on the same thread.
CallbackInstanceResult callback_instances(
  const SystemModel & model, std::span<const TraceEvent> events);

struct Summary
{
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation
  uint64_t min = 0;
  uint64_t max = 0;
};

Summary summarize(std::span<const uint64_t> values);

struct TimerStats
{
  Handle timer;
  std::vector<uint64_t> intervals_ns;  // successive callback_start differences
  std::vector<uint64_t> interval_starts_ns;  // start of the later instance
  std::vector<uint64_t> durations_ns;
  std::vector<uint64_t> duration_starts_ns;  // instance starts
  Summary interval_summary;
  Summary duration_summary;
};

/// Throws Error{unknown_timer} when the timer is not in the model.
TimerStats timer_stats(
  const SystemModel & model, std::span<const TraceEvent> events, Handle timer);

struct LatencySample
{
  Handle publisher;
  Handle subscription;
  uint64_t publish_ns = 0;        // api_publish timestamp
  uint64_t callback_start_ns = 0;
  uint64_t latency_ns = 0;

  bool operator==(const LatencySample &) const = default;
};

struct LatencyResult
{
  std::vector<LatencySample> samples;
  std::vector<std::string> diagnostics;  // publishes that matched no delivery
};

/// End-to-end message latency: api_publish -> matching delivery's
/// callback_start, one sample per delivering subscription.
LatencyResult message_latencies(
  const SystemModel & model, std::span<const TraceEvent> events);

struct LinkageRecord
{
  CallbackInstance instance;
  std::map<std::string, Handle> inputs;  // topic -> latest delivered message
  std::optional<Handle> output;          // api_publish within the instance
};

/// Input-output linkage for a periodic callback that consumes the last
/// message per subscribed topic and publishes a result.
std::vector<LinkageRecord> io_linkage(
  const SystemModel & model, std::span<const TraceEvent> events, Handle timer);

struct AnalysisReport
{
  SystemModel model;
  CallbackInstanceResult callbacks;
  LatencyResult latencies;
  std::vector<TimerStats> timers;  // every model timer, ascending handle
  std::vector<LinkageRecord> linkage;  // only when a linkage timer was given
};

AnalysisReport analyze(
  std::span<const TraceEvent> events, std::optional<std::string> linkage_timer_symbol = {});

/// Writes report.json and samples.csv; byte-identical for identical inputs.
void write_report(const std::filesystem::path & directory, const AnalysisReport & report);

}  // namespace pt::analysis

#endif  // PT__ANALYSIS_HPP_
