#include "pt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pt/error.hpp"

namespace pt::analysis
{

namespace
{

Handle as_handle(const FieldValue & value)
{
  return std::get<Handle>(value);
}

uint64_t as_uint(const FieldValue & value)
{
  return std::get<uint64_t>(value);
}

int64_t as_int(const FieldValue & value)
{
  return std::get<int64_t>(value);
}

const std::string & as_text(const FieldValue & value)
{
  return std::get<std::string>(value);
}

[[noreturn]] void conflict(std::string_view what, Handle handle)
{
  throw Error(
          ErrorCode::inconsistent_trace,
          std::string(what) + " handle " + std::to_string(handle.value) +
          " initialized twice with conflicting payloads");
}

struct PendingTransportInit
{
  Handle handle;
  uint64_t gid = 0;
  bool valid = false;
};

}  // namespace

SystemModel build_model(std::span<const TraceEvent> events)
{
  SystemModel model;
  std::map<Handle, Handle> api_object_to_subscription;
  std::unordered_map<uint32_t, PendingTransportInit> pending_transport_pub;
  std::unordered_map<uint32_t, PendingTransportInit> pending_transport_sub;

  const auto diag = [&model](std::string text) {
      model.diagnostics.push_back(std::move(text));
    };

  for (const auto & event : events) {
    switch (event.tracepoint) {
      case TracepointId::core_node_init: {
          NodeInfo info;
          info.handle = as_handle(event.payload[0]);
          info.transport_handle = as_handle(event.payload[1]);
          info.name = as_text(event.payload[2]);
          info.node_namespace = as_text(event.payload[3]);
          const auto [it, inserted] = model.nodes.emplace(info.handle, info);
          if (!inserted) {
            if (it->second.name != info.name ||
              it->second.node_namespace != info.node_namespace)
            {
              conflict("node", info.handle);
            }
            diag("duplicate core_node_init for handle " + std::to_string(info.handle.value));
          }
          break;
        }
      case TracepointId::core_lifecycle_state_machine_init: {
          const Handle node = as_handle(event.payload[0]);
          const Handle sm = as_handle(event.payload[1]);
          model.lifecycle_machines[sm] = node;
          const auto it = model.nodes.find(node);
          if (it != model.nodes.end()) {
            it->second.state_machine = sm;
          } else {
            diag(
              "lifecycle state machine " + std::to_string(sm.value) +
              " references unknown node " + std::to_string(node.value));
          }
          break;
        }
      case TracepointId::transport_publisher_init: {
          auto & pending = pending_transport_pub[event.thread_id];
          if (pending.valid) {
            diag(
              "transport_publisher_init " + std::to_string(pending.handle.value) +
              " never joined a core_publisher_init");
          }
          pending = {as_handle(event.payload[0]), as_uint(event.payload[1]), true};
          break;
        }
      case TracepointId::core_publisher_init: {
          PublisherInfo info;
          info.handle = as_handle(event.payload[0]);
          info.node = as_handle(event.payload[1]);
          info.topic = as_text(event.payload[2]);
          info.queue_depth = as_uint(event.payload[3]);
          auto & pending = pending_transport_pub[event.thread_id];
          if (pending.valid) {
            info.transport_handle = pending.handle;
            info.gid = pending.gid;
            pending.valid = false;
          } else {
            diag(
              "core_publisher_init " + std::to_string(info.handle.value) +
              " has no preceding transport_publisher_init");
          }
          const auto [it, inserted] = model.publishers.emplace(info.handle, info);
          if (!inserted) {
            if (it->second.topic != info.topic || it->second.node != info.node) {
              conflict("publisher", info.handle);
            }
            diag(
              "duplicate core_publisher_init for handle " + std::to_string(info.handle.value));
          }
          break;
        }
      case TracepointId::transport_subscription_init: {
          auto & pending = pending_transport_sub[event.thread_id];
          if (pending.valid) {
            diag(
              "transport_subscription_init " + std::to_string(pending.handle.value) +
              " never joined a core_subscription_init");
          }
          pending = {as_handle(event.payload[0]), as_uint(event.payload[1]), true};
          break;
        }
      case TracepointId::core_subscription_init: {
          SubscriptionInfo info;
          info.handle = as_handle(event.payload[0]);
          info.node = as_handle(event.payload[1]);
          info.topic = as_text(event.payload[2]);
          info.queue_depth = as_uint(event.payload[3]);
          auto & pending = pending_transport_sub[event.thread_id];
          if (pending.valid) {
            info.transport_handle = pending.handle;
            info.gid = pending.gid;
            pending.valid = false;
          } else {
            diag(
              "core_subscription_init " + std::to_string(info.handle.value) +
              " has no preceding transport_subscription_init");
          }
          const auto [it, inserted] = model.subscriptions.emplace(info.handle, info);
          if (!inserted) {
            if (it->second.topic != info.topic || it->second.node != info.node) {
              conflict("subscription", info.handle);
            }
            diag(
              "duplicate core_subscription_init for handle " +
              std::to_string(info.handle.value));
          } else if (info.transport_handle) {
            model.transport_subscriptions[*info.transport_handle] = info.handle;
          }
          break;
        }
      case TracepointId::api_subscription_init: {
          const Handle sub = as_handle(event.payload[0]);
          const Handle api_object = as_handle(event.payload[1]);
          const auto it = model.subscriptions.find(sub);
          if (it == model.subscriptions.end()) {
            diag(
              "api_subscription_init references unknown subscription " +
              std::to_string(sub.value));
            break;
          }
          it->second.api_object = api_object;
          api_object_to_subscription[api_object] = sub;
          break;
        }
      case TracepointId::api_subscription_callback_added: {
          const Handle api_object = as_handle(event.payload[0]);
          const Handle callback = as_handle(event.payload[1]);
          const auto it = api_object_to_subscription.find(api_object);
          if (it == api_object_to_subscription.end()) {
            diag(
              "api_subscription_callback_added references unknown subscription object " +
              std::to_string(api_object.value));
            break;
          }
          model.subscriptions.at(it->second).callback = callback;
          model.callback_owners[callback] = {CallbackOwnerKind::subscription, it->second};
          break;
        }
      case TracepointId::api_callback_register: {
          const Handle callback = as_handle(event.payload[0]);
          const std::string & symbol = as_text(event.payload[1]);
          const auto it = model.callback_owners.find(callback);
          if (it == model.callback_owners.end()) {
            diag(
              "api_callback_register for unowned callback " + std::to_string(callback.value));
            break;
          }
          switch (it->second.kind) {
            case CallbackOwnerKind::subscription:
              model.subscriptions.at(it->second.owner).symbol = symbol;
              break;
            case CallbackOwnerKind::timer:
              model.timers.at(it->second.owner).symbol = symbol;
              break;
            case CallbackOwnerKind::service:
              model.services.at(it->second.owner).symbol = symbol;
              break;
          }
          break;
        }
      case TracepointId::core_timer_init: {
          TimerInfo info;
          info.handle = as_handle(event.payload[0]);
          info.period_ns = as_int(event.payload[1]);
          const auto [it, inserted] = model.timers.emplace(info.handle, info);
          if (!inserted) {
            if (it->second.period_ns != info.period_ns) {
              conflict("timer", info.handle);
            }
            diag("duplicate core_timer_init for handle " + std::to_string(info.handle.value));
          }
          break;
        }
      case TracepointId::api_timer_callback_added: {
          const Handle timer = as_handle(event.payload[0]);
          const Handle callback = as_handle(event.payload[1]);
          const auto it = model.timers.find(timer);
          if (it == model.timers.end()) {
            diag(
              "api_timer_callback_added references unknown timer " +
              std::to_string(timer.value));
            break;
          }
          it->second.callback = callback;
          model.callback_owners[callback] = {CallbackOwnerKind::timer, timer};
          break;
        }
      case TracepointId::api_timer_link_node: {
          const Handle timer = as_handle(event.payload[0]);
          const Handle node = as_handle(event.payload[1]);
          const auto it = model.timers.find(timer);
          if (it == model.timers.end()) {
            diag(
              "api_timer_link_node references unknown timer " + std::to_string(timer.value));
            break;
          }
          it->second.node = node;
          break;
        }
      case TracepointId::core_service_init: {
          ServiceInfo info;
          info.handle = as_handle(event.payload[0]);
          info.node = as_handle(event.payload[1]);
          info.transport_handle = as_handle(event.payload[2]);
          info.name = as_text(event.payload[3]);
          const auto [it, inserted] = model.services.emplace(info.handle, info);
          if (!inserted && it->second.name != info.name) {
            conflict("service", info.handle);
          }
          break;
        }
      case TracepointId::api_service_callback_added: {
          const Handle service = as_handle(event.payload[0]);
          const Handle callback = as_handle(event.payload[1]);
          const auto it = model.services.find(service);
          if (it == model.services.end()) {
            diag(
              "api_service_callback_added references unknown service " +
              std::to_string(service.value));
            break;
          }
          it->second.callback = callback;
          model.callback_owners[callback] = {CallbackOwnerKind::service, service};
          break;
        }
      case TracepointId::core_client_init: {
          ClientInfo info;
          info.handle = as_handle(event.payload[0]);
          info.node = as_handle(event.payload[1]);
          info.transport_handle = as_handle(event.payload[2]);
          info.name = as_text(event.payload[3]);
          const auto [it, inserted] = model.clients.emplace(info.handle, info);
          if (!inserted && it->second.name != info.name) {
            conflict("client", info.handle);
          }
          break;
        }
      default:
        break;  // runtime events play no part in the model
    }
  }
  return model;
}

CallbackInstanceResult callback_instances(
  const SystemModel & model, std::span<const TraceEvent> events)
{
  (void)model;
  CallbackInstanceResult result;
  // (callback, thread) -> pending start timestamp
  std::map<std::pair<uint64_t, uint32_t>, uint64_t> pending;
  for (const auto & event : events) {
    if (event.tracepoint == TracepointId::callback_start) {
      const Handle callback = as_handle(event.payload[0]);
      const auto key = std::make_pair(callback.value, event.thread_id);
      const auto it = pending.find(key);
      if (it != pending.end()) {
        result.unmatched_starts.push_back({callback, it->second, 0, event.thread_id});
        it->second = event.timestamp_ns;
      } else {
        pending.emplace(key, event.timestamp_ns);
      }
    } else if (event.tracepoint == TracepointId::callback_end) {
      const Handle callback = as_handle(event.payload[0]);
      const auto key = std::make_pair(callback.value, event.thread_id);
      const auto it = pending.find(key);
      if (it == pending.end()) {
        continue;  // stray end, e.g. its start was lost to a buffer drop
      }
      result.instances.push_back({callback, it->second, event.timestamp_ns, event.thread_id});
      pending.erase(it);
    }
  }
  for (const auto & [key, start_ns] : pending) {
    result.unmatched_starts.push_back({Handle{key.first}, start_ns, 0, key.second});
  }
  std::sort(
    result.unmatched_starts.begin(), result.unmatched_starts.end(),
    [](const CallbackInstance & a, const CallbackInstance & b) {
      return std::tie(a.start_ns, a.callback.value, a.thread_id) <
             std::tie(b.start_ns, b.callback.value, b.thread_id);
    });
  return result;
}

Summary summarize(std::span<const uint64_t> values)
{
  Summary summary;
  summary.count = values.size();
  if (values.empty()) {
    return summary;
  }
  summary.min = *std::min_element(values.begin(), values.end());
  summary.max = *std::max_element(values.begin(), values.end());
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (const uint64_t value : values) {
    ++n;
    const double x = static_cast<double>(value);
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  summary.mean = mean;
  summary.std_dev = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  return summary;
}

TimerStats timer_stats(
  const SystemModel & model, std::span<const TraceEvent> events, Handle timer)
{
  const auto it = model.timers.find(timer);
  if (it == model.timers.end()) {
    throw Error(ErrorCode::unknown_timer, "handle " + std::to_string(timer.value));
  }
  TimerStats stats;
  stats.timer = timer;
  if (!it->second.callback) {
    return stats;
  }
  const Handle callback = *it->second.callback;

  auto paired = callback_instances(model, events);
  std::vector<CallbackInstance> instances;
  for (const auto & instance : paired.instances) {
    if (instance.callback == callback) {
      instances.push_back(instance);
    }
  }
  std::sort(
    instances.begin(), instances.end(),
    [](const CallbackInstance & a, const CallbackInstance & b) {
      return a.start_ns < b.start_ns;
    });
  for (std::size_t i = 1; i < instances.size(); ++i) {
    stats.intervals_ns.push_back(instances[i].start_ns - instances[i - 1].start_ns);
    stats.interval_starts_ns.push_back(instances[i].start_ns);
  }
  for (const auto & instance : instances) {
    stats.durations_ns.push_back(instance.end_ns - instance.start_ns);
    stats.duration_starts_ns.push_back(instance.start_ns);
  }
  stats.interval_summary = summarize(stats.intervals_ns);
  stats.duration_summary = summarize(stats.durations_ns);
  return stats;
}

LatencyResult message_latencies(
  const SystemModel & model, std::span<const TraceEvent> events)
{
  LatencyResult result;

  // topic -> matching subscriptions (ascending handle for determinism)
  std::map<std::string, std::vector<const SubscriptionInfo *>> subs_by_topic;
  for (const auto & [handle, info] : model.subscriptions) {
    subs_by_topic[info.topic].push_back(&info);
  }

  struct IndexedTake
  {
    std::size_t index;
    uint32_t thread_id;
    uint64_t transport_sub;
  };
  struct IndexedPublish
  {
    std::size_t index;
    uint64_t publisher;
  };

  std::unordered_map<uint64_t, std::vector<IndexedTake>> takes_by_message;
  std::map<std::pair<uint32_t, uint64_t>, std::vector<IndexedPublish>> core_pub_index;
  std::map<std::pair<uint32_t, uint64_t>, std::vector<std::size_t>> starts_index;

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto & event = events[i];
    switch (event.tracepoint) {
      case TracepointId::transport_take:
        takes_by_message[as_handle(event.payload[1]).value].push_back(
          {i, event.thread_id, as_handle(event.payload[0]).value});
        break;
      case TracepointId::core_publish:
        core_pub_index[{event.thread_id, as_handle(event.payload[1]).value}].push_back(
          {i, as_handle(event.payload[0]).value});
        break;
      case TracepointId::callback_start:
        starts_index[{event.thread_id, as_handle(event.payload[0]).value}].push_back(i);
        break;
      default:
        break;
    }
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto & event = events[i];
    if (event.tracepoint != TracepointId::api_publish) {
      continue;
    }
    const Handle message = as_handle(event.payload[0]);

    // bind the publisher through the next same-thread core_publish
    const auto core_it = core_pub_index.find({event.thread_id, message.value});
    const PublisherInfo * publisher = nullptr;
    if (core_it != core_pub_index.end()) {
      const auto & records = core_it->second;
      const auto record = std::upper_bound(
        records.begin(), records.end(), i,
        [](std::size_t idx, const IndexedPublish & p) {return idx < p.index;});
      if (record != records.end()) {
        const auto pub_it = model.publishers.find(Handle{record->publisher});
        if (pub_it != model.publishers.end()) {
          publisher = &pub_it->second;
        }
      }
    }
    if (publisher == nullptr) {
      result.diagnostics.push_back(
        "api_publish of message " + std::to_string(message.value) +
        " could not be bound to a publisher");
      continue;
    }

    const auto topic_it = subs_by_topic.find(publisher->topic);
    const std::size_t samples_before = result.samples.size();
    if (topic_it != subs_by_topic.end()) {
      for (const SubscriptionInfo * subscription : topic_it->second) {
        if (!subscription->transport_handle || !subscription->callback) {
          continue;
        }
        const auto takes_it = takes_by_message.find(message.value);
        if (takes_it == takes_by_message.end()) {
          continue;
        }
        // earliest take of this message on this subscription after the publish
        const IndexedTake * matched_take = nullptr;
        for (const auto & take : takes_it->second) {
          if (take.index > i && take.transport_sub == subscription->transport_handle->value) {
            matched_take = &take;
            break;
          }
        }
        if (matched_take == nullptr) {
          continue;
        }
        // that delivery's callback_start: the next start of the subscription
        // callback on the take's thread
        const auto starts_it =
          starts_index.find({matched_take->thread_id, subscription->callback->value});
        if (starts_it == starts_index.end()) {
          continue;
        }
        const auto & starts = starts_it->second;
        const auto start_pos =
          std::upper_bound(starts.begin(), starts.end(), matched_take->index);
        if (start_pos == starts.end()) {
          continue;
        }
        const auto & start_event = events[*start_pos];
        LatencySample sample;
        sample.publisher = publisher->handle;
        sample.subscription = subscription->handle;
        sample.publish_ns = event.timestamp_ns;
        sample.callback_start_ns = start_event.timestamp_ns;
        sample.latency_ns = start_event.timestamp_ns - event.timestamp_ns;
        result.samples.push_back(sample);
      }
    }
    if (result.samples.size() == samples_before) {
      result.diagnostics.push_back(
        "api_publish of message " + std::to_string(message.value) +
        " on topic '" + publisher->topic + "' was not delivered");
    }
  }
  return result;
}

std::vector<LinkageRecord> io_linkage(
  const SystemModel & model, std::span<const TraceEvent> events, Handle timer)
{
  const auto timer_it = model.timers.find(timer);
  if (timer_it == model.timers.end()) {
    throw Error(ErrorCode::unknown_timer, "handle " + std::to_string(timer.value));
  }
  const TimerInfo & timer_info = timer_it->second;
  std::vector<LinkageRecord> records;
  if (!timer_info.callback || !timer_info.node) {
    return records;
  }

  // deliveries to the timer's node: (callback_start ts, message, topic); a
  // take binds to the next start of that subscription's callback on its thread
  struct Delivery
  {
    uint64_t start_ns;
    Handle message;
    std::string topic;
  };
  std::vector<Delivery> deliveries;
  {
    std::map<std::pair<uint32_t, uint64_t>, std::vector<std::size_t>> starts_index;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto & event = events[i];
      if (event.tracepoint == TracepointId::callback_start) {
        starts_index[{event.thread_id, as_handle(event.payload[0]).value}].push_back(i);
      }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto & event = events[i];
      if (event.tracepoint != TracepointId::transport_take) {
        continue;
      }
      const auto sub_handle_it =
        model.transport_subscriptions.find(as_handle(event.payload[0]));
      if (sub_handle_it == model.transport_subscriptions.end()) {
        continue;
      }
      const auto & sub = model.subscriptions.at(sub_handle_it->second);
      if (!sub.callback || sub.node != *timer_info.node) {
        continue;
      }
      const auto starts_it = starts_index.find({event.thread_id, sub.callback->value});
      if (starts_it == starts_index.end()) {
        continue;
      }
      const auto & starts = starts_it->second;
      const auto pos = std::upper_bound(starts.begin(), starts.end(), i);
      if (pos == starts.end()) {
        continue;
      }
      deliveries.push_back(
        {events[*pos].timestamp_ns, as_handle(event.payload[1]), sub.topic});
    }
    std::sort(
      deliveries.begin(), deliveries.end(),
      [](const Delivery & a, const Delivery & b) {return a.start_ns < b.start_ns;});
  }

  std::map<uint32_t, std::vector<std::pair<uint64_t, Handle>>> publishes_by_thread;
  for (const auto & event : events) {
    if (event.tracepoint == TracepointId::api_publish) {
      publishes_by_thread[event.thread_id].emplace_back(
        event.timestamp_ns, as_handle(event.payload[0]));
    }
  }

  auto paired = callback_instances(model, events);
  std::vector<CallbackInstance> instances;
  for (const auto & instance : paired.instances) {
    if (instance.callback == *timer_info.callback) {
      instances.push_back(instance);
    }
  }
  std::sort(
    instances.begin(), instances.end(),
    [](const CallbackInstance & a, const CallbackInstance & b) {
      return a.start_ns < b.start_ns;
    });

  for (const auto & instance : instances) {
    LinkageRecord record;
    record.instance = instance;
    for (const auto & delivery : deliveries) {
      if (delivery.start_ns >= instance.start_ns) {
        break;
      }
      record.inputs[delivery.topic] = delivery.message;  // latest one wins
    }
    const auto thread_it = publishes_by_thread.find(instance.thread_id);
    if (thread_it != publishes_by_thread.end()) {
      for (const auto & [ts, message] : thread_it->second) {
        if (ts >= instance.start_ns && ts <= instance.end_ns) {
          record.output = message;
          break;
        }
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

AnalysisReport analyze(
  std::span<const TraceEvent> events, std::optional<std::string> linkage_timer_symbol)
{
  AnalysisReport report;
  report.model = build_model(events);
  report.callbacks = callback_instances(report.model, events);
  report.latencies = message_latencies(report.model, events);
  for (const auto & [handle, info] : report.model.timers) {
    report.timers.push_back(timer_stats(report.model, events, handle));
  }
  if (linkage_timer_symbol) {
    std::optional<Handle> timer;
    for (const auto & [handle, info] : report.model.timers) {
      if (info.symbol == *linkage_timer_symbol) {
        timer = handle;
        break;
      }
    }
    if (!timer) {
      throw Error(ErrorCode::unknown_timer, "symbol '" + *linkage_timer_symbol + "'");
    }
    report.linkage = io_linkage(report.model, events, *timer);
  }
  return report;
}

namespace
{

nlohmann::json summary_json(const Summary & summary)
{
  return {
    {"count", summary.count},
    {"mean_ns", summary.mean},
    {"std_ns", summary.std_dev},
    {"min_ns", summary.min},
    {"max_ns", summary.max},
  };
}

std::string timer_subject(const SystemModel & model, Handle timer)
{
  const auto it = model.timers.find(timer);
  if (it != model.timers.end() && !it->second.symbol.empty()) {
    return it->second.symbol;
  }
  return "timer-" + std::to_string(timer.value);
}

}  // namespace

void write_report(const std::filesystem::path & directory, const AnalysisReport & report)
{
  std::filesystem::create_directories(directory);
  const auto & model = report.model;

  nlohmann::json doc;
  doc["counts"] = {
    {"nodes", model.nodes.size()},
    {"publishers", model.publishers.size()},
    {"subscriptions", model.subscriptions.size()},
    {"timers", model.timers.size()},
    {"services", model.services.size()},
    {"clients", model.clients.size()},
    {"callback_instances", report.callbacks.instances.size()},
    {"unmatched_starts", report.callbacks.unmatched_starts.size()},
    {"latency_samples", report.latencies.samples.size()},
  };

  doc["nodes"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.nodes) {
    doc["nodes"].push_back(
      {{"handle", handle.value}, {"name", info.name}, {"namespace", info.node_namespace}});
  }
  doc["publishers"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.publishers) {
    doc["publishers"].push_back(
      {{"handle", handle.value}, {"node", info.node.value}, {"topic", info.topic},
        {"queue_depth", info.queue_depth}});
  }
  doc["subscriptions"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.subscriptions) {
    nlohmann::json entry = {
      {"handle", handle.value}, {"node", info.node.value}, {"topic", info.topic},
      {"queue_depth", info.queue_depth}, {"symbol", info.symbol}};
    if (info.callback) {
      entry["callback"] = info.callback->value;
    }
    doc["subscriptions"].push_back(std::move(entry));
  }
  doc["timers"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.timers) {
    nlohmann::json entry = {
      {"handle", handle.value}, {"period_ns", info.period_ns}, {"symbol", info.symbol}};
    if (info.node) {
      entry["node"] = info.node->value;
    }
    if (info.callback) {
      entry["callback"] = info.callback->value;
    }
    doc["timers"].push_back(std::move(entry));
  }
  doc["services"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.services) {
    doc["services"].push_back(
      {{"handle", handle.value}, {"node", info.node.value}, {"name", info.name},
        {"symbol", info.symbol}});
  }
  doc["clients"] = nlohmann::json::array();
  for (const auto & [handle, info] : model.clients) {
    doc["clients"].push_back(
      {{"handle", handle.value}, {"node", info.node.value}, {"name", info.name}});
  }

  std::vector<uint64_t> latency_values;
  latency_values.reserve(report.latencies.samples.size());
  for (const auto & sample : report.latencies.samples) {
    latency_values.push_back(sample.latency_ns);
  }
  doc["latency"] = summary_json(summarize(latency_values));

  doc["timer_stats"] = nlohmann::json::array();
  for (const auto & stats : report.timers) {
    doc["timer_stats"].push_back(
      {{"timer", stats.timer.value},
        {"subject", timer_subject(model, stats.timer)},
        {"intervals", summary_json(stats.interval_summary)},
        {"durations", summary_json(stats.duration_summary)}});
  }

  if (!report.linkage.empty()) {
    doc["io_linkage"] = nlohmann::json::array();
    for (const auto & record : report.linkage) {
      nlohmann::json inputs = nlohmann::json::object();
      for (const auto & [topic, message] : record.inputs) {
        inputs[topic] = message.value;
      }
      nlohmann::json entry = {
        {"start_ns", record.instance.start_ns},
        {"end_ns", record.instance.end_ns},
        {"inputs", std::move(inputs)}};
      if (record.output) {
        entry["output"] = record.output->value;
      }
      doc["io_linkage"].push_back(std::move(entry));
    }
  }

  doc["diagnostics"] = model.diagnostics;
  for (const auto & text : report.latencies.diagnostics) {
    doc["diagnostics"].push_back(text);
  }

  {
    std::ofstream out(directory / "report.json", std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::io_failure, "cannot write report.json");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
      throw Error(ErrorCode::io_failure, "short write to report.json");
    }
  }

  std::ofstream csv(directory / "samples.csv", std::ios::trunc);
  if (!csv) {
    throw Error(ErrorCode::io_failure, "cannot write samples.csv");
  }
  csv << "kind,subject,start_ns,value_ns\n";
  for (const auto & sample : report.latencies.samples) {
    const auto & publisher = model.publishers.at(sample.publisher);
    csv << "latency," << publisher.topic << ',' << sample.publish_ns << ','
        << sample.latency_ns << '\n';
  }
  for (const auto & stats : report.timers) {
    const std::string subject = timer_subject(model, stats.timer);
    for (std::size_t i = 0; i < stats.intervals_ns.size(); ++i) {
      csv << "timer_interval," << subject << ',' << stats.interval_starts_ns[i] << ','
          << stats.intervals_ns[i] << '\n';
    }
    for (std::size_t i = 0; i < stats.durations_ns.size(); ++i) {
      csv << "timer_duration," << subject << ',' << stats.duration_starts_ns[i] << ','
          << stats.durations_ns[i] << '\n';
    }
  }
  csv.flush();
  if (!csv) {
    throw Error(ErrorCode::io_failure, "short write to samples.csv");
  }
}

}  // namespace pt::analysis
