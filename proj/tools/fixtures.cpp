#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <thread>

#include <pt/pt.h>

namespace
{

std::atomic<bool> g_interrupted{false};

void check(pt_status status, const char * what)
{
  if (status != PT_OK) {
    throw std::runtime_error(
            std::string(what) + ": " + pt_status_str(status) + " (" + pt_last_error() + ")");
  }
}

// tiny --key value parser; unknown keys are an error
class Flags
{
public:
  explicit Flags(const std::vector<std::string> & args)
  {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i].size() < 3 || args[i][0] != '-' || args[i][1] != '-') {
        throw std::runtime_error("unexpected fixture argument '" + args[i] + "'");
      }
      if (i + 1 >= args.size()) {
        throw std::runtime_error("missing value for '" + args[i] + "'");
      }
      values_.emplace_back(args[i].substr(2), args[i + 1]);
      ++i;
    }
  }

  ~Flags() = default;

  int64_t get_int(const std::string & key, int64_t fallback) const
  {
    for (const auto & [k, v] : values_) {
      if (k == key) {
        return std::stoll(v);
      }
    }
    return fallback;
  }

  std::string get(const std::string & key, const std::string & fallback) const
  {
    for (const auto & [k, v] : values_) {
      if (k == key) {
        return v;
      }
    }
    return fallback;
  }

private:
  std::vector<std::pair<std::string, std::string>> values_;
};

uint64_t steady_now_ms()
{
  return static_cast<uint64_t>(
    std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now().time_since_epoch()).count());
}

// spin in short slices so a SIGTERM still leads to a clean session stop
void spin_sliced(pt_executor * executor, int64_t duration_ms)
{
  const uint64_t deadline = steady_now_ms() + static_cast<uint64_t>(duration_ms);
  while (!g_interrupted.load() && steady_now_ms() < deadline) {
    const uint64_t left = deadline - steady_now_ms();
    const int64_t slice_ms = static_cast<int64_t>(left > 200 ? 200 : left);
    check(pt_executor_spin_for(executor, slice_ms * 1000000), "spin");
  }
}

int fixture_talker(const Flags & flags)
{
  const std::string topic = flags.get("topic", "chatter");
  const int64_t count = flags.get_int("count", 10);
  const int64_t period_us = flags.get_int("period-us", 1000);
  const auto size = static_cast<std::size_t>(flags.get_int("size-bytes", 64));

  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * node = nullptr;
  check(pt_node_create(context, "talker", "/", &node), "node");
  pt_publisher * publisher = nullptr;
  check(pt_publisher_create(node, topic.c_str(), 16, &publisher), "publisher");

  std::vector<uint8_t> payload(size > 0 ? size : 1, 0x5a);
  for (int64_t i = 0; i < count && !g_interrupted.load(); ++i) {
    check(pt_publish(publisher, payload.data(), payload.size()), "publish");
    std::this_thread::sleep_for(std::chrono::microseconds(period_us));
  }
  pt_context_free(context);
  return 0;
}

int fixture_listener(const Flags & flags)
{
  const std::string topic = flags.get("topic", "chatter");
  const int64_t duration_ms = flags.get_int("duration-ms", 500);

  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * node = nullptr;
  check(pt_node_create(context, "listener", "/", &node), "node");
  pt_subscription * subscription = nullptr;
  check(
    pt_subscription_create(
      node, topic.c_str(), 16,
      [](const uint8_t *, size_t, void *) {}, nullptr, "listener_on_msg", &subscription),
    "subscription");
  pt_executor * executor = nullptr;
  check(pt_executor_create(context, 1, &executor), "executor");
  check(pt_executor_add_node(executor, node), "add_node");
  spin_sliced(executor, duration_ms);
  pt_executor_free(executor);
  pt_context_free(context);
  return 0;
}

int fixture_pubsub(const Flags & flags)
{
  const std::string topic = flags.get("topic", "loop");
  const int64_t count = flags.get_int("count", 100);
  const auto size = static_cast<std::size_t>(flags.get_int("size-bytes", 64));

  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * pub_node = nullptr;
  pt_node * sub_node = nullptr;
  check(pt_node_create(context, "loop_pub", "/", &pub_node), "node");
  check(pt_node_create(context, "loop_sub", "/", &sub_node), "node");
  pt_publisher * publisher = nullptr;
  check(
    pt_publisher_create(pub_node, topic.c_str(), static_cast<uint32_t>(count) + 8, &publisher),
    "publisher");
  pt_subscription * subscription = nullptr;
  check(
    pt_subscription_create(
      sub_node, topic.c_str(), static_cast<uint32_t>(count) + 8,
      [](const uint8_t *, size_t, void *) {}, nullptr, "loop_on_msg", &subscription),
    "subscription");
  pt_executor * executor = nullptr;
  check(pt_executor_create(context, 1, &executor), "executor");
  check(pt_executor_add_node(executor, sub_node), "add_node");

  std::vector<uint8_t> payload(size > 0 ? size : 1, 0x33);
  for (int64_t i = 0; i < count; ++i) {
    check(pt_publish(publisher, payload.data(), payload.size()), "publish");
  }
  check(pt_executor_spin_work(executor, static_cast<uint64_t>(count)), "spin");
  pt_executor_free(executor);
  pt_context_free(context);
  return 0;
}

int fixture_timerload(const Flags & flags)
{
  const int64_t period_ms = flags.get_int("period-ms", 100);
  const int64_t busy_ms = flags.get_int("busy-ms", 10);
  const int64_t duration_ms = flags.get_int("duration-ms", 1000);

  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * node = nullptr;
  check(pt_node_create(context, "timerload", "/", &node), "node");

  static int64_t busy_for_ms = 0;
  busy_for_ms = busy_ms;
  pt_timer * timer = nullptr;
  check(
    pt_timer_create(
      node, period_ms * 1000000,
      [](void *) {
        const auto until =
          std::chrono::steady_clock::now() + std::chrono::milliseconds(busy_for_ms);
        while (std::chrono::steady_clock::now() < until) {
        }
      },
      nullptr, "timer_tick", &timer),
    "timer");

  pt_executor * executor = nullptr;
  check(pt_executor_create(context, 1, &executor), "executor");
  check(pt_executor_add_node(executor, node), "add_node");
  spin_sliced(executor, duration_ms);
  pt_executor_free(executor);
  pt_context_free(context);
  return 0;
}

int fixture_lifecycle(const Flags & flags)
{
  const std::string topic = flags.get("topic", "managed");

  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * node = nullptr;
  check(pt_lifecycle_node_create(context, "managed", "/", &node), "node");
  pt_publisher * publisher = nullptr;
  check(pt_publisher_create(node, topic.c_str(), 16, &publisher), "publisher");

  const uint8_t byte = 0x01;
  check(pt_lifecycle_transition(node, "configure", nullptr), "configure");
  check(pt_lifecycle_transition(node, "activate", nullptr), "activate");
  check(pt_publish(publisher, &byte, 1), "publish");
  check(pt_lifecycle_transition(node, "deactivate", nullptr), "deactivate");
  check(pt_lifecycle_transition(node, "cleanup", nullptr), "cleanup");
  pt_context_free(context);
  return 0;
}

int fixture_fail(const Flags &)
{
  pt_context * context = nullptr;
  check(pt_context_create(&context), "context");
  pt_node * node = nullptr;
  check(pt_node_create(context, "doomed", "/", &node), "node");
  pt_context_free(context);
  return 3;
}

void on_signal(int)
{
  g_interrupted.store(true);
}

}  // namespace

std::vector<std::string> fixture_names()
{
  return {"talker", "listener", "pubsub", "timerload", "lifecycle", "fail"};
}

int run_fixture(const std::string & name, const std::vector<std::string> & args)
{
  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);
  const Flags flags(args);
  if (name == "talker") {
    return fixture_talker(flags);
  }
  if (name == "listener") {
    return fixture_listener(flags);
  }
  if (name == "pubsub") {
    return fixture_pubsub(flags);
  }
  if (name == "timerload") {
    return fixture_timerload(flags);
  }
  if (name == "lifecycle") {
    return fixture_lifecycle(flags);
  }
  if (name == "fail") {
    return fixture_fail(flags);
  }
  throw std::runtime_error("unknown fixture '" + name + "'");
}
