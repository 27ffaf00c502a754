#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

#include "pt/error.hpp"
#include "pt/runtime.hpp"
#include "pt/test_utils.hpp"

using namespace pt;
using namespace pt::runtime;
using pt::testing::count_events;
using pt::testing::run_and_trace;

namespace
{

std::vector<uint8_t> bytes(std::initializer_list<uint8_t> values)
{
  return std::vector<uint8_t>(values);
}

Handle event_handle(const TraceEvent & event, std::size_t field = 0)
{
  return std::get<Handle>(event.payload[field]);
}

}  // namespace

TEST_CASE("create_node emits one core_node_init with the name")
{
  const auto result = run_and_trace(
    [](Context & context) {
      context.create_node("talker", "/");
    });
  REQUIRE(count_events(result, TracepointId::core_node_init) == 1);
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::core_node_init) {
      CHECK(std::get<std::string>(event.payload[2]) == "talker");
      CHECK(std::get<std::string>(event.payload[3]) == "/");
    }
  }
  // core_init precedes everything else
  CHECK(result.events.front().tracepoint == TracepointId::core_init);
}

TEST_CASE("duplicate node names are rejected, distinct nodes get distinct handles")
{
  run_and_trace(
    [](Context & context) {
      auto a = context.create_node("n", "/");
      auto b = context.create_node("n", "/other");
      auto c = context.create_node("m", "/");
      CHECK(a->handle().value != c->handle().value);
      CHECK(b->handle().value != c->handle().value);
      CHECK_THROWS_AS(context.create_node("n", "/"), Error);
      try {
        context.create_node("n", "/");
      } catch (const Error & e) {
        CHECK(e.code() == ErrorCode::duplicate_node_name);
      }
    });
}

TEST_CASE("publisher creation emits transport then core init, topic verbatim")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("pubs", "/");
      node->create_publisher("sensor/points", 10);
      node->create_publisher("a", 1);
      node->create_publisher("b", 1);
    });
  CHECK(count_events(result, TracepointId::core_publisher_init) == 3);
  CHECK(count_events(result, TracepointId::transport_publisher_init) == 3);
  CHECK(
    pt::testing::assert_event_order(
      result, {TracepointId::transport_publisher_init, TracepointId::core_publisher_init}));

  std::set<uint64_t> pub_handles;
  std::set<uint64_t> node_handles;
  bool saw_topic = false;
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::core_publisher_init) {
      pub_handles.insert(event_handle(event).value);
      node_handles.insert(event_handle(event, 1).value);
      saw_topic = saw_topic || std::get<std::string>(event.payload[2]) == "sensor/points";
    }
  }
  CHECK(saw_topic);
  CHECK(pub_handles.size() == 3);   // distinct pub handles
  CHECK(node_handles.size() == 1);  // same node
}

TEST_CASE("subscription creation emits the five-event join chain")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("subs", "/");
      node->create_subscription("chat", 10, [](const Message &) {}, "on_msg");
    });
  CHECK(
    pt::testing::assert_event_order(
      result,
      {TracepointId::transport_subscription_init, TracepointId::core_subscription_init,
        TracepointId::api_subscription_init, TracepointId::api_subscription_callback_added,
        TracepointId::api_callback_register}));

  // the chain shares handles pairwise
  Handle core_sub;
  Handle api_object;
  Handle callback;
  for (const auto & event : result.events) {
    switch (event.tracepoint) {
      case TracepointId::core_subscription_init:
        core_sub = event_handle(event);
        break;
      case TracepointId::api_subscription_init:
        CHECK(event_handle(event) == core_sub);
        api_object = event_handle(event, 1);
        break;
      case TracepointId::api_subscription_callback_added:
        CHECK(event_handle(event) == api_object);
        callback = event_handle(event, 1);
        break;
      case TracepointId::api_callback_register:
        CHECK(event_handle(event) == callback);
        CHECK(std::get<std::string>(event.payload[1]) == "on_msg");
        break;
      default:
        break;
    }
  }

  // model join resolves the whole chain
  REQUIRE(result.model.subscriptions.size() == 1);
  const auto & info = result.model.subscriptions.begin()->second;
  CHECK(info.topic == "chat");
  CHECK(info.symbol == "on_msg");
  CHECK(info.callback.has_value());
  CHECK(info.transport_handle.has_value());
}

TEST_CASE("two subscriptions to one topic keep distinct handles")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("subs", "/");
      node->create_subscription("t", 4, [](const Message &) {});
      node->create_subscription("t", 4, [](const Message &) {});
    });
  REQUIRE(result.model.subscriptions.size() == 2);
  auto it = result.model.subscriptions.begin();
  const auto & first = it->second;
  const auto & second = (++it)->second;
  CHECK(first.handle != second.handle);
  CHECK(first.topic == second.topic);
}

TEST_CASE("publish emits the api->core->transport chain on one thread")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("p", "/");
      auto publisher = node->create_publisher("t", 4);
      publisher->publish(bytes({1, 2, 3}));
    });
  CHECK(count_events(result, TracepointId::api_publish) == 1);
  CHECK(count_events(result, TracepointId::core_publish) == 1);
  CHECK(count_events(result, TracepointId::transport_publish) == 1);
  CHECK(
    pt::testing::assert_event_order(
      result,
      {TracepointId::api_publish, TracepointId::core_publish,
        TracepointId::transport_publish}));

  // same message handle across the chain
  std::set<uint64_t> message_handles;
  uint32_t thread = 0;
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::api_publish ||
      event.tracepoint == TracepointId::transport_publish)
    {
      message_handles.insert(event_handle(event).value);
      thread = event.thread_id;
    }
    if (event.tracepoint == TracepointId::core_publish) {
      message_handles.insert(event_handle(event, 1).value);
      CHECK(event.thread_id == thread);
    }
  }
  CHECK(message_handles.size() == 1);
}

TEST_CASE("publish with no matching subscription emits only the three publish events")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("p", "/");
      auto publisher = node->create_publisher("nobody-listens", 4);
      publisher->publish(bytes({9}));
    });
  CHECK(count_events(result, TracepointId::api_publish) == 1);
  CHECK(count_events(result, TracepointId::transport_take) == 0);
  CHECK(count_events(result, TracepointId::callback_start) == 0);
}

TEST_CASE("single delivery produces the receive chain in executor order")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", 4);
      sub_node->create_subscription("t", 4, [](const Message &) {}, "cb");
      Executor executor = Executor::single_threaded();
      executor.add_node(sub_node);
      publisher->publish(bytes({1}));
      executor.spin_work(1);
    });
  CHECK(
    pt::testing::assert_event_order(
      result,
      {TracepointId::api_executor_wait_for_work, TracepointId::api_executor_get_next_ready,
        TracepointId::api_executor_execute, TracepointId::transport_take,
        TracepointId::core_take, TracepointId::api_take, TracepointId::callback_start,
        TracepointId::callback_end}));
  CHECK(count_events(result, TracepointId::transport_take) == 1);
  CHECK(count_events(result, TracepointId::callback_start) == 1);
  CHECK(count_events(result, TracepointId::callback_end) == 1);

  // intra-process flag is set for subscription deliveries
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::callback_start) {
      CHECK(std::get<bool>(event.payload[1]) == true);
    }
  }
}

TEST_CASE("hot-path decomposition: N delivered messages make 3N+7N hot-path events")
{
  constexpr uint64_t kMessages = 200;
  const auto result = run_and_trace(
    [](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", kMessages + 8);
      sub_node->create_subscription("t", kMessages + 8, [](const Message &) {});
      Executor executor = Executor::single_threaded();
      executor.add_node(sub_node);
      for (uint64_t i = 0; i < kMessages; ++i) {
        publisher->publish(bytes({1}));
      }
      executor.spin_work(kMessages);
    });

  uint64_t publish_path = 0;
  uint64_t receive_path = 0;
  for (const auto & event : result.events) {
    const auto & descriptor = descriptor_of(event.tracepoint);
    if (descriptor.hot_path == HotPath::publish_path) {
      ++publish_path;
    } else if (descriptor.hot_path == HotPath::receive_path) {
      ++receive_path;
    }
  }
  CHECK(publish_path == 3 * kMessages);
  CHECK(receive_path == 7 * kMessages);
  CHECK(count_events(result, TracepointId::callback_start) == kMessages);
  CHECK(count_events(result, TracepointId::callback_end) == kMessages);
  CHECK(result.drop_stats.dropped_event_count == 0);
}

TEST_CASE("bounded subscription queue drops the oldest message")
{
  std::vector<uint8_t> seen;
  run_and_trace(
    [&seen](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", 1);
      sub_node->create_subscription(
        "t", 1, [&seen](const Message & message) {seen.push_back(message.data->at(0));});
      Executor executor = Executor::single_threaded();
      executor.add_node(sub_node);
      publisher->publish(bytes({1}));
      publisher->publish(bytes({2}));
      executor.spin_work(1);
    });
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == 2);  // the older message was dropped
}

TEST_CASE("timer creation emits its init chain and validates the period")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("t", "/");
      node->create_timer(100000000, []() {}, "tick");
      CHECK_THROWS_AS(node->create_timer(0, []() {}), Error);
      CHECK_THROWS_AS(node->create_timer(-5, []() {}), Error);
    });
  CHECK(
    pt::testing::assert_event_order(
      result,
      {TracepointId::core_timer_init, TracepointId::api_timer_callback_added,
        TracepointId::api_callback_register, TracepointId::api_timer_link_node}));

  Handle timer;
  for (const auto & event : result.events) {
    switch (event.tracepoint) {
      case TracepointId::core_timer_init:
        timer = event_handle(event);
        CHECK(std::get<int64_t>(event.payload[1]) == 100000000);
        break;
      case TracepointId::api_timer_callback_added:
      case TracepointId::api_timer_link_node:
        CHECK(event_handle(event) == timer);
        break;
      default:
        break;
    }
  }
  REQUIRE(result.model.timers.size() == 1);
  CHECK(result.model.timers.begin()->second.symbol == "tick");
  CHECK(result.model.timers.begin()->second.node.has_value());
}

TEST_CASE("timer fires through the executor with its callback handle")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_node("t", "/");
      node->create_timer(5000000, []() {});  // 5 ms
      Executor executor = Executor::single_threaded();
      executor.add_node(node);
      executor.spin_work(3);
    });
  CHECK(count_events(result, TracepointId::callback_start) == 3);
  CHECK(count_events(result, TracepointId::callback_end) == 3);
  CHECK(
    pt::testing::assert_event_order(
      result, {TracepointId::api_executor_execute, TracepointId::callback_start}));

  const auto timer = result.model.timers.begin()->first;
  const auto callback = *result.model.timers.begin()->second.callback;
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::api_executor_execute) {
      CHECK(event_handle(event) == timer);
    }
    if (event.tracepoint == TracepointId::callback_start) {
      CHECK(event_handle(event) == callback);
      CHECK(std::get<bool>(event.payload[1]) == false);  // not a message delivery
    }
  }
}

TEST_CASE("services: init joins, call round-trip, unknown service")
{
  std::vector<uint8_t> response_seen;
  const auto result = run_and_trace(
    [&response_seen](Context & context) {
      auto server_node = context.create_node("server", "/");
      auto client_node = context.create_node("client", "/");
      server_node->create_service(
        "sum",
        [](const std::vector<uint8_t> & request) {
          uint8_t sum = 0;
          for (const auto byte : request) {
            sum = static_cast<uint8_t>(sum + byte);
          }
          return std::vector<uint8_t>{sum};
        },
        "on_sum");
      auto client = client_node->create_client("sum");
      auto missing = client_node->create_client("nope");

      Executor executor = Executor::single_threaded();
      executor.add_node(server_node);
      std::thread spinner([&executor]() {executor.spin_work(1);});
      const auto reply = client->call(bytes({1, 2, 3}));
      spinner.join();
      response_seen = reply;

      CHECK_THROWS_AS(missing->call(bytes({1})), Error);
      try {
        missing->call(bytes({1}));
      } catch (const Error & e) {
        CHECK(e.code() == ErrorCode::unknown_service);
      }
    });
  REQUIRE(response_seen.size() == 1);
  CHECK(response_seen[0] == 6);
  CHECK(count_events(result, TracepointId::callback_start) == 1);
  CHECK(count_events(result, TracepointId::callback_end) == 1);

  // service init events share the service handle
  Handle service;
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::core_service_init) {
      service = event_handle(event);
    }
    if (event.tracepoint == TracepointId::api_service_callback_added) {
      CHECK(event_handle(event) == service);
    }
  }
  REQUIRE(result.model.services.size() == 1);
  CHECK(result.model.services.begin()->second.name == "sum");
  CHECK(result.model.services.begin()->second.symbol == "on_sum");
  CHECK(result.model.clients.size() == 2);
}

TEST_CASE("lifecycle walk emits four transitions with the right labels")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_lifecycle_node("managed", "/");
      CHECK(node->lifecycle_state() == LifecycleState::unconfigured);
      CHECK(node->lifecycle_transition("configure") == LifecycleState::inactive);
      CHECK(node->lifecycle_transition("activate") == LifecycleState::active);
      CHECK(node->lifecycle_transition("deactivate") == LifecycleState::inactive);
      CHECK(node->lifecycle_transition("cleanup") == LifecycleState::unconfigured);
    });
  CHECK(count_events(result, TracepointId::core_lifecycle_state_machine_init) == 1);
  REQUIRE(count_events(result, TracepointId::core_lifecycle_transition) == 4);

  const std::vector<std::pair<std::string, std::string>> expected = {
    {"unconfigured", "inactive"},
    {"inactive", "active"},
    {"active", "inactive"},
    {"inactive", "unconfigured"},
  };
  std::size_t index = 0;
  for (const auto & event : result.events) {
    if (event.tracepoint != TracepointId::core_lifecycle_transition) {
      continue;
    }
    CHECK(std::get<std::string>(event.payload[1]) == expected[index].first);
    CHECK(std::get<std::string>(event.payload[2]) == expected[index].second);
    ++index;
  }
}

TEST_CASE("illegal lifecycle transitions are refused")
{
  run_and_trace(
    [](Context & context) {
      auto node = context.create_lifecycle_node("managed", "/");
      CHECK_THROWS_AS(node->lifecycle_transition("activate"), Error);  // not configured yet
      node->lifecycle_transition("configure");
      node->lifecycle_transition("activate");
      CHECK_THROWS_AS(node->lifecycle_transition("configure"), Error);
      CHECK_THROWS_AS(node->lifecycle_transition("warp"), Error);

      auto plain = context.create_node("plain", "/");
      CHECK_THROWS_AS(plain->lifecycle_transition("configure"), Error);
    });
}

TEST_CASE("publish on a non-active lifecycle node fails with no publish events")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto node = context.create_lifecycle_node("managed", "/");
      auto publisher = node->create_publisher("t", 4);
      CHECK_THROWS_AS(publisher->publish(bytes({1})), Error);
      node->lifecycle_transition("configure");
      CHECK_THROWS_AS(publisher->publish(bytes({1})), Error);  // inactive
      try {
        publisher->publish(bytes({1}));
      } catch (const Error & e) {
        CHECK(e.code() == ErrorCode::inactive_lifecycle_node);
      }
      node->lifecycle_transition("activate");
      publisher->publish(bytes({1}));  // now fine
    });
  CHECK(count_events(result, TracepointId::api_publish) == 1);
  CHECK(count_events(result, TracepointId::core_publish) == 1);
  CHECK(count_events(result, TracepointId::transport_publish) == 1);
}

TEST_CASE("executor without nodes refuses to spin")
{
  Executor executor = Executor::single_threaded();
  CHECK_THROWS_AS(executor.spin_work(1), Error);
  try {
    executor.spin_work(1);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::no_nodes);
  }
}

TEST_CASE("multi-threaded executor overlaps distinct callbacks, each exactly once")
{
  std::mutex m;
  std::condition_variable cv;
  int inside = 0;
  bool both_inside = false;  // latches once the callbacks coincide
  bool overlapped = false;

  const auto rendezvous = [&]() {
      std::unique_lock lock(m);
      ++inside;
      if (inside >= 2) {
        both_inside = true;
        cv.notify_all();
      }
      const bool saw_both =
        cv.wait_for(lock, std::chrono::seconds(5), [&]() {return both_inside;});
      overlapped = overlapped || saw_both;
      --inside;
    };

  const auto result = run_and_trace(
    [&](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto pub_a = pub_node->create_publisher("a", 4);
      auto pub_b = pub_node->create_publisher("b", 4);
      sub_node->create_subscription("a", 4, [&](const Message &) {rendezvous();}, "cb_a");
      sub_node->create_subscription("b", 4, [&](const Message &) {rendezvous();}, "cb_b");
      Executor executor = Executor::multi_threaded(2);
      executor.add_node(sub_node);
      pub_a->publish(bytes({1}));
      pub_b->publish(bytes({2}));
      executor.spin_work(2);
    });

  CHECK(overlapped);
  CHECK(count_events(result, TracepointId::callback_start) == 2);
  CHECK(count_events(result, TracepointId::callback_end) == 2);

  // overlapping callback windows on distinct threads
  const auto paired = analysis::callback_instances(result.model, result.events);
  REQUIRE(paired.instances.size() == 2);
  const auto & first = paired.instances[0];
  const auto & second = paired.instances[1];
  CHECK(first.thread_id != second.thread_id);
  CHECK(first.start_ns < second.end_ns);
  CHECK(second.start_ns < first.end_ns);
}

TEST_CASE("callback bracketing: ends match starts per thread with no nesting")
{
  const auto result = run_and_trace(
    [](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", 64);
      sub_node->create_subscription("t", 64, [](const Message &) {});
      sub_node->create_timer(2000000, []() {});
      Executor executor = Executor::single_threaded();
      executor.add_node(sub_node);
      for (int i = 0; i < 10; ++i) {
        publisher->publish(bytes({1}));
      }
      executor.spin_work(15);  // mixes timer firings and deliveries
    });

  std::map<uint32_t, std::optional<uint64_t>> open_callback;  // thread -> callback handle
  for (const auto & event : result.events) {
    if (event.tracepoint == TracepointId::callback_start) {
      CHECK_FALSE(open_callback[event.thread_id].has_value());  // no nesting
      open_callback[event.thread_id] = event_handle(event).value;
    } else if (event.tracepoint == TracepointId::callback_end) {
      REQUIRE(open_callback[event.thread_id].has_value());
      CHECK(*open_callback[event.thread_id] == event_handle(event).value);
      open_callback[event.thread_id].reset();
    }
  }
  for (const auto & [thread, open] : open_callback) {
    CHECK_FALSE(open.has_value());
  }
}

TEST_CASE("executor exactly-once execution equals delivered messages")
{
  std::atomic<int> calls{0};
  run_and_trace(
    [&calls](Context & context) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", 128);
      sub_node->create_subscription("t", 128, [&calls](const Message &) {++calls;});
      Executor executor = Executor::multi_threaded(3);
      executor.add_node(sub_node);
      for (int i = 0; i < 50; ++i) {
        publisher->publish(bytes({static_cast<uint8_t>(i)}));
      }
      executor.spin_work(50);
    });
  CHECK(calls.load() == 50);
}

TEST_CASE("backend swap transparency: workload outputs are identical")
{
  const auto workload = [](Context & context, std::vector<uint8_t> & outputs) {
      auto pub_node = context.create_node("p", "/");
      auto sub_node = context.create_node("s", "/");
      auto publisher = pub_node->create_publisher("t", 16);
      sub_node->create_subscription(
        "t", 16, [&outputs](const Message & message) {
          outputs.push_back(message.data->at(0));
        });
      Executor executor = Executor::single_threaded();
      executor.add_node(sub_node);
      for (uint8_t i = 0; i < 10; ++i) {
        publisher->publish(std::vector<uint8_t>{i});
      }
      executor.spin_work(10);
    };

  std::vector<uint8_t> with_ring;
  std::vector<uint8_t> with_null;
  {
    SessionConfig config;
    config.session_name = "swap-ring";
    config.output_path = std::filesystem::temp_directory_path() / "pt-swap-ring.ptrc";
    config.backend = Backend::ring;
    auto session = session_start(config);
    Context context;
    workload(context, with_ring);
    session->stop();
    std::filesystem::remove(config.output_path);
  }
  {
    SessionConfig config;
    config.session_name = "swap-null";
    config.output_path = std::filesystem::temp_directory_path() / "pt-swap-null.ptrc";
    config.backend = Backend::null;
    auto session = session_start(config);
    Context context;
    workload(context, with_null);
    session->stop();
    std::filesystem::remove(config.output_path);
  }
  CHECK(with_ring == with_null);
  CHECK(with_ring.size() == 10);
}
