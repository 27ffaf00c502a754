#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <map>
#include <random>
#include <thread>

#include "pt/error.hpp"
#include "pt/recorder.hpp"
#include "pt/trace_io.hpp"

using namespace pt;

namespace
{

std::filesystem::path temp_trace(const std::string & tag)
{
  return std::filesystem::temp_directory_path() /
         ("pt-rec-" + tag + "-" + std::to_string(::getpid()) + ".ptrc");
}

SessionConfig config_for(const std::filesystem::path & path, Backend backend = Backend::ring)
{
  SessionConfig config;
  config.session_name = "rec-test";
  config.output_path = path;
  config.backend = backend;
  return config;
}

}  // namespace

TEST_CASE("patterns: wildcard, prefix, exact, none, invalid")
{
  CHECK(EventPattern::parse("pt:*").matches("api_publish"));
  CHECK(EventPattern::parse("pt:core_*").matches("core_take"));
  CHECK_FALSE(EventPattern::parse("pt:core_*").matches("api_take"));
  CHECK(EventPattern::parse("pt:callback_start").matches("callback_start"));
  CHECK_FALSE(EventPattern::parse("pt:callback_start").matches("callback_end"));

  CHECK_THROWS_AS(EventPattern::parse("bad pattern!"), Error);
  CHECK_THROWS_AS(EventPattern::parse("pt:"), Error);
  CHECK_THROWS_AS(EventPattern::parse("other:*"), Error);
  CHECK_THROWS_AS(EventPattern::parse("pt:core*take"), Error);  // inner wildcard
  try {
    EventPattern::parse("bad pattern!");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::invalid_pattern);
  }
}

TEST_CASE("set_enabled match counts over the catalog")
{
  const auto path = temp_trace("counts");
  auto session = session_start(config_for(path));
  CHECK(session->set_enabled("pt:*", false) == 28);
  CHECK(session->set_enabled("pt:core_*", true) == 11);
  CHECK(session->set_enabled("pt:api_*", true) == 11);  // callback_* rows carry no prefix
  CHECK(session->set_enabled("pt:transport_*", true) == 4);
  CHECK(session->set_enabled("pt:callback_start", true) == 1);
  CHECK(session->set_enabled("pt:nonexistent_name", true) == 0);
  CHECK_THROWS_AS(session->set_enabled("pt:bad pattern", true), Error);
  session->stop();
  std::filesystem::remove(path);
}

TEST_CASE("session config validation")
{
  auto config = config_for(temp_trace("cfg"));
  config.session_name = "";
  CHECK_THROWS_AS(session_start(config), Error);
  config.session_name = "x";
  config.buffer_capacity_events = 32;
  CHECK_THROWS_AS(session_start(config), Error);
  config.buffer_capacity_events = 64;
  config.enabled_patterns = {"nope"};
  CHECK_THROWS_AS(session_start(config), Error);
}

TEST_CASE("only one session may record at a time")
{
  const auto path = temp_trace("single");
  auto session = session_start(config_for(path));
  CHECK_THROWS_AS(session_start(config_for(temp_trace("second"))), Error);
  try {
    session_start(config_for(temp_trace("second")));
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::already_recording);
  }
  session->stop();
  // a stopped session frees the slot
  auto next = session_start(config_for(path));
  next->stop();
  std::filesystem::remove(path);
}

TEST_CASE("null backend stores nothing")
{
  const auto path = temp_trace("null");
  auto session = session_start(config_for(path, Backend::null));
  for (int i = 0; i < 100000; ++i) {
    session->emit(TracepointId::callback_end, {Handle{1}});
  }
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 0);
  CHECK(stats.dropped_event_count == 0);
  const auto trace = io::read_trace(path);
  CHECK(trace.events.empty());
  std::filesystem::remove(path);
}

TEST_CASE("ring keeps the first events and drops the newest on overflow")
{
  const auto path = temp_trace("overflow");
  auto config = config_for(path);
  config.buffer_capacity_events = 64;
  auto session = session_start(config);
  for (uint64_t i = 0; i < 100; ++i) {
    session->emit(TracepointId::callback_end, {Handle{i}});
  }
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 100);
  CHECK(stats.dropped_event_count == 36);

  const auto trace = io::read_trace(path);
  REQUIRE(trace.events.size() == 64);
  CHECK(trace.dropped_count == 36);
  // discard-newest: the stored events are the first 64
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    CHECK(std::get<Handle>(trace.events[i].payload[0]).value == i);
    CHECK(trace.events[i].seq == i);
  }
  std::filesystem::remove(path);
}

TEST_CASE("disabled tracepoints leave no record and no counts")
{
  const auto path = temp_trace("disabled");
  auto config = config_for(path);
  config.enabled_patterns = {"pt:callback_end"};
  auto session = session_start(config);
  session->emit(TracepointId::api_publish, {Handle{1}});  // disabled
  session->emit(TracepointId::callback_end, {Handle{2}});
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 1);
  const auto trace = io::read_trace(path);
  REQUIRE(trace.events.size() == 1);
  CHECK(trace.events[0].tracepoint == TracepointId::callback_end);
  std::filesystem::remove(path);
}

TEST_CASE("emit validates the payload schema when enabled")
{
  const auto path = temp_trace("schema");
  auto session = session_start(config_for(path));
  CHECK_THROWS_AS(session->emit(TracepointId::api_publish, {Handle{1}, Handle{2}}), Error);
  session->stop();
  std::filesystem::remove(path);
}

TEST_CASE("stop writes the file, a second stop fails, later emits are no-ops")
{
  const auto path = temp_trace("stop");
  auto session = session_start(config_for(path));
  session->emit(TracepointId::callback_end, {Handle{1}});
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 1);
  CHECK(session->state() == SessionState::stopped);
  CHECK_THROWS_AS(session->stop(), Error);
  try {
    session->stop();
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::already_stopped);
  }
  session->emit(TracepointId::callback_end, {Handle{2}});  // silent no-op
  const auto trace = io::read_trace(path);
  CHECK(trace.events.size() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("empty session produces a valid trace file with zero events")
{
  const auto path = temp_trace("empty");
  auto session = session_start(config_for(path));
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 0);
  const auto trace = io::read_trace(path);
  CHECK(trace.events.empty());
  CHECK(trace.header.session_name == "rec-test");
  std::filesystem::remove(path);
}

TEST_CASE("conservation and per-thread order across concurrent emitters")
{
  const auto path = temp_trace("threads");
  auto config = config_for(path);
  config.buffer_capacity_events = 512;  // force drops on some threads
  auto session = session_start(config);

  std::mt19937_64 seed_rng(99);
  std::vector<uint64_t> counts = {100, 400, 700, 1000};
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    threads.emplace_back(
      [count = counts[t]]() {
        for (uint64_t i = 0; i < count; ++i) {
          emit_event(TracepointId::callback_end, {Handle{i}});
        }
      });
  }
  for (auto & thread : threads) {
    thread.join();
  }
  const auto stats = session->stop();
  const uint64_t total = 100 + 400 + 700 + 1000;
  CHECK(stats.total_emitted == total);

  const auto trace = io::read_trace(path);
  CHECK(trace.events.size() + stats.dropped_event_count == total);
  CHECK(trace.dropped_count == stats.dropped_event_count);
  // expected drops: threads above capacity lose the excess
  CHECK(stats.dropped_event_count == (700 - 512) + (1000 - 512));

  std::map<uint32_t, uint64_t> next_handle_per_thread;
  std::map<uint32_t, int64_t> last_seq;
  for (const auto & event : trace.events) {
    // per-thread emit order preserved: payload handles count 0,1,2,...
    CHECK(std::get<Handle>(event.payload[0]).value == next_handle_per_thread[event.thread_id]);
    ++next_handle_per_thread[event.thread_id];
    if (last_seq.count(event.thread_id) != 0) {
      CHECK(static_cast<int64_t>(event.seq) > last_seq[event.thread_id]);
    }
    last_seq[event.thread_id] = event.seq;
  }
  std::filesystem::remove(path);
}

TEST_CASE("emit through the global entry point requires a recording session")
{
  // no session: all flags off, nothing happens
  emit_event(TracepointId::callback_end, {Handle{1}});
  CHECK_FALSE(tracepoint_enabled(TracepointId::callback_end));

  const auto path = temp_trace("global");
  auto session = session_start(config_for(path));
  CHECK(tracepoint_enabled(TracepointId::callback_end));
  emit_event(TracepointId::callback_end, {Handle{1}});
  const auto stats = session->stop();
  CHECK(stats.total_emitted == 1);
  CHECK_FALSE(tracepoint_enabled(TracepointId::callback_end));
  std::filesystem::remove(path);
}

TEST_CASE("flush failure surfaces and leaves no end marker behind")
{
  auto config = config_for("/nonexistent-dir/pt-flush-test.ptrc");
  auto session = session_start(config);
  session->emit(TracepointId::callback_end, {Handle{1}});
  CHECK_THROWS_AS(session->stop(), Error);
  try {
    auto again = session_start(config_for(temp_trace("after-flush-failure")));
    again->stop();
  } catch (const Error &) {
    CHECK(false);  // the tracer must be usable again after a failed flush
  }
}
