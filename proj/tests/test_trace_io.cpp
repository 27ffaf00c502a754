#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "pt/error.hpp"
#include "pt/trace_io.hpp"
#include "support/synthetic_traces.hpp"

using namespace pt;
using namespace pt::io;
using pt::testsupport::random_io_event;
using pt::testsupport::to_packets;

namespace
{

std::filesystem::path temp_trace(const std::string & tag)
{
  return std::filesystem::temp_directory_path() /
         ("pt-io-" + tag + "-" + std::to_string(::getpid()) + ".ptrc");
}

TraceFileHeader sample_header()
{
  TraceFileHeader header;
  header.session_name = "io-test";
  header.process_id = 4242;
  header.clock_base_ns = 1000;
  return header;
}

RawEvent raw_event(TracepointId id, uint64_t ts, uint32_t seq, std::vector<FieldValue> payload)
{
  RawEvent event;
  event.tracepoint_id = static_cast<uint16_t>(id);
  event.timestamp_ns = ts;
  event.seq = seq;
  event.payload = encode_payload(descriptor_of(id), payload);
  return event;
}

}  // namespace

TEST_CASE("write then read an empty trace")
{
  const auto path = temp_trace("empty");
  write_trace(path, sample_header(), {});
  const auto trace = read_trace(path);
  CHECK(trace.header == sample_header());
  CHECK(trace.events.empty());
  CHECK(trace.dropped_count == 0);
  // header + end marker only
  CHECK(std::filesystem::file_size(path) == 4 + 2 + 2 + 7 + 4 + 8 + 4);
  std::filesystem::remove(path);
}

TEST_CASE("structural round-trip preserves header and packets")
{
  const auto path = temp_trace("roundtrip");
  std::vector<Packet> packets(2);
  packets[0].thread_id = 1;
  packets[0].dropped_count = 3;
  packets[0].events.push_back(raw_event(TracepointId::api_publish, 100, 0, {Handle{9}}));
  packets[0].events.push_back(raw_event(TracepointId::callback_end, 120, 1, {Handle{5}}));
  packets[1].thread_id = 2;
  packets[1].events.push_back(
    raw_event(TracepointId::callback_start, 110, 0, {Handle{5}, true}));

  write_trace(path, sample_header(), packets);
  const auto raw = read_trace_raw(path);
  CHECK(raw.header == sample_header());
  REQUIRE(raw.packets.size() == 2);
  CHECK(raw.packets[0] == packets[0]);
  CHECK(raw.packets[1] == packets[1]);
  std::filesystem::remove(path);
}

TEST_CASE("a file without the end marker is truncated")
{
  const auto path = temp_trace("truncated");
  write_trace(path, sample_header(), {});
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  CHECK_THROWS_AS(read_trace(path), Error);
  try {
    read_trace(path);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::truncated_file);
  }
  std::filesystem::remove(path);
}

TEST_CASE("bad magic and unsupported version are rejected")
{
  const auto path = temp_trace("magic");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE going nowhere";
  }
  CHECK_THROWS_AS(read_trace(path), Error);
  try {
    read_trace(path);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::bad_magic);
  }

  write_trace(path, sample_header(), {});
  {
    std::fstream file(path, std::ios::binary | std::ios::in | std::ios::out);
    file.seekp(4);
    const char version2[] = {2, 0};
    file.write(version2, 2);
  }
  try {
    read_trace(path);
    CHECK(false);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::unsupported_version);
  }
  std::filesystem::remove(path);
}

TEST_CASE("a payload that does not decode under its schema is malformed")
{
  const auto path = temp_trace("bad-payload");
  Packet packet;
  packet.thread_id = 1;
  RawEvent event;
  event.tracepoint_id = static_cast<uint16_t>(TracepointId::callback_start);
  event.timestamp_ns = 1;
  event.seq = 0;
  event.payload = {1, 2, 3};  // schema wants 9 bytes
  packet.events.push_back(event);
  write_trace(path, sample_header(), {&packet, 1});
  try {
    read_trace(path);
    CHECK(false);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::malformed_payload);
  }
  std::filesystem::remove(path);
}

TEST_CASE("unknown tracepoint ids are rejected on decode")
{
  const auto path = temp_trace("unknown-id");
  Packet packet;
  packet.thread_id = 1;
  RawEvent event;
  event.tracepoint_id = 999;
  event.timestamp_ns = 1;
  event.seq = 0;
  packet.events.push_back(event);
  write_trace(path, sample_header(), {&packet, 1});
  CHECK_THROWS_AS(read_trace(path), Error);
  try {
    read_trace(path);
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::unknown_tracepoint);
  }
  std::filesystem::remove(path);
}

TEST_CASE("100k events over 4 threads survive write and read in order")
{
  std::mt19937_64 rng(7);
  std::vector<TraceEvent> events;
  events.reserve(100000);
  uint32_t seqs[4] = {0, 0, 0, 0};
  uint64_t clocks[4] = {0, 0, 0, 0};
  for (int i = 0; i < 100000; ++i) {
    const uint32_t thread = static_cast<uint32_t>(rng() % 4);
    clocks[thread] += rng() % 50;
    events.push_back(
      random_io_event(rng, thread + 100, seqs[thread]++, 1000000 + clocks[thread]));
  }

  const auto path = temp_trace("large");
  write_trace(path, sample_header(), to_packets(events));
  const auto trace = read_trace(path);
  REQUIRE(trace.events.size() == events.size());

  // multiset equality via sorted copies
  auto canonical = [](std::vector<TraceEvent> v) {
      std::sort(
        v.begin(), v.end(), [](const TraceEvent & a, const TraceEvent & b) {
          return std::tie(a.thread_id, a.seq) < std::tie(b.thread_id, b.seq);
        });
      return v;
    };
  CHECK(canonical(trace.events) == canonical(events));

  // per-thread seq strictly increasing in file order
  std::map<uint32_t, int64_t> last_seq;
  std::map<uint32_t, uint64_t> last_ts;
  for (const auto & event : trace.events) {
    if (last_seq.count(event.thread_id) != 0) {
      CHECK(static_cast<int64_t>(event.seq) > last_seq[event.thread_id]);
      CHECK(event.timestamp_ns >= last_ts[event.thread_id]);
    }
    last_seq[event.thread_id] = event.seq;
    last_ts[event.thread_id] = event.timestamp_ns;
  }
  std::filesystem::remove(path);
}

TEST_CASE("merge of one stream is the identity")
{
  std::mt19937_64 rng(11);
  std::vector<TraceEvent> stream;
  for (int i = 0; i < 100; ++i) {
    stream.push_back(random_io_event(rng, 1, static_cast<uint32_t>(i), 1000 + i * 10));
  }
  const std::vector<std::vector<TraceEvent>> streams = {stream};
  CHECK(merge_events(streams) == stream);
}

TEST_CASE("merge equals a brute-force sort oracle and is deterministic")
{
  std::mt19937_64 rng(23);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::vector<TraceEvent>> streams(1 + rng() % 4);
    for (std::size_t s = 0; s < streams.size(); ++s) {
      uint32_t seq = 0;
      uint64_t ts = 0;
      const auto n = rng() % 200;
      for (uint64_t i = 0; i < n; ++i) {
        ts += rng() % 3;  // deliberate equal timestamps across streams
        streams[s].push_back(
          random_io_event(rng, static_cast<uint32_t>(1 + rng() % 3), seq++, ts));
      }
    }

    // oracle: tag and stable-sort by the documented key
    struct Tagged
    {
      TraceEvent event;
      std::size_t stream;
    };
    std::vector<Tagged> oracle;
    for (std::size_t s = 0; s < streams.size(); ++s) {
      for (const auto & event : streams[s]) {
        oracle.push_back({event, s});
      }
    }
    std::stable_sort(
      oracle.begin(), oracle.end(), [](const Tagged & a, const Tagged & b) {
        return std::tie(a.event.timestamp_ns, a.stream, a.event.thread_id, a.event.seq) <
               std::tie(b.event.timestamp_ns, b.stream, b.event.thread_id, b.event.seq);
      });

    const auto merged = merge_events(streams);
    REQUIRE(merged.size() == oracle.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
      CHECK(merged[i] == oracle[i].event);
    }

    // deterministic under repetition
    CHECK(merge_events(streams) == merged);

    // non-decreasing timestamps
    for (std::size_t i = 1; i < merged.size(); ++i) {
      CHECK(merged[i - 1].timestamp_ns <= merged[i].timestamp_ns);
    }
  }
}

TEST_CASE("export_json emits one line per event with schema field names")
{
  CHECK(export_json({}).empty());

  std::vector<TraceEvent> events;
  TraceEvent event;
  event.tracepoint = TracepointId::callback_start;
  event.timestamp_ns = 12345;
  event.thread_id = 7;
  event.seq = 0;
  event.payload = {Handle{99}, true};
  events.push_back(event);
  event.tracepoint = TracepointId::callback_end;
  event.seq = 1;
  event.payload = {Handle{99}};
  events.push_back(event);

  const auto text = export_json(events);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\"tracepoint\":\"callback_start\"") != std::string::npos);
  CHECK(text.find("\"callback\":99") != std::string::npos);
  CHECK(text.find("\"intra_process\":true") != std::string::npos);
  CHECK(text.find("\"timestamp_ns\":12345") != std::string::npos);
}
