#include "pt/recorder.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <mutex>

#include "pt/clock.hpp"
#include "pt/error.hpp"
#include "pt/trace_io.hpp"

namespace pt
{

namespace
{

constexpr std::size_t kInlinePayloadBytes = 40;

// One recorded event. Runtime payloads fit the inline buffer; long init
// payloads spill to the heap. payload_len selects the storage.
struct Slot
{
  uint16_t tracepoint = 0;
  uint16_t payload_len = 0;
  uint32_t seq = 0;
  uint64_t timestamp_ns = 0;
  std::array<uint8_t, kInlinePayloadBytes> inline_payload;
  std::unique_ptr<uint8_t[]> overflow;

  const uint8_t * payload_data() const
  {
    return payload_len <= kInlinePayloadBytes ? inline_payload.data() : overflow.get();
  }
};

// Per-thread event buffer. Only the owning thread writes; the stop path reads
// after recording has been disabled. Buffers live until process exit so a
// thread may terminate before its events are drained.
struct ThreadBuffer
{
  uint32_t thread_id = 0;
  uint64_t session_epoch = 0;
  uint32_t next_seq = 0;
  uint64_t emitted = 0;
  uint64_t dropped = 0;
  std::size_t count = 0;
  std::vector<Slot> slots;
  ThreadBuffer * next = nullptr;  // registry chain, set once on registration
};

struct TracerState
{
  std::array<std::atomic<bool>, kTracepointCount> enabled{};
  std::atomic<uint64_t> epoch{0};
  std::atomic<uint8_t> backend{static_cast<uint8_t>(Backend::null)};
  std::atomic<std::size_t> capacity{0};
  std::atomic<bool> recording{false};
  std::atomic<ThreadBuffer *> buffers{nullptr};
  std::mutex control;
  Session * active = nullptr;  // guarded by control
};

TracerState & tracer()
{
  static TracerState state;
  return state;
}

thread_local ThreadBuffer * t_buffer = nullptr;

ThreadBuffer * local_buffer(TracerState & state)
{
  ThreadBuffer * buffer = t_buffer;
  if (buffer == nullptr) {
    buffer = new ThreadBuffer();
    buffer->thread_id = current_thread_id();
    // lock-free registry push; emitting threads never contend on a lock
    buffer->next = state.buffers.load(std::memory_order_acquire);
    while (!state.buffers.compare_exchange_weak(
        buffer->next, buffer, std::memory_order_release, std::memory_order_acquire))
    {
    }
    t_buffer = buffer;
  }
  const uint64_t epoch = state.epoch.load(std::memory_order_acquire);
  if (buffer->session_epoch != epoch) {
    buffer->slots.resize(state.capacity.load(std::memory_order_acquire));
    buffer->count = 0;
    buffer->next_seq = 0;
    buffer->emitted = 0;
    buffer->dropped = 0;
    buffer->session_epoch = epoch;
  }
  return buffer;
}

void record(TracerState & state, TracepointId id, std::span<const FieldValue> payload)
{
  const auto & descriptor = descriptor_of(id);
  validate_payload(descriptor, payload);
  if (static_cast<Backend>(state.backend.load(std::memory_order_relaxed)) == Backend::null) {
    return;
  }
  ThreadBuffer * buffer = local_buffer(state);
  ++buffer->emitted;
  if (buffer->count == buffer->slots.size()) {
    ++buffer->dropped;  // discard-newest
    return;
  }
  Slot & slot = buffer->slots[buffer->count];
  const std::size_t size = encoded_payload_size(descriptor, payload);
  uint8_t * dst;
  if (size <= kInlinePayloadBytes) {
    dst = slot.inline_payload.data();
  } else {
    slot.overflow = std::make_unique<uint8_t[]>(size);
    dst = slot.overflow.get();
  }
  encode_payload_to(descriptor, payload, dst);
  slot.payload_len = static_cast<uint16_t>(size);
  slot.tracepoint = static_cast<uint16_t>(id);
  slot.seq = buffer->next_seq++;
  slot.timestamp_ns = monotonic_now_ns();
  ++buffer->count;
}

std::vector<EventPattern> parse_patterns(const std::vector<std::string> & patterns)
{
  std::vector<EventPattern> parsed;
  parsed.reserve(patterns.size());
  for (const auto & pattern : patterns) {
    parsed.push_back(EventPattern::parse(pattern));
  }
  return parsed;
}

}  // namespace

EventPattern EventPattern::parse(std::string_view text)
{
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || text.substr(0, colon) != "pt") {
    throw Error(ErrorCode::invalid_pattern, "'" + std::string(text) + "' (expected pt:<name>)");
  }
  std::string_view name = text.substr(colon + 1);
  EventPattern pattern;
  if (!name.empty() && name.back() == '*') {
    pattern.wildcard = true;
    name.remove_suffix(1);
  }
  if (!pattern.wildcard && name.empty()) {
    throw Error(ErrorCode::invalid_pattern, "'" + std::string(text) + "' (empty name)");
  }
  for (const char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) {
      throw Error(
              ErrorCode::invalid_pattern,
              "'" + std::string(text) + "' (bad character '" + std::string(1, c) + "')");
    }
  }
  pattern.prefix = std::string(name);
  return pattern;
}

bool EventPattern::matches(std::string_view tracepoint_name) const
{
  if (wildcard) {
    return tracepoint_name.substr(0, prefix.size()) == prefix;
  }
  return tracepoint_name == prefix;
}

std::unique_ptr<Session> Session::start(SessionConfig config)
{
  if (config.session_name.empty()) {
    throw Error(ErrorCode::invalid_config, "session_name must be non-empty");
  }
  if (config.buffer_capacity_events < 64) {
    throw Error(ErrorCode::invalid_config, "buffer_capacity_events must be >= 64");
  }
  const auto patterns = parse_patterns(config.enabled_patterns);

  auto & state = tracer();
  std::lock_guard<std::mutex> lock(state.control);
  if (state.recording.load(std::memory_order_acquire)) {
    throw Error(ErrorCode::already_recording, "session '" + config.session_name + "' refused");
  }

  auto session = std::unique_ptr<Session>(new Session());
  session->config_ = std::move(config);
  session->clock_base_ns_ = monotonic_now_ns();

  session->epoch_ = state.epoch.fetch_add(1, std::memory_order_release) + 1;
  state.capacity.store(session->config_.buffer_capacity_events, std::memory_order_release);
  state.backend.store(static_cast<uint8_t>(session->config_.backend), std::memory_order_release);
  state.active = session.get();
  state.recording.store(true, std::memory_order_release);
  for (const auto & descriptor : catalog()) {
    const bool on = std::any_of(
      patterns.begin(), patterns.end(),
      [&](const EventPattern & p) {return p.matches(descriptor.name);});
    state.enabled[static_cast<std::size_t>(descriptor.id)].store(on, std::memory_order_release);
  }
  return session;
}

std::unique_ptr<Session> session_start(SessionConfig config)
{
  return Session::start(std::move(config));
}

Session::~Session()
{
  if (state() == SessionState::recording) {
    try {
      stop();
    } catch (...) {
    }
  }
}

SessionState Session::state() const
{
  auto & state = tracer();
  std::lock_guard<std::mutex> lock(state.control);
  return state.active == this ? SessionState::recording : SessionState::stopped;
}

void Session::emit(TracepointId id, std::span<const FieldValue> payload)
{
  auto & state = tracer();
  if (state.epoch.load(std::memory_order_relaxed) != epoch_) {
    return;  // a different session owns the tracer now
  }
  if (!state.enabled[static_cast<std::size_t>(id)].load(std::memory_order_relaxed)) {
    return;
  }
  record(state, id, payload);
}

std::size_t Session::set_enabled(std::string_view pattern_text, bool on)
{
  const EventPattern pattern = EventPattern::parse(pattern_text);
  auto & state = tracer();
  std::lock_guard<std::mutex> lock(state.control);
  if (state.active != this) {
    throw Error(ErrorCode::already_stopped, "set_enabled on a stopped session");
  }
  std::size_t matched = 0;
  for (const auto & descriptor : catalog()) {
    if (pattern.matches(descriptor.name)) {
      state.enabled[static_cast<std::size_t>(descriptor.id)].store(
        on, std::memory_order_release);
      ++matched;
    }
  }
  return matched;
}

DropStats Session::stop()
{
  auto & state = tracer();
  std::vector<io::Packet> packets;
  {
    std::lock_guard<std::mutex> lock(state.control);
    if (state.active != this) {
      throw Error(ErrorCode::already_stopped, "session '" + config_.session_name + "'");
    }
    for (auto & flag : state.enabled) {
      flag.store(false, std::memory_order_release);
    }
    state.recording.store(false, std::memory_order_release);
    state.active = nullptr;

    const uint64_t epoch = state.epoch.load(std::memory_order_acquire);
    stats_ = DropStats{};
    for (ThreadBuffer * buffer = state.buffers.load(std::memory_order_acquire);
      buffer != nullptr; buffer = buffer->next)
    {
      if (buffer->session_epoch != epoch) {
        continue;
      }
      stats_.total_emitted += buffer->emitted;
      stats_.dropped_event_count += buffer->dropped;
      if (buffer->count == 0 && buffer->dropped == 0) {
        continue;
      }
      io::Packet packet;
      packet.thread_id = buffer->thread_id;
      packet.dropped_count = static_cast<uint32_t>(buffer->dropped);
      packet.events.reserve(buffer->count);
      for (std::size_t i = 0; i < buffer->count; ++i) {
        const Slot & slot = buffer->slots[i];
        io::RawEvent event;
        event.tracepoint_id = slot.tracepoint;
        event.timestamp_ns = slot.timestamp_ns;
        event.seq = slot.seq;
        event.payload.assign(slot.payload_data(), slot.payload_data() + slot.payload_len);
        packet.events.push_back(std::move(event));
      }
      packets.push_back(std::move(packet));
    }
  }
  std::sort(
    packets.begin(), packets.end(),
    [](const io::Packet & a, const io::Packet & b) {return a.thread_id < b.thread_id;});

  io::TraceFileHeader header;
  header.session_name = config_.session_name;
  header.process_id = static_cast<uint32_t>(::getpid());
  header.clock_base_ns = clock_base_ns_;
  try {
    io::write_trace(config_.output_path, header, packets);
  } catch (const Error & e) {
    throw Error(ErrorCode::flush_failure, e.what());
  }
  return stats_;
}

bool tracepoint_enabled(TracepointId id)
{
  return tracer().enabled[static_cast<std::size_t>(id)].load(std::memory_order_relaxed);
}

void emit_event(TracepointId id, std::span<const FieldValue> payload)
{
  auto & state = tracer();
  if (!state.enabled[static_cast<std::size_t>(id)].load(std::memory_order_relaxed)) {
    return;
  }
  record(state, id, payload);
}

}  // namespace pt
