#ifndef PT__RECORDER_HPP_
#define PT__RECORDER_HPP_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pt/trace_model.hpp"

namespace pt
{

enum class Backend : uint8_t {null, ring};

struct SessionConfig
{
  std::string session_name;
  std::vector<std::string> enabled_patterns = {"pt:*"};
  std::size_t buffer_capacity_events = 65536;  // per thread, >= 64
  std::filesystem::path output_path;
  Backend backend = Backend::ring;
};

struct DropStats
{
  uint64_t total_emitted = 0;
  uint64_t dropped_event_count = 0;
};

enum class SessionState : uint8_t {created, recording, stopped};

/// Event pattern "pt:<name>" with an optional trailing '*' wildcard.
/// Throws Error{invalid_pattern} on syntax violations.
struct EventPattern
{
  std::string prefix;
  bool wildcard = false;

  static EventPattern parse(std::string_view text);
  bool matches(std::string_view tracepoint_name) const;
};

/// A recording session. One per process may be Recording at a time; the tracer
/// state behind it is process-global so instrumentation call sites need no
/// session reference. Destroying a still-recording session stops it.
class Session
{
public:
  ~Session();
  Session(const Session &) = delete;
  Session & operator=(const Session &) = delete;

  /// Enables the tracepoints matching config.enabled_patterns and starts
  /// recording. Errors: AlreadyRecording, InvalidPattern, InvalidConfig.
  static std::unique_ptr<Session> start(SessionConfig config);

  /// Validates, timestamps and stores one event (Ring backend) on the calling
  /// thread's buffer. Silent no-op when the session is stopped or the
  /// tracepoint disabled. Never blocks; a full buffer drops the new event.
  void emit(TracepointId id, std::span<const FieldValue> payload);
  void emit(TracepointId id, std::initializer_list<FieldValue> payload)
  {
    emit(id, std::span<const FieldValue>(payload.begin(), payload.size()));
  }

  /// Flips the enable flag of every tracepoint matching pattern; returns how
  /// many matched. Safe concurrently with emit.
  std::size_t set_enabled(std::string_view pattern, bool on);

  /// Drains all per-thread buffers to config.output_path and returns the
  /// final statistics. Errors: AlreadyStopped, FlushFailure.
  DropStats stop();

  SessionState state() const;
  const SessionConfig & config() const {return config_;}
  uint64_t clock_base_ns() const {return clock_base_ns_;}
  DropStats drop_stats() const {return stats_;}

private:
  Session() = default;

  SessionConfig config_;
  uint64_t epoch_ = 0;
  uint64_t clock_base_ns_ = 0;
  DropStats stats_;
};

std::unique_ptr<Session> session_start(SessionConfig config);

/// True when the tracepoint is currently enabled for recording. One relaxed
/// atomic load; instrumentation call sites use this as the guard so disabled
/// tracepoints cost a load and a branch.
bool tracepoint_enabled(TracepointId id);

/// Instrumentation entry point: records through the active session, if any.
void emit_event(TracepointId id, std::span<const FieldValue> payload);
inline void emit_event(TracepointId id, std::initializer_list<FieldValue> payload)
{
  emit_event(id, std::span<const FieldValue>(payload.begin(), payload.size()));
}

}  // namespace pt

#endif  // PT__RECORDER_HPP_
