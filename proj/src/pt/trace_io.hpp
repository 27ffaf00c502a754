#ifndef PT__TRACE_IO_HPP_
#define PT__TRACE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pt/trace_model.hpp"

namespace pt::io
{

inline constexpr char kMagic[4] = {'P', 'T', 'R', 'C'};
inline constexpr char kEndMarker[4] = {'C', 'E', 'N', 'D'};
inline constexpr uint16_t kFormatVersion = 1;

struct TraceFileHeader
{
  uint16_t version = kFormatVersion;
  std::string session_name;
  uint32_t process_id = 0;
  uint64_t clock_base_ns = 0;

  bool operator==(const TraceFileHeader &) const = default;
};

/// One event as stored on disk: id + encoded payload, not yet decoded.
struct RawEvent
{
  uint16_t tracepoint_id = 0;
  uint64_t timestamp_ns = 0;
  uint32_t seq = 0;
  std::vector<uint8_t> payload;

  bool operator==(const RawEvent &) const = default;
};

/// Events of one thread; within a packet events ascend by seq.
struct Packet
{
  uint32_t thread_id = 0;
  uint32_t dropped_count = 0;
  std::vector<RawEvent> events;

  bool operator==(const Packet &) const = default;
};

/// Little-endian file: header, packets, "CEND". A file without the end marker
/// is invalid (that is how a failed flush is signalled).
void write_trace(
  const std::filesystem::path & path, const TraceFileHeader & header,
  std::span<const Packet> packets);

struct RawTrace
{
  TraceFileHeader header;
  std::vector<Packet> packets;
};

/// Structural read; payloads stay encoded.
RawTrace read_trace_raw(const std::filesystem::path & path);

struct Trace
{
  TraceFileHeader header;
  std::vector<TraceEvent> events;  // file order; per-thread seq order preserved
  uint64_t dropped_count = 0;      // summed over packets
};

/// Read and decode via the catalog schemas.
Trace read_trace(const std::filesystem::path & path);

/// Globally sorts by (timestamp_ns, stream index, thread_id, seq).
/// Deterministic; output is a permutation of the inputs.
std::vector<TraceEvent> merge_events(std::span<const std::vector<TraceEvent>> streams);

/// Newline-delimited JSON, one object per event:
/// {"tracepoint":...,"timestamp_ns":...,"thread_id":...,"seq":...,"payload":{...}}
std::string export_json(std::span<const TraceEvent> events);

}  // namespace pt::io

#endif  // PT__TRACE_IO_HPP_
