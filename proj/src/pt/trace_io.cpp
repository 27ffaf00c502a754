#include "pt/trace_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pt/error.hpp"

namespace pt::io
{

namespace
{

void put_le(std::string & out, uint64_t value, std::size_t width)
{
  for (std::size_t i = 0; i < width; ++i) {
    out.push_back(static_cast<char>(value >> (8 * i)));
  }
}

class Cursor
{
public:
  Cursor(const uint8_t * data, std::size_t size)
  : data_(data), size_(size) {}

  uint64_t take_le(std::size_t width)
  {
    need(width);
    uint64_t value = 0;
    for (std::size_t i = 0; i < width; ++i) {
      value |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += width;
    return value;
  }

  std::span<const uint8_t> take_bytes(std::size_t n)
  {
    need(n);
    std::span<const uint8_t> out(data_ + pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const {return size_ - pos_;}

private:
  void need(std::size_t n) const
  {
    if (pos_ + n > size_) {
      throw Error(ErrorCode::truncated_file, "unexpected end of trace data");
    }
  }

  const uint8_t * data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_trace(
  const std::filesystem::path & path, const TraceFileHeader & header,
  std::span<const Packet> packets)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
  }

  std::string buffer;
  buffer.append(kMagic, 4);
  put_le(buffer, header.version, 2);
  put_le(buffer, header.session_name.size(), 2);
  buffer.append(header.session_name);
  put_le(buffer, header.process_id, 4);
  put_le(buffer, header.clock_base_ns, 8);
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));

  for (const auto & packet : packets) {
    buffer.clear();
    put_le(buffer, packet.thread_id, 4);
    put_le(buffer, packet.events.size(), 4);
    put_le(buffer, packet.dropped_count, 4);
    for (const auto & event : packet.events) {
      put_le(buffer, event.tracepoint_id, 2);
      put_le(buffer, event.payload.size(), 2);
      put_le(buffer, event.timestamp_ns, 8);
      put_le(buffer, event.seq, 4);
      buffer.append(reinterpret_cast<const char *>(event.payload.data()), event.payload.size());
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) {
      throw Error(ErrorCode::io_failure, "short write to " + path.string());
    }
  }

  out.write(kEndMarker, 4);
  out.flush();
  if (!out) {
    throw Error(ErrorCode::io_failure, "failed to finalize " + path.string());
  }
}

RawTrace read_trace_raw(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_failure, "cannot open " + path.string());
  }
  std::vector<uint8_t> data(
    (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::bad_magic, path.string() + " is not a trace file");
  }
  if (data.size() < 8 || std::memcmp(data.data() + data.size() - 4, kEndMarker, 4) != 0) {
    throw Error(ErrorCode::truncated_file, path.string() + " has no end marker");
  }

  Cursor cursor(data.data() + 4, data.size() - 8);

  RawTrace trace;
  trace.header.version = static_cast<uint16_t>(cursor.take_le(2));
  if (trace.header.version != kFormatVersion) {
    throw Error(
            ErrorCode::unsupported_version,
            "trace format version " + std::to_string(trace.header.version));
  }
  const auto name_len = cursor.take_le(2);
  const auto name_bytes = cursor.take_bytes(name_len);
  trace.header.session_name.assign(name_bytes.begin(), name_bytes.end());
  trace.header.process_id = static_cast<uint32_t>(cursor.take_le(4));
  trace.header.clock_base_ns = cursor.take_le(8);

  while (cursor.remaining() > 0) {
    Packet packet;
    packet.thread_id = static_cast<uint32_t>(cursor.take_le(4));
    const auto event_count = cursor.take_le(4);
    packet.dropped_count = static_cast<uint32_t>(cursor.take_le(4));
    packet.events.reserve(event_count);
    for (uint64_t i = 0; i < event_count; ++i) {
      RawEvent event;
      event.tracepoint_id = static_cast<uint16_t>(cursor.take_le(2));
      const auto payload_len = cursor.take_le(2);
      event.timestamp_ns = cursor.take_le(8);
      event.seq = static_cast<uint32_t>(cursor.take_le(4));
      const auto payload = cursor.take_bytes(payload_len);
      event.payload.assign(payload.begin(), payload.end());
      packet.events.push_back(std::move(event));
    }
    trace.packets.push_back(std::move(packet));
  }
  return trace;
}

Trace read_trace(const std::filesystem::path & path)
{
  RawTrace raw = read_trace_raw(path);
  Trace trace;
  trace.header = std::move(raw.header);
  for (const auto & packet : raw.packets) {
    trace.dropped_count += packet.dropped_count;
    for (const auto & raw_event : packet.events) {
      if (raw_event.tracepoint_id >= kTracepointCount) {
        throw Error(
                ErrorCode::unknown_tracepoint,
                "tracepoint id " + std::to_string(raw_event.tracepoint_id));
      }
      TraceEvent event;
      event.tracepoint = static_cast<TracepointId>(raw_event.tracepoint_id);
      event.timestamp_ns = raw_event.timestamp_ns;
      event.thread_id = packet.thread_id;
      event.seq = raw_event.seq;
      event.payload = decode_payload(descriptor_of(event.tracepoint), raw_event.payload);
      trace.events.push_back(std::move(event));
    }
  }
  return trace;
}

std::vector<TraceEvent> merge_events(std::span<const std::vector<TraceEvent>> streams)
{
  struct Tagged
  {
    const TraceEvent * event;
    std::size_t stream;
  };
  std::vector<Tagged> tagged;
  std::size_t total = 0;
  for (const auto & stream : streams) {
    total += stream.size();
  }
  tagged.reserve(total);
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (const auto & event : streams[s]) {
      tagged.push_back({&event, s});
    }
  }
  std::stable_sort(
    tagged.begin(), tagged.end(), [](const Tagged & a, const Tagged & b) {
      const auto key = [](const Tagged & t) {
          return std::make_tuple(
            t.event->timestamp_ns, t.stream, t.event->thread_id, t.event->seq);
        };
      return key(a) < key(b);
    });
  std::vector<TraceEvent> merged;
  merged.reserve(total);
  for (const auto & t : tagged) {
    merged.push_back(*t.event);
  }
  return merged;
}

std::string export_json(std::span<const TraceEvent> events)
{
  std::string out;
  for (const auto & event : events) {
    const auto & descriptor = descriptor_of(event.tracepoint);
    nlohmann::ordered_json line;
    line["tracepoint"] = descriptor.name;
    line["timestamp_ns"] = event.timestamp_ns;
    line["thread_id"] = event.thread_id;
    line["seq"] = event.seq;
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < event.payload.size(); ++i) {
      const auto name = std::string(descriptor.payload_schema[i].name);
      const auto & value = event.payload[i];
      switch (field_tag(value)) {
        case FieldType::handle:
          payload[name] = std::get<Handle>(value).value;
          break;
        case FieldType::uint64:
          payload[name] = std::get<uint64_t>(value);
          break;
        case FieldType::int64:
          payload[name] = std::get<int64_t>(value);
          break;
        case FieldType::boolean:
          payload[name] = std::get<bool>(value);
          break;
        case FieldType::text:
          payload[name] = std::get<std::string>(value);
          break;
      }
    }
    line["payload"] = std::move(payload);
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pt::io
