#ifndef PT__TRACE_MODEL_HPP_
#define PT__TRACE_MODEL_HPP_

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pt
{

/// The closed tracepoint catalog: 13 api-layer rows, 11 core-layer rows,
/// 4 transport-layer rows, in catalog order. Enum values are catalog indices
/// and double as the on-disk tracepoint ids.
enum class TracepointId : uint16_t
{
  api_subscription_init = 0,
  api_subscription_callback_added,
  api_publish,
  api_take,
  api_service_callback_added,
  api_timer_callback_added,
  api_timer_link_node,
  api_callback_register,
  callback_start,
  callback_end,
  api_executor_get_next_ready,
  api_executor_wait_for_work,
  api_executor_execute,
  core_init,
  core_node_init,
  core_publisher_init,
  core_subscription_init,
  core_publish,
  core_take,
  core_client_init,
  core_service_init,
  core_timer_init,
  core_lifecycle_state_machine_init,
  core_lifecycle_transition,
  transport_publisher_init,
  transport_subscription_init,
  transport_publish,
  transport_take,
};

inline constexpr std::size_t kTracepointCount = 28;

enum class Layer : uint8_t {api, core, transport};

enum class EventKind : uint8_t {initialization, runtime};

enum class HotPath : uint8_t {none, publish_path, receive_path};

enum class FieldType : uint8_t {handle, uint64, int64, boolean, text};

struct FieldSpec
{
  std::string_view name;
  FieldType type;
};

struct TracepointDescriptor
{
  TracepointId id;
  std::string_view name;
  Layer layer;
  EventKind kind;
  HotPath hot_path;
  std::span<const FieldSpec> payload_schema;
};

/// Object identifier. A distinct type so payload tags can tell a handle from
/// a plain 64-bit count.
struct Handle
{
  uint64_t value = 0;
  auto operator<=>(const Handle &) const = default;
};

/// Alternative order matches FieldType: handle, uint64, int64, boolean, text.
using FieldValue = std::variant<Handle, uint64_t, int64_t, bool, std::string>;

inline FieldType field_tag(const FieldValue & value)
{
  return static_cast<FieldType>(value.index());
}

struct TraceEvent
{
  TracepointId tracepoint;
  uint64_t timestamp_ns = 0;
  uint32_t thread_id = 0;
  uint32_t seq = 0;
  std::vector<FieldValue> payload;

  bool operator==(const TraceEvent &) const = default;
};

/// All 28 descriptors: api block, core block, transport block, each in
/// catalog row order.
std::span<const TracepointDescriptor> catalog();

/// Total over the enumeration; the id is the catalog index.
const TracepointDescriptor & descriptor_of(TracepointId id);

/// Descriptor by tracepoint name, nullptr when unknown.
const TracepointDescriptor * find_descriptor(std::string_view name);

std::string_view to_string(TracepointId id);
std::string_view to_string(Layer layer);

/// Throws Error{schema_mismatch} unless payload arity and tags match the schema.
void validate_payload(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload);

/// Encoded byte size of a conforming payload (fixed widths, text 2 + len).
std::size_t encoded_payload_size(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload);

/// Writes the little-endian encoding into dst (must hold encoded_payload_size
/// bytes; payload must be valid). Returns bytes written.
std::size_t encode_payload_to(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload, uint8_t * dst);

/// Validate + encode into a fresh buffer.
std::vector<uint8_t> encode_payload(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload);

/// Inverse of encode_payload. Throws Error{malformed_payload} on truncated or
/// trailing bytes.
std::vector<FieldValue> decode_payload(
  const TracepointDescriptor & descriptor, std::span<const uint8_t> bytes);

}  // namespace pt

#endif  // PT__TRACE_MODEL_HPP_
