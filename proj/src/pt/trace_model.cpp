#include "pt/trace_model.hpp"

#include <cstring>

#include "pt/error.hpp"

namespace pt
{

namespace
{

constexpr FieldType H = FieldType::handle;
constexpr FieldType U = FieldType::uint64;
constexpr FieldType I = FieldType::int64;
constexpr FieldType B = FieldType::boolean;
constexpr FieldType T = FieldType::text;

constexpr FieldSpec kApiSubscriptionInit[] = {{"sub", H}, {"sub_object", H}};
constexpr FieldSpec kApiSubscriptionCallbackAdded[] = {{"sub_object", H}, {"callback", H}};
constexpr FieldSpec kApiPublish[] = {{"message", H}};
constexpr FieldSpec kApiTake[] = {{"message", H}};
constexpr FieldSpec kApiServiceCallbackAdded[] = {{"service", H}, {"callback", H}};
constexpr FieldSpec kApiTimerCallbackAdded[] = {{"timer", H}, {"callback", H}};
constexpr FieldSpec kApiTimerLinkNode[] = {{"timer", H}, {"node", H}};
constexpr FieldSpec kApiCallbackRegister[] = {{"callback", H}, {"symbol", T}};
constexpr FieldSpec kCallbackStart[] = {{"callback", H}, {"intra_process", B}};
constexpr FieldSpec kCallbackEnd[] = {{"callback", H}};
constexpr FieldSpec kApiExecutorWaitForWork[] = {{"timeout_ns", I}};
constexpr FieldSpec kApiExecutorExecute[] = {{"handle", H}};

constexpr FieldSpec kCoreInit[] = {{"context", H}, {"tool_version", T}};
constexpr FieldSpec kCoreNodeInit[] =
{{"node", H}, {"transport_node", H}, {"name", T}, {"namespace", T}};
constexpr FieldSpec kCorePublisherInit[] =
{{"pub", H}, {"node", H}, {"topic", T}, {"queue_depth", U}};
constexpr FieldSpec kCoreSubscriptionInit[] =
{{"sub", H}, {"node", H}, {"topic", T}, {"queue_depth", U}};
constexpr FieldSpec kCorePublish[] = {{"pub", H}, {"message", H}};
constexpr FieldSpec kCoreTake[] = {{"message", H}};
constexpr FieldSpec kCoreClientInit[] =
{{"client", H}, {"node", H}, {"transport_client", H}, {"name", T}};
constexpr FieldSpec kCoreServiceInit[] =
{{"service", H}, {"node", H}, {"transport_service", H}, {"name", T}};
constexpr FieldSpec kCoreTimerInit[] = {{"timer", H}, {"period_ns", I}};
constexpr FieldSpec kCoreLifecycleStateMachineInit[] = {{"node", H}, {"sm", H}};
constexpr FieldSpec kCoreLifecycleTransition[] =
{{"sm", H}, {"start_label", T}, {"goal_label", T}};

constexpr FieldSpec kTransportPublisherInit[] = {{"transport_pub", H}, {"gid", U}};
constexpr FieldSpec kTransportSubscriptionInit[] = {{"transport_sub", H}, {"gid", U}};
constexpr FieldSpec kTransportPublish[] = {{"message", H}};
constexpr FieldSpec kTransportTake[] =
{{"transport_sub", H}, {"message", H}, {"source_timestamp_ns", I}, {"taken", B}};

constexpr auto kInit = EventKind::initialization;
constexpr auto kRun = EventKind::runtime;
constexpr auto kNone = HotPath::none;
constexpr auto kPub = HotPath::publish_path;
constexpr auto kRecv = HotPath::receive_path;

constexpr TracepointDescriptor kCatalog[kTracepointCount] = {
  {TracepointId::api_subscription_init, "api_subscription_init",
    Layer::api, kInit, kNone, kApiSubscriptionInit},
  {TracepointId::api_subscription_callback_added, "api_subscription_callback_added",
    Layer::api, kInit, kNone, kApiSubscriptionCallbackAdded},
  {TracepointId::api_publish, "api_publish",
    Layer::api, kRun, kPub, kApiPublish},
  {TracepointId::api_take, "api_take",
    Layer::api, kRun, kRecv, kApiTake},
  {TracepointId::api_service_callback_added, "api_service_callback_added",
    Layer::api, kInit, kNone, kApiServiceCallbackAdded},
  {TracepointId::api_timer_callback_added, "api_timer_callback_added",
    Layer::api, kInit, kNone, kApiTimerCallbackAdded},
  {TracepointId::api_timer_link_node, "api_timer_link_node",
    Layer::api, kInit, kNone, kApiTimerLinkNode},
  {TracepointId::api_callback_register, "api_callback_register",
    Layer::api, kInit, kNone, kApiCallbackRegister},
  {TracepointId::callback_start, "callback_start",
    Layer::api, kRun, kRecv, kCallbackStart},
  {TracepointId::callback_end, "callback_end",
    Layer::api, kRun, kNone, kCallbackEnd},
  {TracepointId::api_executor_get_next_ready, "api_executor_get_next_ready",
    Layer::api, kRun, kRecv, {}},
  {TracepointId::api_executor_wait_for_work, "api_executor_wait_for_work",
    Layer::api, kRun, kRecv, kApiExecutorWaitForWork},
  {TracepointId::api_executor_execute, "api_executor_execute",
    Layer::api, kRun, kRecv, kApiExecutorExecute},
  {TracepointId::core_init, "core_init",
    Layer::core, kInit, kNone, kCoreInit},
  {TracepointId::core_node_init, "core_node_init",
    Layer::core, kInit, kNone, kCoreNodeInit},
  {TracepointId::core_publisher_init, "core_publisher_init",
    Layer::core, kInit, kNone, kCorePublisherInit},
  {TracepointId::core_subscription_init, "core_subscription_init",
    Layer::core, kInit, kNone, kCoreSubscriptionInit},
  {TracepointId::core_publish, "core_publish",
    Layer::core, kRun, kPub, kCorePublish},
  {TracepointId::core_take, "core_take",
    Layer::core, kRun, kRecv, kCoreTake},
  {TracepointId::core_client_init, "core_client_init",
    Layer::core, kInit, kNone, kCoreClientInit},
  {TracepointId::core_service_init, "core_service_init",
    Layer::core, kInit, kNone, kCoreServiceInit},
  {TracepointId::core_timer_init, "core_timer_init",
    Layer::core, kInit, kNone, kCoreTimerInit},
  {TracepointId::core_lifecycle_state_machine_init, "core_lifecycle_state_machine_init",
    Layer::core, kInit, kNone, kCoreLifecycleStateMachineInit},
  {TracepointId::core_lifecycle_transition, "core_lifecycle_transition",
    Layer::core, kRun, kNone, kCoreLifecycleTransition},
  {TracepointId::transport_publisher_init, "transport_publisher_init",
    Layer::transport, kInit, kNone, kTransportPublisherInit},
  {TracepointId::transport_subscription_init, "transport_subscription_init",
    Layer::transport, kInit, kNone, kTransportSubscriptionInit},
  {TracepointId::transport_publish, "transport_publish",
    Layer::transport, kRun, kPub, kTransportPublish},
  {TracepointId::transport_take, "transport_take",
    Layer::transport, kRun, kRecv, kTransportTake},
};

constexpr std::size_t kFixedWidth[5] = {8, 8, 8, 1, 0};

void store_le(uint8_t * dst, uint64_t value, std::size_t width)
{
  for (std::size_t i = 0; i < width; ++i) {
    dst[i] = static_cast<uint8_t>(value >> (8 * i));
  }
}

uint64_t load_le(const uint8_t * src, std::size_t width)
{
  uint64_t value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    value |= static_cast<uint64_t>(src[i]) << (8 * i);
  }
  return value;
}

}  // namespace

std::span<const TracepointDescriptor> catalog()
{
  return {kCatalog, kTracepointCount};
}

const TracepointDescriptor & descriptor_of(TracepointId id)
{
  return kCatalog[static_cast<std::size_t>(id)];
}

const TracepointDescriptor * find_descriptor(std::string_view name)
{
  for (const auto & descriptor : kCatalog) {
    if (descriptor.name == name) {
      return &descriptor;
    }
  }
  return nullptr;
}

std::string_view to_string(TracepointId id)
{
  return descriptor_of(id).name;
}

std::string_view to_string(Layer layer)
{
  switch (layer) {
    case Layer::api: return "api";
    case Layer::core: return "core";
    case Layer::transport: return "transport";
  }
  return "?";
}

void validate_payload(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload)
{
  const auto & schema = descriptor.payload_schema;
  if (payload.size() != schema.size()) {
    throw Error(
            ErrorCode::schema_mismatch,
            std::string(descriptor.name) + ": expected " + std::to_string(schema.size()) +
            " fields, got " + std::to_string(payload.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (field_tag(payload[i]) != schema[i].type) {
      throw Error(
              ErrorCode::schema_mismatch,
              std::string(descriptor.name) + ": field '" + std::string(schema[i].name) +
              "' has wrong type");
    }
    if (schema[i].type == FieldType::text &&
      std::get<std::string>(payload[i]).size() > 0xFFFF)
    {
      throw Error(
              ErrorCode::schema_mismatch,
              std::string(descriptor.name) + ": text field '" + std::string(schema[i].name) +
              "' exceeds 65535 bytes");
    }
  }
}

std::size_t encoded_payload_size(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload)
{
  std::size_t total = 0;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const auto type = descriptor.payload_schema[i].type;
    if (type == FieldType::text) {
      total += 2 + std::get<std::string>(payload[i]).size();
    } else {
      total += kFixedWidth[static_cast<std::size_t>(type)];
    }
  }
  return total;
}

std::size_t encode_payload_to(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload, uint8_t * dst)
{
  uint8_t * out = dst;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const auto & value = payload[i];
    switch (descriptor.payload_schema[i].type) {
      case FieldType::handle:
        store_le(out, std::get<Handle>(value).value, 8);
        out += 8;
        break;
      case FieldType::uint64:
        store_le(out, std::get<uint64_t>(value), 8);
        out += 8;
        break;
      case FieldType::int64:
        store_le(out, static_cast<uint64_t>(std::get<int64_t>(value)), 8);
        out += 8;
        break;
      case FieldType::boolean:
        *out++ = std::get<bool>(value) ? 1 : 0;
        break;
      case FieldType::text: {
          const auto & text = std::get<std::string>(value);
          store_le(out, text.size(), 2);
          out += 2;
          std::memcpy(out, text.data(), text.size());
          out += text.size();
          break;
        }
    }
  }
  return static_cast<std::size_t>(out - dst);
}

std::vector<uint8_t> encode_payload(
  const TracepointDescriptor & descriptor, std::span<const FieldValue> payload)
{
  validate_payload(descriptor, payload);
  std::vector<uint8_t> bytes(encoded_payload_size(descriptor, payload));
  encode_payload_to(descriptor, payload, bytes.data());
  return bytes;
}

std::vector<FieldValue> decode_payload(
  const TracepointDescriptor & descriptor, std::span<const uint8_t> bytes)
{
  std::vector<FieldValue> payload;
  payload.reserve(descriptor.payload_schema.size());
  std::size_t pos = 0;
  const auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) {
        throw Error(
                ErrorCode::malformed_payload,
                std::string(descriptor.name) + ": truncated payload");
      }
    };
  for (const auto & field : descriptor.payload_schema) {
    switch (field.type) {
      case FieldType::handle:
        need(8);
        payload.emplace_back(Handle{load_le(bytes.data() + pos, 8)});
        pos += 8;
        break;
      case FieldType::uint64:
        need(8);
        payload.emplace_back(load_le(bytes.data() + pos, 8));
        pos += 8;
        break;
      case FieldType::int64:
        need(8);
        payload.emplace_back(static_cast<int64_t>(load_le(bytes.data() + pos, 8)));
        pos += 8;
        break;
      case FieldType::boolean: {
          need(1);
          const uint8_t raw = bytes[pos];
          if (raw > 1) {
            throw Error(
                    ErrorCode::malformed_payload,
                    std::string(descriptor.name) + ": bad boolean byte");
          }
          payload.emplace_back(raw == 1);
          pos += 1;
          break;
        }
      case FieldType::text: {
          need(2);
          const auto len = static_cast<std::size_t>(load_le(bytes.data() + pos, 2));
          pos += 2;
          need(len);
          payload.emplace_back(
            std::string(reinterpret_cast<const char *>(bytes.data() + pos), len));
          pos += len;
          break;
        }
    }
  }
  if (pos != bytes.size()) {
    throw Error(
            ErrorCode::malformed_payload,
            std::string(descriptor.name) + ": trailing payload bytes");
  }
  return payload;
}

}  // namespace pt
