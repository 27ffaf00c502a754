#include "pt/error.hpp"

namespace pt
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::malformed_payload: return "MalformedPayload";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::invalid_pattern: return "InvalidPattern";
    case ErrorCode::already_recording: return "AlreadyRecording";
    case ErrorCode::already_stopped: return "AlreadyStopped";
    case ErrorCode::flush_failure: return "FlushFailure";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::truncated_file: return "TruncatedFile";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::unsupported_version: return "UnsupportedVersion";
    case ErrorCode::unknown_tracepoint: return "UnknownTracepointId";
    case ErrorCode::duplicate_node_name: return "DuplicateNodeName";
    case ErrorCode::unknown_node: return "UnknownNode";
    case ErrorCode::inactive_lifecycle_node: return "InactiveLifecycleNode";
    case ErrorCode::invalid_period: return "InvalidPeriod";
    case ErrorCode::unknown_service: return "UnknownService";
    case ErrorCode::illegal_transition: return "IllegalTransition";
    case ErrorCode::no_nodes: return "NoNodes";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::schema_error: return "SchemaError";
    case ErrorCode::spawn_failure: return "SpawnFailure";
    case ErrorCode::inconsistent_trace: return "InconsistentTrace";
    case ErrorCode::unknown_timer: return "UnknownTimer";
    case ErrorCode::cell_mismatch: return "CellMismatch";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::overrun: return "Overrun";
    case ErrorCode::no_active_session: return "NoActiveSession";
  }
  return "UnknownError";
}

}  // namespace pt
