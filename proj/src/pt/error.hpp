#ifndef PT__ERROR_HPP_
#define PT__ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pt
{

enum class ErrorCode
{
  schema_mismatch,
  malformed_payload,
  invalid_config,
  invalid_pattern,
  already_recording,
  already_stopped,
  flush_failure,
  io_failure,
  truncated_file,
  bad_magic,
  unsupported_version,
  unknown_tracepoint,
  duplicate_node_name,
  unknown_node,
  inactive_lifecycle_node,
  invalid_period,
  unknown_service,
  illegal_transition,
  no_nodes,
  parse_error,
  schema_error,
  spawn_failure,
  inconsistent_trace,
  unknown_timer,
  cell_mismatch,
  empty_input,
  overrun,
  no_active_session,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept {return code_;}

private:
  ErrorCode code_;
};

}  // namespace pt

#endif  // PT__ERROR_HPP_
