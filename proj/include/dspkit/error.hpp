#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dspkit {

enum class ErrorCode {
  invalid_input,
  psi_undefined,
  invalid_choice,
  not_applicable,
  resource_exceeded,
  sampling_exhausted,
  kappa_not_two,
  unsupported_scalar,
  slot_collision,
  ill_conditioned,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::psi_undefined: return "psi_undefined";
    case ErrorCode::invalid_choice: return "invalid_choice";
    case ErrorCode::not_applicable: return "not_applicable";
    case ErrorCode::resource_exceeded: return "resource_exceeded";
    case ErrorCode::sampling_exhausted: return "sampling_exhausted";
    case ErrorCode::kappa_not_two: return "kappa_not_two";
    case ErrorCode::unsupported_scalar: return "unsupported_scalar";
    case ErrorCode::slot_collision: return "slot_collision";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// front ends can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dspkit
