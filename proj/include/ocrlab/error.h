#ifndef OCRLAB_ERROR_H_
#define OCRLAB_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ocrlab {

enum class ErrorCode {
  kInvalidArgument,
  kInconsistentState,
  kPolicyViolation,
  kUnknownElement,
  kWrongKind,
  kTooLarge,
  kExhaustedAttempts,
  kEncodingOverflow,
  kMissingLabels,
  kDecodeFailure,
  kBadThreshold,
  kDivisionByZeroOpt,
  kBadBracket,
  kDomainError,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; `code()`
// identifies the failure class so callers (notably the CLI) can map it to an
// exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ocrlab

#endif  // OCRLAB_ERROR_H_
