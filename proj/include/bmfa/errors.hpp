#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmfa {

enum class ErrorCode {
  // configuration
  QTooLarge,
  KMaxTooSmall,
  GammaViolatesEmptying,
  InvalidConfig,
  DirectoryExists,
  // data
  DimensionMismatch,
  LengthMismatch,
  ZeroVarianceColumn,
  RaggedRows,
  NonNumericCell,
  FileNotFound,
  IoFailure,
  // numerical
  NonFiniteInput,
  CholeskyFailure,
  NonPositiveAlpha,
  NonPositiveParam,
  AllWeightsZero,
  NonFiniteLoglik,
  EmptyTrace,
  NoIterationsAtKMap,
  AllModelsFailed,
};

enum class ErrorCategory { Config, Data, Numerical };

[[nodiscard]] std::string_view error_code_name(ErrorCode code) noexcept;
[[nodiscard]] ErrorCategory error_category(ErrorCode code) noexcept;

/// Process exit status for an error category: 2 config, 3 data, 4 numerical.
[[nodiscard]] int exit_status(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] ErrorCategory category() const noexcept {
    return error_category(code_);
  }

private:
  ErrorCode code_;
};

} // namespace bmfa
