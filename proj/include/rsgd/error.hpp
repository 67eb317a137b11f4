// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsgd {

enum class ErrorCode {
  InvalidParameter,
  Precondition,
  EmptyDataset,
  Factorization,
  MissingIterate,
  InvalidSpec,
  WindowViolation,
  InvalidInitialization,
  DimensionMismatch,
  SingularSystem,
  Parse,
  Schema,
  MissingColumn,
  NonNumericCell,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace rsgd
