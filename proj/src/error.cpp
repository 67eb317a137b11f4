// SPDX-License-Identifier: Apache-2.0
#include "rsgd/error.hpp"

namespace rsgd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::Factorization: return "factorization";
    case ErrorCode::MissingIterate: return "missing-iterate";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::WindowViolation: return "window-violation";
    case ErrorCode::InvalidInitialization: return "invalid-initialization";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::MissingColumn: return "missing-column";
    case ErrorCode::NonNumericCell: return "non-numeric-cell";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace rsgd
