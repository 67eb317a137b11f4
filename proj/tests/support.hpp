// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit tests.
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "rsgd/error.hpp"

namespace rsgd::test {

/// Code of the rsgd::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Message of the rsgd::Error thrown by f, or an empty string.
template <class F>
std::string error_message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

inline bool rel_close(double actual, double expected, double tol) {
  return std::abs(actual - expected) <= tol * std::abs(expected);
}

}  // namespace rsgd::test
