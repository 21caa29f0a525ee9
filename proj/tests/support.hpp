#pragma once

#include <functional>
#include <optional>

#include "cylbif/error.hpp"

namespace testing_support {

// Kind of the cylbif::Error thrown by fn, or nullopt if it returned normally.
inline std::optional<cylbif::ErrorKind> error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const cylbif::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace testing_support

#define REQUIRE_ERROR_KIND(expr, kind) \
  REQUIRE(testing_support::error_kind([&] { (void)(expr); }) == std::optional<cylbif::ErrorKind>(kind))
