#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "nuh/error.hpp"

namespace nuh::testing {

/// Runs `fn` and reports whether it threw nuh::Error of the given kind.
inline ::testing::AssertionResult throws_kind(const std::function<void()>& fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.kind() == kind) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "threw " << to_string(e.kind()) << ": " << e.what();
  }
  return ::testing::AssertionFailure() << "did not throw";
}

}  // namespace nuh::testing

#define EXPECT_NUH_ERROR(stmt, kind) EXPECT_TRUE(::nuh::testing::throws_kind([&] { (void)(stmt); }, kind))
