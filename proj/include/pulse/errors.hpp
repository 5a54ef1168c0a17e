#pragma once

#include <stdexcept>
#include <string>

namespace pulse {

// Malformed textual input (topology strings, spike dumps, report files).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally well-formed input that violates a model invariant.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure; the message always names the path.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Real value outside the representable fixed-point range.
struct FxRangeError : std::range_error {
  explicit FxRangeError(const std::string& msg) : std::range_error(msg) {}
};

}  // namespace pulse
