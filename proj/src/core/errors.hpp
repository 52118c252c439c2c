#pragma once

#include <stdexcept>
#include <string>

namespace agcnet {

/// File-system or OS-level failure (missing file, unwritable path).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input content (CSV cells, config keys, checkpoint bytes).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numeric contract violation (overflow guard, non-finite gradient, divergence).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace agcnet
