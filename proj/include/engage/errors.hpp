#pragma once

#include <stdexcept>
#include <string>

namespace engage {

// Bad or malformed input (files, flags, schemas). CLI exit code 1.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input parsed fine but the data cannot support the requested computation
// (too few samples, zero variance, degenerate split). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace engage
