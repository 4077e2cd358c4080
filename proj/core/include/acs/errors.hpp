#pragma once

#include <stdexcept>
#include <string>

namespace acs {

// Malformed input that cannot be parsed (file syntax, unsupported codecs).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed input that violates a contract (duplicate labels, gaps,
// dimension mismatches, unnormalized probability rows).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures (missing files, unwritable directories).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Alignment instance that cannot satisfy the minimum-chunk constraints.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace acs
