#pragma once

#include <stdexcept>
#include <string>

namespace gdr {

// Bad or missing input data (files, records, vocabularies).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure: NaN/Inf encountered, degenerate masks, diverged training.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gdr
