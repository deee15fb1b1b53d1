#pragma once

#include <stdexcept>
#include <string>

namespace levelset {

/// A parameter set violates a domain constraint (named in the message).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Grid or mode set cannot represent the requested operation.
class ResolutionError : public std::invalid_argument {
 public:
  explicit ResolutionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Solver blow-up, divergent series, or estimator failure.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input files or configuration text.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace levelset
