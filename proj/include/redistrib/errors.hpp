#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace redistrib {

/// A caller broke a documented precondition (bad dimension, bad n, negative epsilon...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite value showed up during evaluation.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t layer)
      : std::runtime_error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at byte " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// The LP/MIP machinery failed (cycling guard, non-finite big-M, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace redistrib
