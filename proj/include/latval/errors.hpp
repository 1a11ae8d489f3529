#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latval {

// A requested computation exceeds the configured size caps.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// External input (files, keys, worth maps) failed validation.
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver did not converge; carries the residual history.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residual_history(std::move(residuals)) {}

  std::vector<double> residual_history;
};

}  // namespace latval
