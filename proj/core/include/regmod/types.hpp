#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace regmod {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// 1-based constraint indices, ascending.
using IndexSet = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax or semantic problem in expression / problem-file text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// log of a nonpositive number, division by zero.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t offset)
      : Error(what + " (node at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Analysis could not run: infeasible anchor, no usable samples, subset cap.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace regmod
