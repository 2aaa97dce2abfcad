#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pml {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// A matrix that has to be positive definite is not.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Input file problem. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IsolatedVertexError : public Error {
 public:
  IsolatedVertexError(const std::string& what, std::vector<std::size_t> vertices)
      : Error(what), vertices_(std::move(vertices)) {}
  const std::vector<std::size_t>& vertices() const { return vertices_; }

 private:
  std::vector<std::size_t> vertices_;
};

// Thrown when a dense matrix larger than the active DenseAllocationGuard
// limit is requested.
class AllocationGuardError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

}  // namespace pml
