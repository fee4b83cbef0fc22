#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rnncomp {

// Precondition violated: bad shape, rank out of range, empty input.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative method hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Malformed or unreadable external data (IDX files, corpora, archives).
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& source, std::size_t offset, const std::string& what)
      : std::runtime_error(source + " @" + std::to_string(offset) + ": " + what),
        source_(source),
        offset_(offset) {}
  const std::string& source() const noexcept { return source_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string source_;
  std::size_t offset_;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rnncomp
