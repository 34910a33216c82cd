#pragma once

#include <stdexcept>
#include <string>

namespace anytime {

// Bad configuration or malformed input (budgets, priors, dimensions, files).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Caller violated an operation precondition (e.g. passing the stop token as a probe).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A gradient or parameter vector picked up NaN/Inf. Carries a human-readable dump.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

// Exact enumeration would visit more paths than the configured cap.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  EnumerationCapExceeded(std::size_t visited, std::size_t cap)
      : std::runtime_error("enumeration exceeded cap: visited more than " + std::to_string(cap) +
                           " paths (stopped at " + std::to_string(visited) + ")"),
        visited_(visited),
        cap_(cap) {}
  std::size_t visited() const noexcept { return visited_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t visited_;
  std::size_t cap_;
};

}  // namespace anytime
