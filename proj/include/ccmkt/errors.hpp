#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccmkt {

// Thrown when an input document does not match the expected schema.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a structurally valid document violates model invariants.
// Collects every failure so the caller sees all of them at once.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "validation failed:";
    for (const auto& s : issues) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

// Model-level failures discovered after a successful parse/validate.
class ModelInfeasibleError : public std::runtime_error {
 public:
  explicit ModelInfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the cleared market violates the blanket dispatch assumption
// (total served load must be positive for the load-price adder to exist).
class AssumptionViolationError : public std::runtime_error {
 public:
  explicit AssumptionViolationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computed solution fails an internal identity or a
// cost-recovery guarantee that the pricing scheme promises.
class AdequacyError : public std::runtime_error {
 public:
  explicit AdequacyError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown inside the bundled solver.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ccmkt
