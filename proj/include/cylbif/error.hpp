#ifndef CYLBIF_ERROR_HPP
#define CYLBIF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cylbif {

enum class ErrorKind {
  Validation,
  Domain,
  DegenerateInput,
  Overflow,
  Convergence,
  Stagnation,
  NoSolution,
  BranchNotFound,
  Coverage,
  InsufficientSpectrum,
  InvalidKernel,
  Resource,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Stagnation: return "stagnation";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::BranchNotFound: return "branch-not-found";
    case ErrorKind::Coverage: return "coverage";
    case ErrorKind::InsufficientSpectrum: return "insufficient-spectrum";
    case ErrorKind::InvalidKernel: return "invalid-kernel";
    case ErrorKind::Resource: return "resource";
  }
  return "unknown";
}

/// Every failure raised by the toolkit carries a kind so callers (and the
/// CLI exit-code contract) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Newton / eigen-iteration failures keep the last residual for reporting.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual,
                   ErrorKind kind = ErrorKind::Convergence)
      : Error(kind, what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace cylbif

#endif  // CYLBIF_ERROR_HPP
