#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace intdiff {

/// Base class for every error raised by the library. `code()` is a stable
/// kebab-case identifier that the CLI forwards verbatim in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Evaluation outside the open state space (l, r).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message) : Error("domain", message) {}
};

/// Scale/speed density not integrable, or not resolvable on a finite grid.
class NotErgodicError : public Error {
 public:
  explicit NotErgodicError(const std::string& message)
      : Error("model-not-ergodic", message) {}
};

class DegeneratePredictorError : public Error {
 public:
  explicit DegeneratePredictorError(const std::string& message)
      : Error("degenerate-predictor", message) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message)
      : Error("precondition", message) {}
};

class BoundaryDegeneracyError : public Error {
 public:
  explicit BoundaryDegeneracyError(const std::string& message)
      : Error("boundary-degeneracy", message) {}
};

class SimulationDivergedError : public Error {
 public:
  SimulationDivergedError(std::size_t step, const std::string& message)
      : Error("simulation-diverged", message), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class DiagnosticsUnreliableError : public Error {
 public:
  explicit DiagnosticsUnreliableError(const std::string& message)
      : Error("diagnostics-unreliable", message) {}
};

/// No start of the multistart solver converged. Carries the best iterate.
class NoRootError : public Error {
 public:
  NoRootError(std::vector<double> best_theta, double best_norm, const std::string& message)
      : Error("no-root", message), best_theta_(std::move(best_theta)), best_norm_(best_norm) {}

  const std::vector<double>& best_theta() const noexcept { return best_theta_; }
  double best_norm() const noexcept { return best_norm_; }

 private:
  std::vector<double> best_theta_;
  double best_norm_;
};

class InvalidStudyError : public Error {
 public:
  InvalidStudyError(std::size_t grid_id, std::size_t failed, std::size_t replications,
                    const std::string& message)
      : Error("invalid-study", message),
        grid_id_(grid_id),
        failed_(failed),
        replications_(replications) {}

  std::size_t grid_id() const noexcept { return grid_id_; }
  std::size_t failed() const noexcept { return failed_; }
  std::size_t replications() const noexcept { return replications_; }

 private:
  std::size_t grid_id_;
  std::size_t failed_;
  std::size_t replications_;
};

/// Malformed or invalid run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message, int line = 0)
      : Error("config", message), field_(field), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

}  // namespace intdiff
