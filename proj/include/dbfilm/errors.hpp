#ifndef DBFILM_ERRORS_HPP
#define DBFILM_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace dbfilm {

// Base of every error thrown by the library. `kind()` is a short stable tag
// used by the CLI for its machine-parseable error line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};

class DegenerateGeometryError : public Error {
 public:
  DegenerateGeometryError(const std::string& curve, int segment)
      : Error("degenerate segment " + std::to_string(segment) + " on curve " + curve),
        curve_(curve),
        segment_(segment) {}
  const char* kind() const noexcept override { return "degenerate_geometry"; }
  const std::string& curve() const noexcept { return curve_; }
  int segment() const noexcept { return segment_; }

 private:
  std::string curve_;
  int segment_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, long step) : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  const char* kind() const noexcept override { return "solver"; }
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(int iterations, double residual, long step)
      : Error("picard iteration did not converge after " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual) + " (step " + std::to_string(step) + ")"),
        residual_(residual),
        step_(step) {}
  const char* kind() const noexcept override { return "nonconvergence"; }
  double residual() const noexcept { return residual_; }
  long step() const noexcept { return step_; }

 private:
  double residual_;
  long step_;
};

class SurgeryError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "surgery"; }
};

class InvalidRegionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_region"; }
};

class UnknownPresetError : public Error {
 public:
  explicit UnknownPresetError(const std::string& name) : Error("unknown preset '" + name + "'"), name_(name) {}
  const char* kind() const noexcept override { return "unknown_preset"; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// A library error re-raised by the time-marching driver with the time and
// island at which it happened. Keeps the kind of the original error.
class RunError : public Error {
 public:
  RunError(const Error& inner, double t, int island)
      : Error(std::string(inner.what()) + " [t=" + std::to_string(t) + ", island " + std::to_string(island) + "]"),
        kind_(inner.kind()),
        t_(t),
        island_(island) {}
  const char* kind() const noexcept override { return kind_.c_str(); }
  double time() const noexcept { return t_; }
  int island() const noexcept { return island_; }

 private:
  std::string kind_;
  double t_;
  int island_;
};

// Raised by config validation; carries one entry per offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const char* kind() const noexcept override { return "config"; }
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out += "; ";
      out += p[i];
    }
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace dbfilm

#endif
