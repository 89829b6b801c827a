#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grid5g {

// Parameter outside its admissible domain (numerology, Qm, time steps, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad runtime input to a pure function (CQI out of range, empty trace, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Diagnostic {
  int line = 0;  // 0 when the problem is not tied to a source line
  std::string message;
};

// Scenario failed validation; carries every violated invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diags)
      : std::runtime_error(summarize(diags)), diagnostics_(std::move(diags)) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& diags) {
    std::string out = "scenario invalid:";
    for (const auto& d : diags) {
      out += "\n  ";
      if (d.line > 0) out += "line " + std::to_string(d.line) + ": ";
      out += d.message;
    }
    return out;
  }

  std::vector<Diagnostic> diagnostics_;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// step_tti() called after the scenario duration has elapsed.
class EndOfSimulation : public std::runtime_error {
 public:
  EndOfSimulation() : std::runtime_error("simulation already reached its duration") {}
};

}  // namespace grid5g
