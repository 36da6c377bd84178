#pragma once

#include <stdexcept>
#include <string>

namespace aggerr {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural violation of a network, shock or table invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input file.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Bad configuration (overlapping degree bins, unknown keys, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A quantity that is not defined for the given input, e.g. the normalized
// input vector of a firm without suppliers.
class UndefinedValue : public Error {
 public:
  using Error::Error;
};

// The sampler cannot reach a target with shocks in [0,1].
class InfeasibleTarget : public Error {
 public:
  using Error::Error;
};

// Iteration cap hit before the residuals dropped below epsilon.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residualIn, double residualOut)
      : Error(what + " (res_in=" + std::to_string(residualIn) +
              ", res_out=" + std::to_string(residualOut) + ")"),
        residualIn_(residualIn),
        residualOut_(residualOut) {}

  double residualIn() const noexcept { return residualIn_; }
  double residualOut() const noexcept { return residualOut_; }

 private:
  double residualIn_;
  double residualOut_;
};

// Wraps any failure inside the experiment pipeline with the stage it came from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace aggerr
