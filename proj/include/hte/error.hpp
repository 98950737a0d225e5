#pragma once

#include <stdexcept>
#include <string>

namespace hte {

// Base for every error raised by the library. `module` names the component
// that failed so the CLI can report where a pipeline stopped.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Input files or column mappings that do not match what was asked for.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Data that parses but violates a dataset invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Mismatched lengths or widths between aligned inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Too few clusters, rows or arms for an estimator to run.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A quantity is mathematically undefined for the given input (zero variance,
// an empty arm inside a group, a singular design).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace hte
