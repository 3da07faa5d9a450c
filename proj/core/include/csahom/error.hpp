#pragma once

// Error taxonomy for the homogenization library.  All recoverable failures are
// reported as exceptions derived from csahom::Error; the CLI maps them to
// process exit codes (see runner.hpp).

#include <stdexcept>
#include <string>

namespace csahom {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (mesh or config): carries a line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, const std::string& file, int line = -1)
      : Error(format(msg, file, line)), file_(file), line_(line) {}
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& msg, const std::string& file, int line);
  std::string file_;
  int line_;
};

/// Invalid or inconsistent run configuration (unknown key, missing material, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Element inversion: a deformation update produced det <= 0 somewhere.
class InversionError : public Error {
 public:
  InversionError(const std::string& where, int element, double det);
  int element() const { return element_; }
  double det() const { return det_; }

 private:
  int element_;
  double det_;
};

/// A Newton-type iteration exhausted its budget without meeting tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& where, int iterations, double residual);
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// A sparse factorization or linear solve failed outright.
class SolveError : public Error {
 public:
  using Error::Error;
};

}  // namespace csahom
