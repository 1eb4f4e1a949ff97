#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tqs {

// 64-bit everywhere by default; -DTQS_SINGLE_PRECISION trades accuracy for
// training speed. Tests and gradient checks assume double.
#ifdef TQS_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

// All failures carry a short machine-parseable code plus a process exit code
// (0 success, 2 config error, 3 data error, 4 numerical divergence).
class Error : public std::runtime_error {
 public:
  Error(int exit_code, std::string code, const std::string& msg)
      : std::runtime_error(msg), exit_code_(exit_code), code_(std::move(code)) {}
  int exit_code() const { return exit_code_; }
  const std::string& code() const { return code_; }

 private:
  int exit_code_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(2, "config", msg) {}
};

// Dimension/shape violations are contract errors; the CLI maps them to the
// config exit code since they stem from inconsistent configs or checkpoints.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(2, "shape", msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(3, "data", msg) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(4, "divergence", msg) {}
};

}  // namespace tqs
