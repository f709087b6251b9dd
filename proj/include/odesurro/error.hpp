#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace odesurro {

// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorKind {
  usage,        // bad arguments or configuration
  data,         // malformed/missing files, numeric blow-up, shape problems
  convergence,  // training did not reach its threshold
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DegenerateDenominator : public Error {
 public:
  explicit DegenerateDenominator(const std::string& term)
      : Error(ErrorKind::data, "degenerate denominator in " + term) {}
};

class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(std::size_t step)
      : Error(ErrorKind::data, "non-finite state at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class TooManyRetries : public Error {
 public:
  explicit TooManyRetries(std::uint64_t run_id)
      : Error(ErrorKind::data, "run " + std::to_string(run_id) + " blew up on every retry"),
        run_id_(run_id) {}
  std::uint64_t run_id() const noexcept { return run_id_; }

 private:
  std::uint64_t run_id_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::data, "I/O error: " + what) {}
};

class BadMagic : public Error {
 public:
  explicit BadMagic(const std::string& what) : Error(ErrorKind::data, "bad magic: " + what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorKind::data, "dimension mismatch: " + what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what)
      : Error(ErrorKind::data, "shape mismatch: " + what) {}
};

class RunTooShort : public Error {
 public:
  explicit RunTooShort(std::uint64_t run_id)
      : Error(ErrorKind::data, "run " + std::to_string(run_id) + " too short for requested pairing"),
        run_id_(run_id) {}
  std::uint64_t run_id() const noexcept { return run_id_; }

 private:
  std::uint64_t run_id_;
};

class NonFiniteGradient : public Error {
 public:
  explicit NonFiniteGradient(const std::string& where)
      : Error(ErrorKind::data, "non-finite gradient: " + where) {}
};

class ZeroTargetNorm : public Error {
 public:
  ZeroTargetNorm() : Error(ErrorKind::data, "evaluation target has zero norm") {}
};

class ClockResolutionTooCoarse : public Error {
 public:
  explicit ClockResolutionTooCoarse(const std::string& what)
      : Error(ErrorKind::usage, "clock resolution too coarse: " + what) {}
};

class MissingCheckpoint : public Error {
 public:
  explicit MissingCheckpoint(std::uint32_t lookahead)
      : Error(ErrorKind::data, "no checkpoint for lookahead " + std::to_string(lookahead)),
        lookahead_(lookahead) {}
  std::uint32_t lookahead() const noexcept { return lookahead_; }

 private:
  std::uint32_t lookahead_;
};

class SchemaMismatch : public Error {
 public:
  explicit SchemaMismatch(const std::string& what)
      : Error(ErrorKind::data, "schema mismatch: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, "config: " + what) {}
};

}  // namespace odesurro
