#pragma once

#include <stdexcept>
#include <string>

namespace hrgc {

// Base of every domain error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of an operation (empty input, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

// A held-out source that also appears in the training bundle.
class LeakageError : public ContractError {
 public:
  using ContractError::ContractError;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, const std::string& what)
      : Error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

// File-system and format problems. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LoadError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace hrgc
