#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpn2f {

// Base for every error raised on bad input or a violated contract. The CLI
// maps these to exit code 1; anything else escaping is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class VocabError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class PreprocessError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class CheckpointError : public Error {
 public:
  enum class Kind { Corrupt, Version, Io };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class ExecErrorCode {
  UnknownOperator,
  DanglingReference,
  DivisionByZero,
  DomainError,
  ArityError,
  UnknownSymbol,
  TypeError,
  SelfOutsideLambda,
  RecursionLimit,
};

const char* to_string(ExecErrorCode code);

class ExecError : public Error {
 public:
  ExecError(ExecErrorCode code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ExecErrorCode code() const { return code_; }

 private:
  ExecErrorCode code_;
};

}  // namespace tpn2f
