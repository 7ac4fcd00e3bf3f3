#pragma once

#include <stdexcept>
#include <string>

namespace segreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A digit outside the alphabet of its position.
class InvalidDigitError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unrepresentable real input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an interface contract (dimension mismatch, empty candidate set, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The forward model produced something unusable, e.g. a non-finite loss.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `path` is a JSON-pointer to the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace segreg
