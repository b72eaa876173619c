#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace msim {

// Input/config problems: the CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed document: carries the file and the path of the offending field.
struct SchemaError : ConfigError {
  SchemaError(const std::string& where, const std::string& what)
      : ConfigError(where + ": " + what), path(where) {}
  std::string path;
};

struct ValidationError : ConfigError {
  using ConfigError::ConfigError;
};

struct UnknownServiceError : ConfigError {
  explicit UnknownServiceError(const std::string& name)
      : ConfigError("unknown service \"" + name + "\""), service(name) {}
  std::string service;
};

struct CycleError : ConfigError {
  explicit CycleError(std::vector<std::string> c)
      : ConfigError("service graph contains a cycle: " + join(c)), cycle(std::move(c)) {}
  std::vector<std::string> cycle;

 private:
  static std::string join(const std::vector<std::string>& c) {
    std::string s;
    for (const auto& n : c) {
      if (!s.empty()) s += " -> ";
      s += n;
    }
    return s;
  }
};

struct IoError : ConfigError {
  using ConfigError::ConfigError;
};

// Internal invariant violations: the CLI maps these to exit code 2.
struct LogicError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace msim
