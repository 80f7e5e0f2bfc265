#pragma once

#include <stdexcept>
#include <string>

namespace taskmarket {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's domain (z outside [0,1], negative counts, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or file; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Every executor has infinite cost at a task.
class InfeasibleTaskError : public Error {
 public:
  using Error::Error;
};

// Hiring shares are undefined because no task is performed by labor.
class AllDigitalError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskmarket
