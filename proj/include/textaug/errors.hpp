#pragma once

#include <stdexcept>
#include <string>

namespace textaug {

/// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration values (bad dimensions, out-of-range rates, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files: CSV schema/row problems, bad .vec rows, bad TSV.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File system problems (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A runtime argument violates an operation's preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or was asked to run on unusable data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. single-class ROC).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace textaug
