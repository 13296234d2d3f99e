#pragma once

#include <stdexcept>
#include <string>

namespace audit {

// Base class for all toolkit errors. Each subclass corresponds to a
// failure category callers may want to handle separately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (bad row, bad number, bad label value).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input does not match the declared schema (missing column, wrong width).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A timestamp could not be resolved against the stress series.
class JoinError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset cannot be stratified (e.g. a class is missing).
class StratificationError : public Error {
 public:
  using Error::Error;
};

// Training preconditions violated (e.g. single-class data).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined on the given inputs (e.g. AUROC on one class).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Operation not available for this model family.
class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

// Remote scorer spoke the wire protocol incorrectly (bad JSON, score
// out of range). Never retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Remote scorer unreachable after bounded retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace audit
