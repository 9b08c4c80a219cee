#pragma once

#include <stdexcept>
#include <string>

namespace uwfl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A rule tried to do something the protocol forbids, e.g. transmit on an
/// infeasible link. Always indicates a bug in the calling rule.
class ProtocolError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Non-finite values produced during training or quantization.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; message carries the offending key and line.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input files.
class LoadError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace uwfl
