#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cr {

/// Sampling was requested from a distribution with zero total mass.
class EmptyDistributionError : public std::runtime_error {
public:
  explicit EmptyDistributionError(const std::string& what) : std::runtime_error(what) {}
};

/// A batch was requested from a buffer with no occupied slots.
class EmptyBufferError : public std::runtime_error {
public:
  explicit EmptyBufferError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration parse or validation failure; carries the offending field.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cr
