#ifndef EVOSORT_ERROR_HPP_
#define EVOSORT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace evosort {

// Invalid configuration values, missing artifacts, mismatched dimensions.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Call sequence violated (e.g. step after done, stale cache).
class ProtocolError : public std::logic_error {
 public:
  explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

// Malformed or non-finite inputs.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite intermediate results, failed decompositions.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or unwritable files, malformed file contents.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evosort

#endif  // EVOSORT_ERROR_HPP_
