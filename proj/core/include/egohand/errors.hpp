#pragma once

#include <stdexcept>
#include <string>

namespace egohand {

// Base class for all library errors. Subclasses are declared next to the
// operation that throws them.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace egohand
