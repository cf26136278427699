#pragma once

#include <stdexcept>
#include <string>

namespace labelassoc {

// Bad or missing input data (files, records, shapes). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unparseable or out-of-range configuration. CLI exit code 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical or structural invariant broke at run time. CLI exit code 4.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes "warning: <msg>" to stderr.
void warn(const std::string& message);

}  // namespace labelassoc
