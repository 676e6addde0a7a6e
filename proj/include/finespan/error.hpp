#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finespan {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: invalid regex, duplicate function names, missing paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data. Carries the 1-based record number
/// when the failure can be pinned to a single record (0 otherwise).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t record = 0)
      : Error(record ? what + " (record " + std::to_string(record) + ")" : what),
        record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

}  // namespace finespan
