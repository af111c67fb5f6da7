#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mecorch {

/// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied a value outside an operation's contract (tick <= 0,
/// zero epochs, epsilon == 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A trace record failed validation. `index` is the zero-based record index.
class IngestError : public InputError {
 public:
  IngestError(std::size_t index, const std::string& what)
      : InputError("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NotEnoughData : public Error {
 public:
  NotEnoughData(std::size_t available, std::size_t required, const std::string& context = {})
      : Error("not enough data" + (context.empty() ? std::string{} : " for " + context) + ": have " +
              std::to_string(available) + ", need " + std::to_string(required)),
        available_(available),
        required_(required) {}
  std::size_t available() const noexcept { return available_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t available_;
  std::size_t required_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Application-context checksum did not match its payload.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// No MEC host is eligible to serve the vehicle.
class NoCandidate : public Error {
 public:
  using Error::Error;
};

/// Configuration failed validation; each issue is prefixed with its field path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration";
    for (const auto& issue : issues) out += "\n  " + issue;
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace mecorch
