#pragma once

#include <stdexcept>
#include <string>

namespace biasrelax {

// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  Config = 2,
  Data = 3,
  Convergence = 4,
  Sampling = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& msg)
      : std::runtime_error(msg), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(ErrorCategory::Config, msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg) : Error(ErrorCategory::Convergence, msg) {}
};

struct SamplingError : Error {
  explicit SamplingError(const std::string& msg) : Error(ErrorCategory::Sampling, msg) {}
};

}  // namespace biasrelax
