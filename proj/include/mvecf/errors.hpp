#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mvecf {

// Error taxonomy maps onto CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericalError -> 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested top-k does not fit in the candidate universe.
class InsufficientUniverseError : public DataError {
 public:
  explicit InsufficientUniverseError(const std::string& msg) : DataError(msg) {}
};

// Optimizer hit max_iters before the KKT check passed; carries the best iterate.
class NonconvergenceError : public NumericalError {
 public:
  NonconvergenceError(const std::string& msg, std::vector<double> best)
      : NumericalError(msg), best_iterate(std::move(best)) {}
  std::vector<double> best_iterate;
};

}  // namespace mvecf
