#ifndef SCMC_ERRORS_HPP
#define SCMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace scmc {

// Weighted ensemble collapsed (all weights zero / NaN), or an ABC stage ran
// out of matching particles. Maps to exit code 3 in the CLI.
struct degenerate_error : std::runtime_error {
    explicit degenerate_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: unstable ODE trajectory, non-positive-definite posterior
// covariance, overflowing simulator state. Maps to exit code 4 in the CLI.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or arguments. Maps to exit code 2 in the CLI.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scmc

#endif  // SCMC_ERRORS_HPP
