#ifndef VARPG_ERRORS_HPP
#define VARPG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace varpg {

// Thrown when an operation's preconditions are violated (empty batch,
// missing alpha, malformed split, dimension mismatch, ...).
struct invalid_input : std::invalid_argument {
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when a normalizer (variance, semi-variance, KDE density) is
// numerically zero. Trainers catch this and skip the variability term.
struct degenerate_scale_error : std::runtime_error {
  explicit degenerate_scale_error(const std::string& what) : std::runtime_error(what) {}
};

// Zero-variance sample for a kernel density estimate.
struct degenerate_density_error : degenerate_scale_error {
  explicit degenerate_density_error(const std::string& what) : degenerate_scale_error(what) {}
};

// Malformed ASCII maze map; message carries row/column diagnostics.
struct map_error : std::runtime_error {
  explicit map_error(const std::string& what) : std::runtime_error(what) {}
};

// Exhaustive enumeration would exceed the configured path budget.
struct oracle_budget_error : std::runtime_error {
  explicit oracle_budget_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace varpg

#endif  // VARPG_ERRORS_HPP
