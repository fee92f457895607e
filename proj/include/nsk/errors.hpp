#ifndef NSK_ERRORS_HPP
#define NSK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nsk {

// Bad user input: malformed CSV, invalid flag combinations, contract violations.
class input_error : public std::invalid_argument {
 public:
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical breakdown: PSD violation beyond tolerance, overflow, failed Cholesky.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nsk

#endif
