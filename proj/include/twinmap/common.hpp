#pragma once

#include <stdexcept>
#include <string>

namespace twinmap {

/// Which twin beam a quantity refers to.
enum class Arm { probe, conjugate };

/// Transverse axis of a knife edge or sweep.
enum class Axis { x, y };

/// Inputs outside the physical domain of a model (G < 1, zero shot noise, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed user input: scene files, map files, command-line values.
/// Line and column are 1-based; 0 means "not applicable".
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string &msg, int line = 0, int column = 0)
      : std::runtime_error(msg), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

inline const char *to_string(Arm arm) { return arm == Arm::probe ? "probe" : "conjugate"; }
inline const char *to_string(Axis axis) { return axis == Axis::x ? "x" : "y"; }

} // namespace twinmap
