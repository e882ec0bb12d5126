#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ptsem {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input; carries the 1-based line number of the offending line.
struct ParseError : Error {
  ParseError(std::size_t line_number, const std::string& message)
      : Error("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
  std::size_t line;
};

// Illegal structural operation on a configuration (bad bond pairing,
// unknown site, value mismatch, ...).
struct StructureError : Error {
  using Error::Error;
};

// Caption or label generation requested with a required slot role absent.
struct MissingRoleError : Error {
  explicit MissingRoleError(const std::string& role_name)
      : Error("missing required role: " + role_name), role(role_name) {}
  std::string role;
};

// Exhaustive search refused because the state space exceeds the budget.
struct BudgetError : Error {
  BudgetError(std::uint64_t size, std::uint64_t budget)
      : Error("search space of " + std::to_string(size) +
              " states exceeds budget " + std::to_string(budget)),
        space_size(size) {}
  std::uint64_t space_size;
};

}  // namespace ptsem
