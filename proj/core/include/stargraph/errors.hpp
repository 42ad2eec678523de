#pragma once

#include <stdexcept>
#include <string>

namespace stargraph {

// Error categories map 1:1 onto the CLI exit-code contract
// (1 config, 2 solver, 3 degeneracy, 4 missing constants).

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct degeneracy_error : std::runtime_error {
  explicit degeneracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct missing_constant_error : std::runtime_error {
  explicit missing_constant_error(const std::string& msg, double order)
      : std::runtime_error(msg), first_unavailable_order(order) {}
  double first_unavailable_order;
};

}  // namespace stargraph
