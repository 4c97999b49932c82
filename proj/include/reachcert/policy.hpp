#pragma once

#include <functional>
#include <string>

#include "reachcert/core.hpp"

namespace reachcert {

/// Black-box state-feedback policy. The verification stack only evaluates it.
struct PolicyHandle {
  std::string id;
  std::function<ControlVector(const StateVector&)> evaluate;
  bool deterministic = true;

  ControlVector operator()(const StateVector& x) const {
    require(static_cast<bool>(evaluate), "policy '" + id + "' has no evaluation function");
    return evaluate(x);
  }
};

}  // namespace reachcert
