#pragma once

#include <stdexcept>
#include <string>

namespace qcantor {

// Error categories with distinct CLI exit codes (see tools/).
// Plain value-domain violations use std::domain_error; too-short explicit
// base lists use std::out_of_range.

// A first-crossing or tail search ran past its configured cap.
struct horizon_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A witness construction has no valid digit to emit (empty window or set).
struct construction_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run configuration failed to parse or validate.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qcantor
