#include "sasim/error.hpp"

namespace sasim {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::contract_violation: return "contract violation";
    case ErrorKind::singular_composition: return "singular composition";
    case ErrorKind::propagation_diverged: return "propagation diverged";
    case ErrorKind::propagation_invalid: return "propagation invalid";
    case ErrorKind::initialization: return "initialization error";
    case ErrorKind::build: return "network build error";
    case ErrorKind::event: return "event error";
    case ErrorKind::solve: return "network solve error";
    case ErrorKind::non_convergence: return "interface non-convergence";
    case ErrorKind::fit: return "voltage fit error";
    case ErrorKind::step_underflow: return "step underflow";
    case ErrorKind::case_parse: return "case parse error";
    case ErrorKind::case_reference: return "case reference error";
    case ErrorKind::case_mismatch: return "case power-flow mismatch";
    case ErrorKind::comparison: return "comparison error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::missing_prerequisite: return "missing prerequisite";
  }
  return "unknown error";
}

int exit_code(ErrorKind kind) noexcept {
  // Stable numbering; documented in README.md. 0 = success, 2 = usage.
  switch (kind) {
    case ErrorKind::case_parse: return 3;
    case ErrorKind::case_reference: return 4;
    case ErrorKind::case_mismatch: return 5;
    case ErrorKind::initialization: return 6;
    case ErrorKind::non_convergence: return 7;
    case ErrorKind::propagation_diverged: return 8;
    case ErrorKind::propagation_invalid: return 8;
    case ErrorKind::step_underflow: return 9;
    case ErrorKind::solve: return 10;
    case ErrorKind::build: return 10;
    case ErrorKind::event: return 11;
    case ErrorKind::fit: return 12;
    case ErrorKind::comparison: return 13;
    case ErrorKind::io: return 14;
    case ErrorKind::missing_prerequisite: return 15;
    case ErrorKind::contract_violation: return 16;
    case ErrorKind::singular_composition: return 16;
  }
  return 1;
}

}  // namespace sasim
