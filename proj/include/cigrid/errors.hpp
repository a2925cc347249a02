#pragma once

#include <stdexcept>
#include <string>

namespace cigrid {

/// Stable error codes; each validation check reports a distinct code.
enum class errc {
  syntax_error,
  missing_matrix,
  malformed_number,
  no_reference_bus,
  multiple_reference_buses,
  bad_base_mva,
  unknown_bus,
  zero_reactance,
  bad_gencost_model,
  gencost_count_mismatch,
  duplicate_substation,
  empty_substation,
  coverage_gap,
  overlap_generation,
  goal_out_of_range,
  bad_tau,
  bad_config_value,
  grid_not_connected,
  zero_capacity_goal,
  unbalanced_injection,
  unknown_line,
  sced_infeasible,
  nonconvex_cost,
  degenerate_goal,
  lp_failed,
  bad_model,
  undetermined,
  bad_attack_vector,
  jointly_infeasible,
  precondition,
  stale_kb,
  bad_format,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::syntax_error: return "syntax_error";
    case errc::missing_matrix: return "missing_matrix";
    case errc::malformed_number: return "malformed_number";
    case errc::no_reference_bus: return "no_reference_bus";
    case errc::multiple_reference_buses: return "multiple_reference_buses";
    case errc::bad_base_mva: return "bad_base_mva";
    case errc::unknown_bus: return "unknown_bus";
    case errc::zero_reactance: return "zero_reactance";
    case errc::bad_gencost_model: return "bad_gencost_model";
    case errc::gencost_count_mismatch: return "gencost_count_mismatch";
    case errc::duplicate_substation: return "duplicate_substation";
    case errc::empty_substation: return "empty_substation";
    case errc::coverage_gap: return "coverage_gap";
    case errc::overlap_generation: return "overlap_generation";
    case errc::goal_out_of_range: return "goal_out_of_range";
    case errc::bad_tau: return "bad_tau";
    case errc::bad_config_value: return "bad_config_value";
    case errc::grid_not_connected: return "grid_not_connected";
    case errc::zero_capacity_goal: return "zero_capacity_goal";
    case errc::unbalanced_injection: return "unbalanced_injection";
    case errc::unknown_line: return "unknown_line";
    case errc::sced_infeasible: return "sced_infeasible";
    case errc::nonconvex_cost: return "nonconvex_cost";
    case errc::degenerate_goal: return "degenerate_goal";
    case errc::lp_failed: return "lp_failed";
    case errc::bad_model: return "bad_model";
    case errc::undetermined: return "undetermined";
    case errc::bad_attack_vector: return "bad_attack_vector";
    case errc::jointly_infeasible: return "jointly_infeasible";
    case errc::precondition: return "precondition";
    case errc::stale_kb: return "stale_kb";
    case errc::bad_format: return "bad_format";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace cigrid
