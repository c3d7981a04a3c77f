#pragma once
//
// common.hpp — error taxonomy and small shared utilities used across the
// reachability toolkit.
//

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hjstp {

inline constexpr int kMaxDim = 4;

// Stand-in for +infinity in min-plus field algebra. Large but finite so that
// interpolation and differences stay NaN-free.
inline constexpr double kFar = 1e9;

inline constexpr double kPi = 3.14159265358979323846;

enum class errc {
  nonmonotone_bounds,
  too_few_nodes,
  bad_dims,
  grid_mismatch,
  out_of_bounds,
  negative_radius,
  empty_summand,
  empty_set,
  unbounded_speed,
  cfl_violation,
  input_out_of_bounds,
  empty_schedule,
  unordered_times,
  span_too_short,
  domain_too_small,
  missing_prerequisite,
  infeasible,
  replan_infeasible,
  missing_plan,
  separation_breach,
  schema_error,
  units_error,
  io_error,
  bad_argument,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::nonmonotone_bounds: return "NonMonotoneBounds";
    case errc::too_few_nodes: return "TooFewNodes";
    case errc::bad_dims: return "BadDims";
    case errc::grid_mismatch: return "GridMismatch";
    case errc::out_of_bounds: return "OutOfBounds";
    case errc::negative_radius: return "NegativeRadius";
    case errc::empty_summand: return "EmptySummand";
    case errc::empty_set: return "EmptySet";
    case errc::unbounded_speed: return "UnboundedSpeed";
    case errc::cfl_violation: return "CflViolation";
    case errc::input_out_of_bounds: return "InputOutOfBounds";
    case errc::empty_schedule: return "EmptySchedule";
    case errc::unordered_times: return "UnorderedTimes";
    case errc::span_too_short: return "SpanTooShort";
    case errc::domain_too_small: return "DomainTooSmall";
    case errc::missing_prerequisite: return "MissingPrerequisite";
    case errc::infeasible: return "Infeasible";
    case errc::replan_infeasible: return "ReplanInfeasible";
    case errc::missing_plan: return "MissingPlan";
    case errc::separation_breach: return "SeparationBreach";
    case errc::schema_error: return "SchemaError";
    case errc::units_error: return "UnitsError";
    case errc::io_error: return "IoError";
    case errc::bad_argument: return "BadArgument";
  }
  return "UnknownError";
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

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

inline double sqr(double x) { return x * x; }

}  // namespace hjstp
