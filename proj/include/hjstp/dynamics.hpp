#pragma once
//
// dynamics.hpp — vehicle models (planar unicycle in absolute and relative
// coordinates, single integrator), Hamiltonian optimization roles, analytic
// input optimizers, and value-gradient controller extraction.
//
// Conventions: absolute unicycle state (x, y, theta); relative state
// (x_r, y_r, theta_r) expressed in the own vehicle's heading-aligned frame
// with the coupling terms (+w*y_r, -w*x_r); disturbances are planar vectors
// bounded in the Euclidean norm. In the relative model the disturbance
// arguments are frame-local: the disk bound is rotation-invariant, so both
// vehicles' wind terms enter additively in the rotated frame.
//

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hjstp/common.hpp"
#include "hjstp/field.hpp"

namespace hjstp {

using Vec = std::array<double, kMaxDim>;

enum class DynKind { dubins_absolute, dubins_relative, single_integrator };
enum class OptDir { minimize, maximize };

// Optimization pattern of a Hamiltonian: who minimizes, who maximizes.
// `control` drives the own (outer-player) control; `disturbance` drives the
// own wind term in absolute/single-integrator models; `second_player` drives
// the other vehicle's control and both wind terms jointly in relative models.
struct HamRole {
  OptDir control = OptDir::minimize;
  OptDir disturbance = OptDir::maximize;
  OptDir second_player = OptDir::minimize;
};

namespace roles {
// Reaching a target with no adversary modeled (disturbance radius zero).
inline HamRole reach_basic() {
  return {OptDir::minimize, OptDir::minimize, OptDir::minimize};
}
// Reaching a target robustly: control reaches, wind opposes.
inline HamRole planning() {
  return {OptDir::minimize, OptDir::maximize, OptDir::maximize};
}
// Own vehicle evades; the other vehicle and both winds pursue.
inline HamRole avoid() {
  return {OptDir::maximize, OptDir::minimize, OptDir::minimize};
}
// Both vehicles steer toward collision (worst-case mutual approach).
inline HamRole mutual_collision() {
  return {OptDir::minimize, OptDir::minimize, OptDir::minimize};
}
// States an observed vehicle could have come from / could reach.
inline HamRole obstacle_brs() {
  return {OptDir::minimize, OptDir::minimize, OptDir::minimize};
}
inline HamRole obstacle_frs() {
  return {OptDir::maximize, OptDir::maximize, OptDir::maximize};
}
// Recovery forward set: control spreads out, wind fights the spread.
inline HamRole replan_frs() {
  return {OptDir::maximize, OptDir::minimize, OptDir::minimize};
}
}  // namespace roles

struct DubinsParams {
  double v_min = 0.0;  // m/s
  double v_max = 25.0;
  double w_max = 2.0;  // rad/s
  double d_r = 6.0;    // wind speed bound, m/s
};

struct SIParams {
  double v_max = 25.0;
  double d_r = 6.0;
};

struct DynSpec {
  DynKind kind = DynKind::dubins_absolute;
  HamRole role;
  DubinsParams own;    // absolute model, or the own side of the relative model
  DubinsParams other;  // the other vehicle's side of the relative model
  SIParams si;

  int ndim() const { return kind == DynKind::single_integrator ? 2 : 3; }
};

inline void validate_params(const DubinsParams& p) {
  require(p.v_min >= 0.0 && p.v_max >= p.v_min, errc::bad_argument,
          "speed bounds must satisfy 0 <= v_min <= v_max");
  require(p.w_max > 0.0, errc::bad_argument, "turn-rate bound must be positive");
  require(p.d_r >= 0.0, errc::bad_argument, "disturbance radius must be nonnegative");
}

inline DynSpec dubins_absolute_spec(const DubinsParams& p, const HamRole& role) {
  validate_params(p);
  DynSpec s;
  s.kind = DynKind::dubins_absolute;
  s.role = role;
  s.own = p;
  return s;
}

inline DynSpec dubins_relative_spec(const DubinsParams& own, const DubinsParams& other,
                                    const HamRole& role) {
  validate_params(own);
  validate_params(other);
  DynSpec s;
  s.kind = DynKind::dubins_relative;
  s.role = role;
  s.own = own;
  s.other = other;
  return s;
}

inline DynSpec single_integrator_spec(double v_max, double d_r, const HamRole& role) {
  require(v_max >= 0.0 && d_r >= 0.0, errc::bad_argument,
          "single integrator needs v_max >= 0 and d_r >= 0");
  DynSpec s;
  s.kind = DynKind::single_integrator;
  s.role = role;
  s.si = {v_max, d_r};
  return s;
}

// Control/disturbance bundles. For unicycle models `own`/`other` hold
// (speed, turn-rate); for the single integrator `own` holds the velocity
// vector. Disturbances are planar wind vectors.
struct ControlPair {
  std::array<double, 2> own{};
  std::array<double, 2> other{};
};

struct DisturbPair {
  std::array<double, 2> own{};
  std::array<double, 2> other{};
};

namespace detail {

constexpr double kInputTol = 1e-9;

inline void check_dubins_inputs(const DubinsParams& p, const std::array<double, 2>& u,
                                const std::array<double, 2>& d, const char* who) {
  require(u[0] >= p.v_min - kInputTol && u[0] <= p.v_max + kInputTol, errc::input_out_of_bounds,
          std::string(who) + ": speed outside bounds");
  require(std::abs(u[1]) <= p.w_max + kInputTol, errc::input_out_of_bounds,
          std::string(who) + ": turn rate outside bounds");
  require(std::sqrt(sqr(d[0]) + sqr(d[1])) <= p.d_r + kInputTol, errc::input_out_of_bounds,
          std::string(who) + ": disturbance outside the disk bound");
}

}  // namespace detail

// Exact model right-hand side.
inline Vec flow(const DynSpec& s, const Vec& x, const ControlPair& u, const DisturbPair& d) {
  Vec f{};
  switch (s.kind) {
    case DynKind::dubins_absolute: {
      detail::check_dubins_inputs(s.own, u.own, d.own, "own vehicle");
      f[0] = u.own[0] * std::cos(x[2]) + d.own[0];
      f[1] = u.own[0] * std::sin(x[2]) + d.own[1];
      f[2] = u.own[1];
      break;
    }
    case DynKind::dubins_relative: {
      detail::check_dubins_inputs(s.own, u.own, d.own, "own vehicle");
      detail::check_dubins_inputs(s.other, u.other, d.other, "other vehicle");
      const double cth = std::cos(x[2]), sth = std::sin(x[2]);
      f[0] = u.other[0] * cth - u.own[0] + u.own[1] * x[1] + d.own[0] + d.other[0];
      f[1] = u.other[0] * sth - u.own[1] * x[0] + d.own[1] + d.other[1];
      f[2] = u.other[1] - u.own[1];
      break;
    }
    case DynKind::single_integrator: {
      require(std::sqrt(sqr(u.own[0]) + sqr(u.own[1])) <= s.si.v_max + detail::kInputTol,
              errc::input_out_of_bounds, "single integrator: velocity outside the disk bound");
      require(std::sqrt(sqr(d.own[0]) + sqr(d.own[1])) <= s.si.d_r + detail::kInputTol,
              errc::input_out_of_bounds, "single integrator: disturbance outside the disk bound");
      f[0] = u.own[0] + d.own[0];
      f[1] = u.own[1] + d.own[1];
      break;
    }
  }
  return f;
}

struct OptInputs {
  ControlPair u;
  DisturbPair d;
  double ham = 0.0;
};

namespace detail {

// coef*v over [lo, hi]; exact ties take the fast bound (deterministic rule).
inline double pick_speed(double coef, double lo, double hi, OptDir dir) {
  if (coef == 0.0) return hi;
  const bool take_low = (dir == OptDir::minimize) == (coef > 0.0);
  return take_low ? lo : hi;
}

// coef*w over [-w_max, w_max]; exact ties coast straight.
inline double pick_turn(double coef, double w_max, OptDir dir) {
  if (coef == 0.0) return 0.0;
  const bool take_low = (dir == OptDir::minimize) == (coef > 0.0);
  return take_low ? -w_max : w_max;
}

// (c . z) over the disk |z| <= r; exact zero coefficient rests.
inline std::array<double, 2> pick_disk(double c0, double c1, double r, OptDir dir) {
  const double norm = std::sqrt(sqr(c0) + sqr(c1));
  if (norm == 0.0 || r == 0.0) return {0.0, 0.0};
  const double scale = (dir == OptDir::minimize ? -r : r) / norm;
  return {scale * c0, scale * c1};
}

// Shared optimizer core; trig of the heading is supplied so grid sweeps can
// cache it per heading slice.
inline OptInputs opt_core(const DynSpec& s, const Vec& x, const Vec& lam, double cth, double sth) {
  OptInputs r;
  switch (s.kind) {
    case DynKind::dubins_absolute: {
      const double a_v = lam[0] * cth + lam[1] * sth;
      r.u.own[0] = pick_speed(a_v, s.own.v_min, s.own.v_max, s.role.control);
      r.u.own[1] = pick_turn(lam[2], s.own.w_max, s.role.control);
      r.d.own = pick_disk(lam[0], lam[1], s.own.d_r, s.role.disturbance);
      r.ham = r.u.own[0] * a_v + lam[2] * r.u.own[1] + lam[0] * r.d.own[0] + lam[1] * r.d.own[1];
      break;
    }
    case DynKind::dubins_relative: {
      const double a_v_other = lam[0] * cth + lam[1] * sth;
      const double a_v_own = -lam[0];
      const double a_w_own = lam[0] * x[1] - lam[1] * x[0] - lam[2];
      const double a_w_other = lam[2];
      r.u.own[0] = pick_speed(a_v_own, s.own.v_min, s.own.v_max, s.role.control);
      r.u.own[1] = pick_turn(a_w_own, s.own.w_max, s.role.control);
      r.u.other[0] = pick_speed(a_v_other, s.other.v_min, s.other.v_max, s.role.second_player);
      r.u.other[1] = pick_turn(a_w_other, s.other.w_max, s.role.second_player);
      r.d.own = pick_disk(lam[0], lam[1], s.own.d_r, s.role.second_player);
      r.d.other = pick_disk(lam[0], lam[1], s.other.d_r, s.role.second_player);
      r.ham = a_v_own * r.u.own[0] + a_w_own * r.u.own[1] + a_v_other * r.u.other[0] +
              a_w_other * r.u.other[1] + lam[0] * (r.d.own[0] + r.d.other[0]) +
              lam[1] * (r.d.own[1] + r.d.other[1]);
      break;
    }
    case DynKind::single_integrator: {
      r.u.own = pick_disk(lam[0], lam[1], s.si.v_max, s.role.control);
      r.d.own = pick_disk(lam[0], lam[1], s.si.d_r, s.role.disturbance);
      r.ham = lam[0] * (r.u.own[0] + r.d.own[0]) + lam[1] * (r.u.own[1] + r.d.own[1]);
      break;
    }
  }
  return r;
}

}  // namespace detail

// Analytic optimizer: inputs achieving the role's Hamiltonian at (x, lam),
// plus the Hamiltonian value lam . f(x, u*, d*).
inline OptInputs opt_inputs(const DynSpec& s, const Vec& x, const Vec& lam) {
  double cth = 1.0, sth = 0.0;
  if (s.kind != DynKind::single_integrator) {
    cth = std::cos(x[2]);
    sth = std::sin(x[2]);
  }
  return detail::opt_core(s, x, lam, cth, sth);
}

// Hot-path Hamiltonian with caller-supplied heading trig.
inline double opt_ham(const DynSpec& s, const Vec& x, const Vec& lam, double cth, double sth) {
  return detail::opt_core(s, x, lam, cth, sth).ham;
}

// One control decision extracted from a value function: the optimizing inputs
// at lam = grad V(t, x), plus the sampled value for mode switching.
struct ControlSample {
  ControlPair u;
  DisturbPair d;
  double value = 0.0;
  double snapshot_time = 0.0;
};

inline ControlSample controller_from_value(const TimeField& vf, const DynSpec& s, double t,
                                           const std::vector<double>& x) {
  require(static_cast<int>(x.size()) == vf.grid().ndim, errc::bad_dims,
          "controller_from_value: state dimension mismatch");
  const ScalarField& snap = vf.sample(t);
  const auto grad = gradient_at(snap, x);
  Vec lam{}, xv{};
  for (size_t k = 0; k < x.size(); ++k) {
    lam[k] = grad[k];
    xv[k] = x[k];
  }
  const OptInputs oi = opt_inputs(s, xv, lam);
  ControlSample cs;
  cs.u = oi.u;
  cs.d = oi.d;
  cs.value = interpolate(snap, x);
  cs.snapshot_time = snap.time;
  return cs;
}

}  // namespace hjstp
