#pragma once
//
// solver.hpp — time-dependent Hamilton–Jacobi solver for backward reachable
// sets (final-value variational inequality with target freeze and obstacle
// exclusion) and forward reachable sets (initial-value PDE with optional
// obstacle clipping). First-order upwind differences, global Lax–Friedrichs
// dissipation, TVD-RK2 (Heun) time stepping, uniform CFL-limited steps.
//
// Marching conventions, with H the role-optimized Hamiltonian lam . f:
//   backward (tau = time before the anchor):  V += dt * (+H(lam~) + diss)
//   forward  (t   = time after  the anchor):  V += dt * (-H(lam~) + diss)
// where lam~ is the central average of one-sided differences and
// diss = sum_k alpha_k (D+_k - D-_k) / 2. After each full RK2 step, the
// variational-inequality clamps are applied: reach-exists backward solves
// take V <- min(V, target), and obstacle-aware solves take
// V <- max(V, -obstacle(t_new)), in that order. A moving target (a schedule
// instead of a fixed field) swaps the frozen target for its sample at each
// step-end time, which computes reach-exists sets of time-varying sets.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hjstp/common.hpp"
#include "hjstp/dynamics.hpp"
#include "hjstp/field.hpp"
#include "hjstp/grid.hpp"

namespace hjstp {

enum class ReachMode { reach_exists, arrive_exact };

struct ReachProblem {
  Grid grid;
  ScalarField target;                    // level function of the anchor set
  const TimeField* obstacles = nullptr;  // optional exclusion schedule
  DynSpec dynspec;
  double horizon = 0.0;     // seconds of propagation
  TimeDirection direction = TimeDirection::backward;
  ReachMode mode = ReachMode::reach_exists;
  double cfl_factor = 0.5;  // in (0, 1]
  int save_stride = 0;      // steps between snapshots; 0 = auto (<= 200 snaps)
  double anchor_time = 0.0; // physical time of the anchor condition
  const TimeField* target_schedule = nullptr;  // optional moving target; replaces `target`
};

// Per-dimension speed bounds |x_k'| split into a state-independent part and
// the planar-rotation coupling, the one state-dependent term any of the
// models has: in the relative frame, alpha_x = base_x + spin * |y| and
// alpha_y = base_y + spin * |x|. Evaluating that term at each node instead
// of at the grid corner (local Lax-Friedrichs) keeps the scheme's viscosity
// proportional to the speeds that actually occur there; with the corner
// bound, a frame spanning R meters inflates alpha by spin * R everywhere and
// the added smoothing erodes game fronts by several meters per second.
struct AlphaBounds {
  std::array<double, kMaxDim> base{};
  double spin = 0.0;
};

inline AlphaBounds alpha_bounds(const DynSpec& s) {
  AlphaBounds a;
  switch (s.kind) {
    case DynKind::dubins_absolute:
      a.base[0] = s.own.v_max + s.own.d_r;
      a.base[1] = s.own.v_max + s.own.d_r;
      a.base[2] = s.own.w_max;
      break;
    case DynKind::dubins_relative:
      a.base[0] = s.other.v_max + s.own.v_max + s.own.d_r + s.other.d_r;
      a.base[1] = s.other.v_max + s.own.d_r + s.other.d_r;
      a.base[2] = s.own.w_max + s.other.w_max;
      a.spin = s.own.w_max;
      break;
    case DynKind::single_integrator:
      a.base[0] = s.si.v_max + s.si.d_r;
      a.base[1] = s.si.v_max + s.si.d_r;
      break;
  }
  for (int k = 0; k < s.ndim(); ++k)
    require(std::isfinite(a.base[k]) && std::isfinite(a.spin), errc::unbounded_speed,
            "dissipation bound is not finite");
  return a;
}

// Grid-wide maxima of the per-node bounds; these set the CFL time step.
inline std::array<double, kMaxDim> dissipation_bounds(const DynSpec& s, const Grid& g) {
  const AlphaBounds ab = alpha_bounds(s);
  std::array<double, kMaxDim> a = ab.base;
  auto absmax = [&](int dim) { return std::max(std::abs(g.mins[dim]), std::abs(g.maxs[dim])); };
  if (ab.spin != 0.0 && g.ndim >= 2) {
    a[0] += ab.spin * absmax(1);
    a[1] += ab.spin * absmax(0);
  }
  for (int k = 0; k < s.ndim(); ++k)
    require(std::isfinite(a[k]), errc::unbounded_speed, "dissipation bound is not finite");
  return a;
}

// One-sided first-order differences along `dim`. Non-periodic boundaries use
// linear-extrapolation ghost nodes, so the one-sided pair degenerates to the
// adjacent interior difference there.
inline std::pair<ScalarField, ScalarField> upwind_derivs(const ScalarField& f, int dim) {
  const Grid& g = f.grid;
  require(dim >= 0 && dim < g.ndim, errc::bad_dims, "upwind_derivs: dim out of range");
  require(g.counts[dim] >= 3, errc::too_few_nodes, "upwind_derivs: need >= 3 nodes");
  ScalarField left = make_field(g, 0.0, f.time), right = make_field(g, 0.0, f.time);
  const double inv = 1.0 / g.spacing[dim];
  const std::int64_t n = g.size();
  const std::int64_t st = g.stride[dim];
  const int count = g.counts[dim];
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const int i = g.unflatten(flat)[dim];
    const double v = f.values[static_cast<size_t>(flat)];
    double dm, dp;
    if (i > 0)
      dm = (v - f.values[static_cast<size_t>(flat - st)]) * inv;
    else if (g.periodic[dim])
      dm = (v - f.values[static_cast<size_t>(flat + st * (count - 1))]) * inv;
    else
      dm = (f.values[static_cast<size_t>(flat + st)] - v) * inv;  // ghost: replicate slope
    if (i < count - 1)
      dp = (f.values[static_cast<size_t>(flat + st)] - v) * inv;
    else if (g.periodic[dim])
      dp = (f.values[static_cast<size_t>(flat - st * (count - 1))] - v) * inv;
    else
      dp = (v - f.values[static_cast<size_t>(flat - st)]) * inv;
    left.values[static_cast<size_t>(flat)] = dm;
    right.values[static_cast<size_t>(flat)] = dp;
  }
  return {std::move(left), std::move(right)};
}

namespace detail {

// One explicit Euler substep of the Lax-Friedrichs scheme over the whole
// grid. `ham(x, lam, itheta)` returns the optimized Hamiltonian; `sign` is
// +1 for backward marching and -1 for forward marching. Dissipation uses the
// per-node bounds from `alpha` (local Lax-Friedrichs).
template <typename HamF>
void euler_substep(const Grid& g, const AlphaBounds& alpha, double sign,
                   double dt, const std::vector<double>& v, std::vector<double>& out,
                   HamF&& ham) {
  const int nd = g.ndim;
  std::array<double, kMaxDim> inv{};
  for (int k = 0; k < nd; ++k) inv[k] = 1.0 / g.spacing[k];

  const std::int64_t n = g.size();
  std::array<int, kMaxDim> idx{};
  Vec x{}, lam{};
  for (std::int64_t flat = 0; flat < n; ++flat) {
    // mixed-radix increment of idx (row-major: last dim fastest)
    if (flat > 0) {
      int k = nd - 1;
      while (true) {
        if (++idx[k] < g.counts[k]) break;
        idx[k] = 0;
        --k;
      }
    }
    for (int k = 0; k < nd; ++k) x[k] = g.mins[k] + g.spacing[k] * idx[k];

    std::array<double, kMaxDim> ax = alpha.base;
    if (alpha.spin != 0.0 && nd >= 2) {
      ax[0] += alpha.spin * std::abs(x[1]);
      ax[1] += alpha.spin * std::abs(x[0]);
    }

    const double vc = v[static_cast<size_t>(flat)];
    double diss = 0.0;
    for (int k = 0; k < nd; ++k) {
      const std::int64_t st = g.stride[k];
      const int i = idx[k], count = g.counts[k];
      double dm, dp;
      if (i > 0)
        dm = (vc - v[static_cast<size_t>(flat - st)]) * inv[k];
      else if (g.periodic[k])
        dm = (vc - v[static_cast<size_t>(flat + st * (count - 1))]) * inv[k];
      else
        dm = (v[static_cast<size_t>(flat + st)] - vc) * inv[k];
      if (i < count - 1)
        dp = (v[static_cast<size_t>(flat + st)] - vc) * inv[k];
      else if (g.periodic[k])
        dp = (v[static_cast<size_t>(flat - st * (count - 1))] - vc) * inv[k];
      else
        dp = (vc - v[static_cast<size_t>(flat - st)]) * inv[k];
      lam[k] = 0.5 * (dm + dp);
      diss += 0.5 * ax[k] * (dp - dm);
    }
    const double h = ham(x, lam, nd > 2 ? idx[2] : 0);
    out[static_cast<size_t>(flat)] = vc + dt * (sign * h + diss);
  }
}

inline double cfl_dt_limit(const Grid& g, const std::array<double, kMaxDim>& alpha) {
  double s = 0.0;
  for (int k = 0; k < g.ndim; ++k) s += alpha[k] / g.spacing[k];
  return s > 0.0 ? 1.0 / s : kFar;
}

}  // namespace detail

// Scheme bookkeeping for manual stepping (tests, diagnostics). The solver
// loop uses the same Euler substep internally.
struct SchemeState {
  ScalarField field;
  double time = 0.0;
  TimeDirection direction = TimeDirection::backward;
  std::array<double, kMaxDim> alpha{};
  double cfl_factor = 0.5;
  std::vector<double> dt_history;

  double max_dt(const Grid& g) const { return cfl_factor * detail::cfl_dt_limit(g, alpha); }
};

// One Euler substep with a user-supplied Hamiltonian ham(x, lam) -> double.
template <typename HamF>
inline ScalarField lf_step(const SchemeState& state, HamF&& ham, double dt) {
  require(dt > 0.0, errc::bad_argument, "lf_step: dt must be positive");
  require(dt <= state.max_dt(state.field.grid) * (1.0 + 1e-12), errc::cfl_violation,
          "lf_step: dt exceeds the CFL limit");
  ScalarField out = state.field;
  const double sign = state.direction == TimeDirection::backward ? 1.0 : -1.0;
  detail::euler_substep(state.field.grid, state.alpha, sign, dt, state.field.values, out.values,
                        [&](const Vec& x, const Vec& lam, int) { return ham(x, lam); });
  out.time = state.time + (state.direction == TimeDirection::backward ? -dt : dt);
  return out;
}

namespace detail {

inline void clamp_step(std::vector<double>& v, const ReachProblem& p, double t_new) {
  if (p.direction == TimeDirection::backward && p.mode == ReachMode::reach_exists) {
    const std::vector<double>& l =
        p.target_schedule ? p.target_schedule->snaps[p.target_schedule->sample_index(t_new)].values
                          : p.target.values;
    for (size_t i = 0; i < v.size(); ++i) v[i] = std::min(v[i], l[i]);
  }
  if (p.obstacles && !p.obstacles->empty()) {
    const ScalarField& gob = p.obstacles->sample(t_new);
    for (size_t i = 0; i < v.size(); ++i) v[i] = std::max(v[i], -gob.values[i]);
  }
}

inline TimeField solve_reach(const ReachProblem& p) {
  require(p.horizon >= 0.0, errc::bad_argument, "reach solve: horizon must be nonnegative");
  require(p.cfl_factor > 0.0 && p.cfl_factor <= 1.0, errc::cfl_violation,
          "reach solve: cfl_factor must lie in (0, 1]");
  if (p.target_schedule) {
    require(!p.target_schedule->empty(), errc::empty_schedule,
            "reach solve: moving-target schedule is empty");
    require(p.target_schedule->grid().same_shape(p.grid), errc::grid_mismatch,
            "reach solve: moving-target grid mismatch");
  } else {
    require(p.target.grid.same_shape(p.grid), errc::grid_mismatch,
            "reach solve: target grid mismatch");
  }
  require(p.grid.ndim == p.dynspec.ndim(), errc::bad_dims,
          "reach solve: grid/dynamics dimension mismatch");
  if (p.obstacles && !p.obstacles->empty())
    require(p.obstacles->grid().same_shape(p.grid), errc::grid_mismatch,
            "reach solve: obstacle grid mismatch");

  const bool backward = p.direction == TimeDirection::backward;
  const double sign = backward ? 1.0 : -1.0;
  auto phys_time = [&](double tau) { return backward ? p.anchor_time - tau : p.anchor_time + tau; };

  // Anchor condition: target excluding the obstacle at the anchor time.
  ScalarField v0 = p.target_schedule ? p.target_schedule->sample(p.anchor_time) : p.target;
  v0.time = p.anchor_time;
  if (p.obstacles && !p.obstacles->empty()) {
    const ScalarField& gob = p.obstacles->sample(p.anchor_time);
    for (size_t i = 0; i < v0.values.size(); ++i)
      v0.values[i] = std::max(v0.values[i], -gob.values[i]);
  }

  const auto alpha = dissipation_bounds(p.dynspec, p.grid);
  const double dt_limit = cfl_dt_limit(p.grid, alpha);
  TimeField out;
  out.direction = p.direction;

  if (p.horizon == 0.0) {
    out.append(v0);
    return out;
  }

  if (dt_limit >= kFar) {
    // Zero dynamics: nothing moves; the anchor condition holds at all times.
    ScalarField far_end = v0;
    far_end.time = phys_time(p.horizon);
    if (backward) {
      out.append(far_end);
      out.append(v0);
    } else {
      out.append(v0);
      out.append(far_end);
    }
    return out;
  }

  const int nsteps = std::max(1, static_cast<int>(std::ceil(p.horizon / (p.cfl_factor * dt_limit) -
                                                            1e-12)));
  const double dt = p.horizon / nsteps;
  require(dt <= p.cfl_factor * dt_limit * (1.0 + 1e-9), errc::cfl_violation,
          "reach solve: uniform step exceeds the CFL limit");

  int stride = p.save_stride;
  if (stride <= 0) stride = nsteps <= 200 ? 1 : (nsteps + 198) / 199;

  // Trig cache for the heading dimension.
  std::vector<double> cth{1.0}, sth{0.0};
  if (p.grid.ndim > 2) {
    cth.resize(static_cast<size_t>(p.grid.counts[2]));
    sth.resize(static_cast<size_t>(p.grid.counts[2]));
    for (int i = 0; i < p.grid.counts[2]; ++i) {
      cth[static_cast<size_t>(i)] = std::cos(p.grid.coord(2, i));
      sth[static_cast<size_t>(i)] = std::sin(p.grid.coord(2, i));
    }
  }
  const DynSpec& ds = p.dynspec;
  auto ham = [&](const Vec& x, const Vec& lam, int it) {
    return opt_ham(ds, x, lam, cth[static_cast<size_t>(it)], sth[static_cast<size_t>(it)]);
  };

  std::vector<ScalarField> snaps;
  snaps.push_back(v0);

  std::vector<double> v = v0.values, s1(v.size()), s2(v.size());
  for (int step = 1; step <= nsteps; ++step) {
    detail::euler_substep(p.grid, alpha, sign, dt, v, s1, ham);
    detail::euler_substep(p.grid, alpha, sign, dt, s1, s2, ham);
    for (size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (v[i] + s2[i]);
    const double t_new = phys_time(p.horizon * step / nsteps);
    clamp_step(v, p, t_new);
    if (step % stride == 0 || step == nsteps) {
      ScalarField snap = make_field(p.grid, 0.0, t_new);
      snap.values = v;
      snaps.push_back(std::move(snap));
    }
  }

  if (backward) std::reverse(snaps.begin(), snaps.end());
  for (auto& s : snaps) out.append(std::move(s));
  return out;
}

}  // namespace detail

// Backward reachable set: marches the anchor condition back over the horizon.
// Snapshot times run from anchor_time - horizon up to anchor_time.
inline TimeField solve_brs(const ReachProblem& p) {
  require(p.direction == TimeDirection::backward, errc::bad_argument,
          "solve_brs: direction must be backward");
  return detail::solve_reach(p);
}

// Forward reachable set: marches the anchor condition forward. Snapshot times
// run from anchor_time up to anchor_time + horizon. Never freezes with the
// target; applies the obstacle clip when a schedule is present.
inline TimeField solve_frs(const ReachProblem& p) {
  require(p.direction == TimeDirection::forward, errc::bad_argument,
          "solve_frs: direction must be forward");
  return detail::solve_reach(p);
}

// Number of RK steps the solve will take; lets callers choose save_stride so
// stored snapshots land near a desired time spacing.
inline int reach_step_count(const ReachProblem& p) {
  const auto alpha = dissipation_bounds(p.dynspec, p.grid);
  const double dt_limit = detail::cfl_dt_limit(p.grid, alpha);
  if (p.horizon <= 0.0 || dt_limit >= kFar) return 1;
  return std::max(1, static_cast<int>(std::ceil(p.horizon / (p.cfl_factor * dt_limit) - 1e-12)));
}

}  // namespace hjstp
