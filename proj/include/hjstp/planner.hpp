#pragma once
//
// planner.hpp — sequential trajectory planning for a prioritized fleet that
// must stay safe against one adversarial intruder. Builds, per vehicle: the
// relative-frame avoid and buffer regions, the separation/buffer footprints
// and the five families of obstacles a higher-priority vehicle's possible
// avoidance maneuver induces, static-obstacle hardening, and the planning
// value function with its nominal controller and latest departure time. A
// disturbance-free baseline planner shares the machinery.
//
// Every induced family exploits one structural fact: the base obstacle is a
// fixed-radius tube translating along a known nominal trajectory and the
// dynamics are translation-invariant in position, so each family is one
// canonical origin-centered solve translated along the trajectory, and time
// unions become pointwise minima of translated lookups. A backward reach set
// of a moving target equals the union of arrive-at-exact-time sets over
// arrival times, which is what the canonical families store. The direct
// moving-target solver route stays available and the test suite checks the
// two routes against each other.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hjstp/common.hpp"
#include "hjstp/dynamics.hpp"
#include "hjstp/field.hpp"
#include "hjstp/field_ops.hpp"
#include "hjstp/grid.hpp"
#include "hjstp/reachops.hpp"
#include "hjstp/solver.hpp"

namespace hjstp {

// --------------------------------------------------------------------------
// Scenario description.
// --------------------------------------------------------------------------

struct StaticCircle {
  std::array<double, 2> center{};
  double radius = 0.0;
};

struct StaticRect {
  std::array<double, 2> min{};
  std::array<double, 2> max{};
};

struct TargetSpec {
  std::array<double, 2> center{};
  double radius = 0.0;
};

struct VehicleSpec {
  int id = 0;
  std::array<double, 3> x0{};  // x (m), y (m), heading (rad)
  TargetSpec target;
  double sta = 0.0;  // scheduled time of arrival (s)
};

struct PlannerOptions {
  double cfl = 0.5;
  double control_dt = 0.1;   // controller sample period and rollout step (s)
  double obstacle_dt = 0.1;  // obstacle-schedule lattice spacing (s)
  double union_dt = 0.0;     // arrival-time union stride (s); 0 = control_dt
  int value_snaps = 120;     // stored planning value snapshots (approximate)
  int rel_counts = 61;       // relative-grid nodes per position axis
  int rel_theta = 31;        // relative-grid heading nodes
  int canon_counts = 61;     // canonical-solve nodes per position axis
  int canon_theta = 0;       // heading nodes; 0 = copy the planning grid
  double departure_slack = 0.0;  // extra backward horizon: departures before
                                 // t = 0 when the scheduled window is too
                                 // tight (never engaged by default)
  bool replan_basic = false;  // replan against known trajectories only
};

struct Scenario {
  Grid grid;  // planning grid: x, y, heading (periodic)
  std::vector<VehicleSpec> vehicles;  // descending priority, index 0 highest
  DubinsParams vehicle_params{};
  std::vector<DubinsParams> per_vehicle;  // optional, parallel to `vehicles`
  DubinsParams intruder_params{};
  double tbar = 10.0;     // maximum duration of one intruder engagement (s)
  int n_va = 3;           // vehicles that may be forced to avoid
  double r_c = 100.0;     // pairwise capture radius (m)
  double eps_track = 5.0; // tracking-tube radius around nominal positions (m)
  std::vector<StaticCircle> circles;
  std::vector<StaticRect> rects;
  PlannerOptions opts;

  double t_brd() const { return tbar / n_va; }
  double t_rd() const { return tbar - t_brd(); }
  const DubinsParams& params_for(size_t k) const {
    return per_vehicle.empty() ? vehicle_params : per_vehicle[k];
  }
  bool has_statics() const { return !circles.empty() || !rects.empty(); }
};

inline void check_params(const DubinsParams& p, const std::string& who) {
  require(p.v_min >= 0.0 && p.v_max >= p.v_min, errc::bad_argument,
          who + ": need 0 <= v_min <= v_max");
  require(p.w_max >= 0.0 && p.d_r >= 0.0, errc::bad_argument,
          who + ": turn rate and disturbance bounds must be nonnegative");
}

inline void validate_scenario(const Scenario& sc) {
  require(sc.grid.ndim == 3, errc::bad_dims, "scenario: planning grid must be x, y, heading");
  require(!sc.grid.periodic[0] && !sc.grid.periodic[1] && sc.grid.periodic[2], errc::bad_dims,
          "scenario: position axes plain, heading periodic");
  require(sc.tbar > 0.0, errc::bad_argument, "scenario: tbar must be positive");
  require(sc.n_va >= 1, errc::bad_argument, "scenario: n_va must be at least 1");
  require(sc.r_c > 0.0, errc::bad_argument, "scenario: capture radius must be positive");
  require(sc.eps_track >= 0.0, errc::bad_argument, "scenario: tube radius must be nonnegative");
  require(!sc.vehicles.empty(), errc::bad_argument, "scenario: no vehicles");
  require(sc.per_vehicle.empty() || sc.per_vehicle.size() == sc.vehicles.size(),
          errc::bad_argument, "scenario: per-vehicle params must match the vehicle list");
  check_params(sc.vehicle_params, "scenario vehicle params");
  check_params(sc.intruder_params, "scenario intruder params");
  for (size_t k = 0; k < sc.per_vehicle.size(); ++k)
    check_params(sc.per_vehicle[k], "vehicle " + std::to_string(sc.vehicles[k].id));
  const PlannerOptions& o = sc.opts;
  require(o.cfl > 0.0 && o.cfl <= 1.0, errc::cfl_violation, "scenario: cfl must lie in (0, 1]");
  require(o.control_dt > 0.0 && o.obstacle_dt > 0.0 && o.union_dt >= 0.0, errc::bad_argument,
          "scenario: time steps must be positive");
  require(o.value_snaps >= 2 && o.rel_counts >= 5 && o.rel_theta >= 5 && o.canon_counts >= 5,
          errc::too_few_nodes, "scenario: grid counts too small");
  require(o.departure_slack >= 0.0, errc::bad_argument,
          "scenario: departure slack must be nonnegative");
  std::vector<int> ids;
  for (size_t k = 0; k < sc.vehicles.size(); ++k) {
    const VehicleSpec& v = sc.vehicles[k];
    ids.push_back(v.id);
    const std::string who = "vehicle " + std::to_string(v.id);
    require(v.sta >= 0.0, errc::bad_argument, who + ": sta must be nonnegative");
    require(v.target.radius > 0.0, errc::bad_argument, who + ": target radius must be positive");
    for (int d = 0; d < 2; ++d) {
      require(v.x0[d] >= sc.grid.mins[d] && v.x0[d] <= sc.grid.maxs[d],
              errc::input_out_of_bounds, who + ": start position outside the planning grid");
      require(v.target.center[d] >= sc.grid.mins[d] && v.target.center[d] <= sc.grid.maxs[d],
              errc::input_out_of_bounds, who + ": target center outside the planning grid");
    }
  }
  std::sort(ids.begin(), ids.end());
  require(std::adjacent_find(ids.begin(), ids.end()) == ids.end(), errc::bad_argument,
          "scenario: vehicle ids must be unique");
  for (const StaticCircle& c : sc.circles)
    require(c.radius > 0.0, errc::bad_argument, "static circle: radius must be positive");
  for (const StaticRect& r : sc.rects)
    require(r.min[0] < r.max[0] && r.min[1] < r.max[1], errc::bad_argument,
            "static rectangle: min corner must lie below max corner");
}

// --------------------------------------------------------------------------
// Static-obstacle geometry.
// --------------------------------------------------------------------------

inline double sdf_circle_pt(double x, double y, const StaticCircle& c) {
  return std::hypot(x - c.center[0], y - c.center[1]) - c.radius;
}

inline double sdf_rect_pt(double x, double y, const StaticRect& r) {
  const double ox = std::max(std::max(r.min[0] - x, 0.0), x - r.max[0]);
  const double oy = std::max(std::max(r.min[1] - y, 0.0), y - r.max[1]);
  const double outside = std::hypot(ox, oy);
  if (outside > 0.0) return outside;
  const double inside = std::min(std::min(x - r.min[0], r.max[0] - x),
                                 std::min(y - r.min[1], r.max[1] - y));
  return -inside;
}

// Signed distance to the union of the static shapes, inflated by `inflate`;
// heading-free on 3D grids. All +far when there are no shapes.
inline ScalarField statics_field(const Grid& g, const std::vector<StaticCircle>& circles,
                                 const std::vector<StaticRect>& rects, double inflate = 0.0) {
  ScalarField f = make_field(g, kFar);
  if (circles.empty() && rects.empty()) return f;
  const std::int64_t n = g.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = g.unflatten(flat);
    const double x = g.coord(0, idx[0]);
    const double y = g.coord(1, idx[1]);
    double v = kFar;
    for (const StaticCircle& c : circles) v = std::min(v, sdf_circle_pt(x, y, c));
    for (const StaticRect& r : rects) v = std::min(v, sdf_rect_pt(x, y, r));
    f.values[static_cast<size_t>(flat)] = v - inflate;
  }
  return f;
}

// --------------------------------------------------------------------------
// Plans.
// --------------------------------------------------------------------------

struct NominalSample {
  double t = 0.0;
  std::array<double, 3> x{};
  double v = 0.0;  // commanded speed over [t, t + control_dt)
  double w = 0.0;  // commanded turn rate
};

struct VehiclePlan {
  int vehicle_id = 0;
  VehicleSpec vehicle;
  DynSpec spec;              // absolute-frame dynamics, planning role
  TimeField value;           // planning value function V(t, x)
  std::vector<NominalSample> nominal;  // departure to arrival, control lattice
  double ldt = 0.0;          // latest departure time
  double depart = 0.0;
  double arrive = 0.0;
  ObstacleSchedule base;     // tracking-tube footprint (position plane)
  ObstacleSchedule total;    // obstacles the plan guaranteed against

  // Parked at the start state before departure, held at the final sample
  // after arrival, linear interpolation in flight (headings unwrapped).
  std::array<double, 3> state_at(double t) const {
    if (nominal.empty()) return vehicle.x0;
    if (t <= nominal.front().t) return nominal.front().x;
    if (t >= nominal.back().t) return nominal.back().x;
    const auto it = std::upper_bound(
        nominal.begin(), nominal.end(), t,
        [](double tv, const NominalSample& s) { return tv < s.t; });
    const NominalSample& b = *it;
    const NominalSample& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    std::array<double, 3> x{};
    for (int d = 0; d < 3; ++d) x[d] = (1.0 - w) * a.x[d] + w * b.x[d];
    return x;
  }
  std::array<double, 2> position_at(double t) const {
    const auto x = state_at(t);
    return {x[0], x[1]};
  }
  ControlSample control_at(double t, const std::vector<double>& x) const {
    return controller_from_value(value, spec, t, x);
  }
};

struct AvoidArtifacts {
  DynSpec rel_avoid;   // relative dynamics, evader-versus-intruder role
  DynSpec rel_buffer;  // relative dynamics, cooperative-collision role
  TimeField avoid;     // snapshots indexed by remaining duration in [0, tbar]
  TimeField buffer;    // snapshots indexed by remaining duration in [0, t_brd]
  double d_sen = 0.0;  // sensing distance of the full-duration avoid set

  double avoid_value(double remaining, const std::vector<double>& xrel) const {
    return interpolate(avoid.sample(remaining), xrel);
  }
  // Game-optimal inputs at the relative state. With a positive lookahead the
  // evader's bang-bang choice is rescored one control period ahead against
  // the stored value: the instantaneous gradient of the dissipation-smeared
  // field can stall the evader (slow speed looks locally neutral) exactly
  // where committing to full speed is what keeps the promised distance.
  ControlSample avoidance_control(double remaining, const std::vector<double>& xrel,
                                  double lookahead_dt = 0.0) const {
    ControlSample cs = controller_from_value(avoid, rel_avoid, remaining, xrel);
    if (lookahead_dt <= 0.0) return cs;
    const ScalarField& next = avoid.sample(std::max(remaining - lookahead_dt, 0.0));
    const DubinsParams& own = rel_avoid.own;
    const std::array<double, 2> cands[5] = {cs.u.own,
                                            {own.v_min, -own.w_max},
                                            {own.v_min, own.w_max},
                                            {own.v_max, -own.w_max},
                                            {own.v_max, own.w_max}};
    Vec x{};
    for (size_t k = 0; k < xrel.size(); ++k) x[k] = xrel[k];
    double best = -kFar;
    for (const auto& cand : cands) {
      ControlPair u = cs.u;
      u.own = cand;
      const Vec f = flow(rel_avoid, x, u, cs.d);
      const double q[3] = {xrel[0] + lookahead_dt * f[0], xrel[1] + lookahead_dt * f[1],
                           xrel[2] + lookahead_dt * f[2]};
      const double val = interpolate_ext(next, q);
      if (val > best) {
        best = val;
        cs.u.own = cand;
      }
    }
    return cs;
  }
};

// --------------------------------------------------------------------------
// Canonical-grid helpers.
// --------------------------------------------------------------------------

namespace detail {

inline Grid plane_of(const Grid& g) {
  require(g.ndim >= 2, errc::bad_dims, "plane_of: need at least two dimensions");
  return make_grid({g.mins[0], g.mins[1]}, {g.maxs[0], g.maxs[1]},
                   {g.counts[0], g.counts[1]}, {false, false});
}

// Symmetric plane with an odd node count, so the origin sits on the lattice
// (aligned Minkowski sums and exact self-translation).
inline Grid canonical_plane(double half_span, int counts) {
  const int n = counts | 1;
  return make_grid({-half_span, -half_span}, {half_span, half_span}, {n, n}, {false, false});
}

inline Grid canonical_volume(double half_span, int counts, int theta_counts) {
  const int n = counts | 1;
  return make_grid({-half_span, -half_span, -kPi}, {half_span, half_span, kPi},
                   {n, n, theta_counts}, {false, false, true});
}

// Distance to a position ball, any grid dimension; radius zero gives the
// distance to the origin column (sub-zero exactly at the center nodes).
inline ScalarField ball_field(const Grid& g, double cx, double cy, double radius) {
  require(radius >= 0.0, errc::negative_radius, "ball_field: radius must be nonnegative");
  ScalarField f = make_field(g);
  const std::int64_t n = g.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = g.unflatten(flat);
    f.values[static_cast<size_t>(flat)] =
        std::hypot(g.coord(0, idx[0]) - cx, g.coord(1, idx[1]) - cy) - radius;
  }
  return f;
}

inline ScalarField resample2(const Grid& dst, const ScalarField& src) {
  ScalarField f = make_field(dst, 0.0, src.time);
  const std::int64_t n = dst.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    const auto idx = dst.unflatten(flat);
    const double x[2] = {dst.coord(0, idx[0]), dst.coord(1, idx[1])};
    f.values[static_cast<size_t>(flat)] = interpolate_ext(src, x);
  }
  return f;
}

inline ScalarField broadcast3(const Grid& g3, const ScalarField& f2) {
  require(g3.ndim == 3 && f2.grid.ndim == 2, errc::bad_dims, "broadcast3: need 3D onto 2D");
  require(g3.counts[0] == f2.grid.counts[0] && g3.counts[1] == f2.grid.counts[1],
          errc::grid_mismatch, "broadcast3: position lattices must match");
  ScalarField f = make_field(g3, 0.0, f2.time);
  const int nth = g3.counts[2];
  for (int i = 0; i < g3.counts[0]; ++i)
    for (int j = 0; j < g3.counts[1]; ++j) {
      const double v = f2.values[static_cast<size_t>(
          f2.grid.flatten({i, j}))];
      const std::int64_t base = g3.flatten({i, j, 0});
      for (int k = 0; k < nth; ++k) f.values[static_cast<size_t>(base + k)] = v;
    }
  return f;
}

inline ScalarField flatten_heading(const ScalarField& f3) {
  return project_min(f3, {0, 1});
}

// dst(x) <- min(dst(x), shape(x - c)) over the window covered by the shape's
// sub-zero box shifted to c; values outside the window are untouched (they
// only matter as "far" in a union of obstacles). Works for 2D or 3D dst with
// a 2D (heading-free) or 3D shape.
inline void translate_min_into(ScalarField& dst, const ScalarField& shape,
                               const SubzeroBox& box, double cx, double cy) {
  const Grid& g = dst.grid;
  const Grid& sg = shape.grid;
  const double c[2] = {cx, cy};
  int lo[2], hi[2];
  for (int d = 0; d < 2; ++d) {
    const double pad = sg.spacing[d] + g.spacing[d];
    const double a = box.lo[d] + c[d] - pad;
    const double b = box.hi[d] + c[d] + pad;
    lo[d] = std::max(0, static_cast<int>(std::ceil((a - g.mins[d]) / g.spacing[d])));
    hi[d] = std::min(g.counts[d] - 1,
                     static_cast<int>(std::floor((b - g.mins[d]) / g.spacing[d])));
    if (lo[d] > hi[d]) return;
  }
  const bool dst3 = g.ndim == 3;
  const bool shape3 = sg.ndim == 3;
  const int nth = dst3 ? g.counts[2] : 1;
  for (int i = lo[0]; i <= hi[0]; ++i) {
    const double px = g.coord(0, i) - cx;
    for (int j = lo[1]; j <= hi[1]; ++j) {
      const double py = g.coord(1, j) - cy;
      const std::int64_t base = dst3 ? g.flatten({i, j, 0}) : g.flatten({i, j});
      if (shape3) {
        for (int k = 0; k < nth; ++k) {
          const double q[3] = {px, py, g.coord(2, k)};
          double& slot = dst.values[static_cast<size_t>(base + k)];
          slot = std::min(slot, interpolate_ext(shape, q));
        }
      } else {
        const double q[2] = {px, py};
        const double v = interpolate_ext(shape, q);
        for (int k = 0; k < nth; ++k) {
          double& slot = dst.values[static_cast<size_t>(base + k)];
          slot = std::min(slot, v);
        }
      }
    }
  }
}

inline void translate_min_into(ScalarField& dst, const ScalarField& shape, double cx, double cy) {
  translate_min_into(dst, shape, subzero_box(shape), cx, cy);
}

// Exact capture disk stamped around a point — used where the obstacle is an
// analytic ball rather than a solved shape.
inline void stamp_ball(ScalarField& dst, double cx, double cy, double radius) {
  const Grid& g = dst.grid;
  int lo[2], hi[2];
  for (int d = 0; d < 2; ++d) {
    const double c = d == 0 ? cx : cy;
    lo[d] = std::max(0, static_cast<int>(std::ceil((c - radius - g.spacing[d] - g.mins[d]) /
                                                   g.spacing[d])));
    hi[d] = std::min(g.counts[d] - 1,
                     static_cast<int>(std::floor((c + radius + g.spacing[d] - g.mins[d]) /
                                                 g.spacing[d])));
    if (lo[d] > hi[d]) return;
  }
  const int nth = g.ndim == 3 ? g.counts[2] : 1;
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j) {
      const double v = std::hypot(g.coord(0, i) - cx, g.coord(1, j) - cy) - radius;
      const std::int64_t base = g.ndim == 3 ? g.flatten({i, j, 0}) : g.flatten({i, j});
      for (int k = 0; k < nth; ++k) {
        double& slot = dst.values[static_cast<size_t>(base + k)];
        slot = std::min(slot, v);
      }
    }
}

inline bool touches_xy_boundary(const ScalarField& f) {
  const Grid& g = f.grid;
  const std::int64_t n = g.size();
  for (std::int64_t flat = 0; flat < n; ++flat) {
    if (f.values[static_cast<size_t>(flat)] > 0.0) continue;
    const auto idx = g.unflatten(flat);
    for (int d = 0; d < 2; ++d)
      if (idx[d] == 0 || idx[d] == g.counts[d] - 1) return true;
  }
  return false;
}

// Re-index backward snapshots (physical times [0, horizon], anchor at the
// horizon) by remaining duration, ascending: entry r is the set with r
// seconds of propagation left to the anchor.
inline TimeField remap_remaining(const TimeField& vf, double horizon) {
  TimeField out;
  out.direction = TimeDirection::forward;
  for (auto it = vf.snaps.rbegin(); it != vf.snaps.rend(); ++it) {
    ScalarField f = *it;
    f.time = horizon - f.time;
    out.append(std::move(f));
  }
  return out;
}

// Relative-frame backward reach of the capture disk under `role`, on a
// self-sized symmetric grid that doubles (same spacing) while the sub-zero
// set touches the position boundary. Snapshots re-indexed by remaining time.
inline TimeField rel_danger_brs(const DubinsParams& own, const DubinsParams& intr, HamRole role,
                                double horizon, double r_c, double half_span0, int counts_xy,
                                int counts_theta, double cfl) {
  double span = half_span0;
  int n = counts_xy | 1;
  for (int attempt = 0;; ++attempt) {
    const Grid g = make_grid({-span, -span, -kPi}, {span, span, kPi}, {n, n, counts_theta},
                             {false, false, true});
    ReachProblem p;
    p.grid = g;
    p.target = ball_field(g, 0.0, 0.0, r_c);
    p.dynspec = dubins_relative_spec(own, intr, role);
    p.horizon = horizon;
    p.direction = TimeDirection::backward;
    p.cfl_factor = cfl;
    p.anchor_time = horizon;
    const TimeField vf = solve_brs(p);
    if (!touches_xy_boundary(vf.snaps.front())) return remap_remaining(vf, horizon);
    require(attempt < 2, errc::domain_too_small,
            "relative reach solve: set still touches the domain edge after two expansions");
    span *= 2.0;
    n = 2 * n - 1;
  }
}

inline std::vector<double> schedule_times(double t0, double t1, double dt) {
  require(dt > 0.0, errc::bad_argument, "schedule_times: step must be positive");
  const int k_max = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
  std::vector<double> times;
  times.reserve(static_cast<size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) times.push_back(t0 + dt * k);
  return times;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Relative-frame artifacts.
// --------------------------------------------------------------------------

// Buffer set: states from which two fleet vehicles steering straight at each
// other (worst winds included) can collide within t_brd. Snapshots indexed by
// remaining duration.
inline TimeField relative_buffer(const DubinsParams& own, const DubinsParams& other,
                                 double t_brd, double r_c, int counts_xy = 61,
                                 int counts_theta = 31, double cfl = 0.5) {
  require(t_brd >= 0.0, errc::bad_argument, "relative_buffer: horizon must be nonnegative");
  require(r_c > 0.0, errc::negative_radius, "relative_buffer: capture radius must be positive");
  const double closing = own.v_max + other.v_max + own.d_r + other.d_r;
  const double span = r_c + closing * t_brd;
  return detail::rel_danger_brs(own, other, roles::mutual_collision(), t_brd, r_c,
                                span + 0.2 * span + 4.0 * (2.0 * span / (counts_xy - 1)),
                                counts_xy, counts_theta, cfl);
}

// Avoid region and its companions: the set of relative states from which the
// intruder can force a capture within the remaining duration despite optimal
// evasion, the buffer set between fleet vehicles, the avoidance-control
// handle, and the sensing distance.
inline AvoidArtifacts compute_avoid_region(const DubinsParams& intruder,
                                           const DubinsParams& vehicle, double tbar, double r_c,
                                           double t_brd, int counts_xy = 61, int counts_theta = 31,
                                           double cfl = 0.5) {
  require(tbar >= 0.0, errc::bad_argument, "compute_avoid_region: tbar must be nonnegative");
  require(t_brd >= 0.0 && t_brd <= tbar + 1e-12, errc::bad_argument,
          "compute_avoid_region: t_brd must lie in [0, tbar]");
  require(r_c > 0.0, errc::negative_radius,
          "compute_avoid_region: capture radius must be positive");
  AvoidArtifacts art;
  art.rel_avoid = dubins_relative_spec(vehicle, intruder, roles::avoid());
  art.rel_buffer = dubins_relative_spec(vehicle, vehicle, roles::mutual_collision());
  const double speed_sum =
      vehicle.v_max + intruder.v_max + vehicle.d_r + intruder.d_r;
  const double span0 = std::max(2.0 * r_c, r_c + 0.3 * speed_sum * tbar);
  art.avoid = detail::rel_danger_brs(vehicle, intruder, roles::avoid(), tbar, r_c, span0,
                                     counts_xy, counts_theta, cfl);
  art.buffer = relative_buffer(vehicle, vehicle, t_brd, r_c, counts_xy, counts_theta, cfl);
  art.d_sen = sensing_distance(art.avoid.snaps.back());
  return art;
}

// --------------------------------------------------------------------------
// Base obstacles and composed footprints.
// --------------------------------------------------------------------------

// Tracking-tube footprint: at each schedule time, the disk of radius
// eps_track around the plan's nominal position (parked before departure,
// held after arrival); heading-free position-plane fields.
inline ObstacleSchedule base_obstacle_rtt(const VehiclePlan& plan, double eps_track,
                                          const Grid& plane, const std::vector<double>& times) {
  require(eps_track >= 0.0, errc::negative_radius,
          "base_obstacle_rtt: tube radius must be nonnegative");
  require(!times.empty(), errc::bad_argument, "base_obstacle_rtt: no schedule times");
  ObstacleSchedule out;
  out.direction = TimeDirection::forward;
  for (double t : times) {
    // A vehicle occupies airspace only between departure and arrival; parked
    // and landed states leave the snapshot empty.
    if (t < plan.depart - 1e-9 || t > plan.arrive + 1e-9) {
      out.append(make_field(plane, kFar, t));
      continue;
    }
    const auto p = plan.position_at(t);
    ScalarField f = detail::ball_field(plane, p[0], p[1], eps_track);
    f.time = t;
    out.append(std::move(f));
  }
  return out;
}

// Separation region: the base footprint widened, via Minkowski sum, by the
// position footprint of the avoid region (relative heading collapsed by a
// minimum first). A vehicle whose distance from the tube exceeds this set's
// reach can never be forced into the tube's danger zone.
inline ObstacleSchedule separation_region(const ObstacleSchedule& base,
                                          const ScalarField& avoid_rel) {
  require(!base.empty(), errc::empty_schedule, "separation_region: empty base schedule");
  require(base.grid().ndim == 2, errc::grid_mismatch,
          "separation_region: base must be a position-plane schedule");
  require(avoid_rel.grid.ndim >= 2, errc::grid_mismatch,
          "separation_region: avoid region needs position dimensions");
  const ScalarField flat =
      avoid_rel.grid.ndim > 2 ? detail::flatten_heading(avoid_rel) : avoid_rel;
  const ScalarField summand = detail::resample2(base.grid(), flat);
  ObstacleSchedule out;
  out.direction = base.direction;
  for (const ScalarField& snap : base.snaps) {
    ScalarField s = minkowski_sum(snap, summand);
    s.time = snap.time;
    out.append(std::move(s));
  }
  return out;
}

// Buffer region: the separation region widened by the buffer footprint and
// by the avoid footprint at the reduced horizon tbar - t_brd. Keeping lower
// priority vehicles outside this set guarantees the gap between forced
// avoidance start times.
inline ObstacleSchedule buffer_region(const ObstacleSchedule& sep, const ScalarField& rel_buffer,
                                      const ScalarField& avoid_reduced) {
  require(!sep.empty(), errc::empty_schedule, "buffer_region: empty separation schedule");
  require(sep.grid().ndim == 2, errc::grid_mismatch,
          "buffer_region: separation must be a position-plane schedule");
  const ScalarField buf = detail::resample2(
      sep.grid(), rel_buffer.grid.ndim > 2 ? detail::flatten_heading(rel_buffer) : rel_buffer);
  const ScalarField avd = detail::resample2(
      sep.grid(),
      avoid_reduced.grid.ndim > 2 ? detail::flatten_heading(avoid_reduced) : avoid_reduced);
  ObstacleSchedule out;
  out.direction = sep.direction;
  for (const ScalarField& snap : sep.snaps) {
    ScalarField s = minkowski_sum(minkowski_sum(snap, buf), avd);
    s.time = snap.time;
    out.append(std::move(s));
  }
  return out;
}

// Mirrored buffer: the set the lower-priority vehicle's own possible
// avoidance sweeps around the higher-priority tube — base, then the leader's
// reduced-horizon avoid footprint and buffer, then the follower's full avoid
// footprint.
inline ObstacleSchedule buffer_region_mirror(const ObstacleSchedule& base,
                                             const ScalarField& avoid_reduced_leader,
                                             const ScalarField& rel_buffer_leader,
                                             const ScalarField& avoid_full_follower) {
  require(!base.empty(), errc::empty_schedule, "buffer_region_mirror: empty base schedule");
  require(base.grid().ndim == 2, errc::grid_mismatch,
          "buffer_region_mirror: base must be a position-plane schedule");
  auto flat2 = [&](const ScalarField& f) {
    return detail::resample2(base.grid(),
                             f.grid.ndim > 2 ? detail::flatten_heading(f) : f);
  };
  const ScalarField a = flat2(avoid_reduced_leader);
  const ScalarField b = flat2(rel_buffer_leader);
  const ScalarField c = flat2(avoid_full_follower);
  ObstacleSchedule out;
  out.direction = base.direction;
  for (const ScalarField& snap : base.snaps) {
    ScalarField s = minkowski_sum(minkowski_sum(minkowski_sum(snap, a), b), c);
    s.time = snap.time;
    out.append(std::move(s));
  }
  return out;
}

// Static-obstacle hardening: everywhere the vehicle could be forced into a
// capture-inflated static shape within tbar. Static sets make the backward
// reach stationary, so one solve is replicated across the schedule lattice.
// No shapes: empty schedule.
inline ObstacleSchedule static_avoid_brs(const std::vector<StaticCircle>& circles,
                                         const std::vector<StaticRect>& rects,
                                         const DubinsParams& params, double tbar, double r_c,
                                         double t_anchor, const Grid& grid,
                                         const std::vector<double>& times, double cfl = 0.5) {
  ObstacleSchedule out;
  out.direction = TimeDirection::forward;
  if (circles.empty() && rects.empty()) return out;
  require(!times.empty(), errc::bad_argument, "static_avoid_brs: no schedule times");
  ReachProblem p;
  p.grid = grid;
  p.target = statics_field(grid, circles, rects, r_c);
  p.dynspec = dubins_absolute_spec(params, roles::obstacle_brs());
  p.horizon = tbar;
  p.direction = TimeDirection::backward;
  p.cfl_factor = cfl;
  p.anchor_time = t_anchor;
  const TimeField vf = solve_brs(p);
  const ScalarField& grown = vf.snaps.front();
  for (double t : times) {
    ScalarField f = grown;
    f.time = t;
    out.append(std::move(f));
  }
  return out;
}

// --------------------------------------------------------------------------
// Canonical families for the induced obstacles.
// --------------------------------------------------------------------------

// Origin-centered solves shared by every (follower, leader) pair with the
// same parameters. Position-plane shapes translate along the leader's
// nominal position; the arrive-at-time families are indexed by remaining
// time to arrival and translate along the leader position at arrival.
struct PairArtifacts {
  double eps = 0.0, r_c = 0.0, tbar = 0.0, t_brd = 0.0;
  ScalarField case1_shape;   // capture-inflated tube cross-section
  ScalarField case2_shape;   // capture-inflated footprint of the tube grown tbar
  ScalarField case5_shape;   // same with the reduced growth tbar - t_brd
  ScalarField sep_shape;     // separation footprint around the leader
  ScalarField buffer_shape;  // forward buffer footprint
  ScalarField mirror_shape;  // mirrored buffer footprint
  TimeField v3;  // arrive-exact reach of the capture-inflated cross-section
  TimeField v4;  // arrive-exact reach of case2_shape, horizon tbar - t_brd
  TimeField v5;  // arrive-exact reach of case5_shape, horizon tbar
  std::vector<SubzeroBox> v3_box, v4_box, v5_box;  // parallel to the snaps
  SubzeroBox case1_box{}, case2_box{}, case5_box{}, sep_box{}, buffer_box{}, mirror_box{};
};

namespace detail {

inline double subzero_radius(const ScalarField& f) {
  return max_norm_of_subzero(f, f.grid.ndim >= 2 ? std::vector<int>{0, 1} : std::vector<int>{0});
}

inline Grid sized_plane(double bound, int counts) {
  const int n = counts | 1;
  const double span = bound + 8.0 * (2.0 * bound / (n - 1));
  return canonical_plane(span, n);
}

inline Grid sized_volume(double bound, int counts, int theta_counts) {
  const int n = counts | 1;
  const double span = bound + 8.0 * (2.0 * bound / (n - 1));
  return canonical_volume(span, n, theta_counts);
}

// Pick a save stride that lands snapshots roughly `want_dt` apart.
inline int stride_for(const ReachProblem& p, double want_dt) {
  if (p.horizon <= 0.0 || want_dt <= 0.0) return 0;
  const int nsteps = reach_step_count(p);
  const int want = std::max(1, static_cast<int>(std::ceil(p.horizon / want_dt - 1e-9)));
  return std::max(1, nsteps / want);
}

// First snapshot at or after `t` (clamped): rounding a remaining-time lookup
// up keeps set queries on the conservative side.
inline int sample_index_up(const TimeField& tf, double t) {
  const int k = tf.sample_index(t);
  const bool below = tf.snaps[static_cast<size_t>(k)].time < t - 1e-9;
  return below && k + 1 < static_cast<int>(tf.snaps.size()) ? k + 1 : k;
}

inline std::vector<SubzeroBox> boxes_of(const TimeField& tf) {
  std::vector<SubzeroBox> boxes;
  boxes.reserve(tf.snaps.size());
  for (const ScalarField& s : tf.snaps) boxes.push_back(subzero_box(s));
  return boxes;
}

// Arrive-at-exact-time backward family of a heading-free position target,
// re-indexed by remaining time to arrival (time-invariant dynamics make one
// solve serve every arrival time).
inline TimeField arrive_family(const ScalarField& target2, const DubinsParams& params,
                               double horizon, int counts, int theta_counts, double union_dt,
                               double cfl) {
  const double bound = subzero_radius(target2) + (params.v_max + params.d_r) * horizon;
  const Grid g = sized_volume(bound, counts, theta_counts);
  ReachProblem p;
  p.grid = g;
  p.target = broadcast3(g, resample2(plane_of(g), target2));
  p.dynspec = dubins_absolute_spec(params, roles::obstacle_brs());
  p.horizon = horizon;
  p.direction = TimeDirection::backward;
  p.mode = ReachMode::arrive_exact;
  p.cfl_factor = cfl;
  p.anchor_time = horizon;
  p.save_stride = stride_for(p, union_dt);
  return remap_remaining(solve_brs(p), horizon);
}

}  // namespace detail

// Build the canonical solves for one (follower i, leader j) parameter pair.
// `avoid_*` footprints come from the two vehicles' artifacts; the tube grows
// with the leader's dynamics, the arrive families with the follower's.
inline PairArtifacts build_pair_artifacts(const DubinsParams& follower, const DubinsParams& leader,
                                          const AvoidArtifacts& art_follower,
                                          const AvoidArtifacts& art_leader, double eps_track,
                                          double r_c, double tbar, double t_brd, int counts,
                                          int theta_counts, double union_dt, double cfl) {
  PairArtifacts pa;
  pa.eps = eps_track;
  pa.r_c = r_c;
  pa.tbar = tbar;
  pa.t_brd = t_brd;
  const double t_rd = tbar - t_brd;

  // Tube footprints: the tracking tube admits every heading, so after tau
  // seconds of unobserved flight the leader's position set is exactly the
  // disk of radius eps + (v_max + d_r) tau; adding the capture radius gives
  // the case footprints in closed form.
  const double grow = leader.v_max + leader.d_r;
  const Grid tube_plane = detail::sized_plane(eps_track + r_c + grow * tbar, counts);
  pa.case2_shape = detail::ball_field(tube_plane, 0.0, 0.0, eps_track + r_c + grow * tbar);
  pa.case5_shape = detail::ball_field(tube_plane, 0.0, 0.0, eps_track + r_c + grow * t_rd);
  pa.case1_shape = detail::ball_field(
      detail::canonical_plane(r_c + eps_track + 4.0 * tube_plane.spacing[0], counts), 0.0, 0.0,
      r_c + eps_track);

  // Arrive-at-time families for the three backward-reach cases.
  pa.v3 = detail::arrive_family(pa.case1_shape, follower, tbar, counts, theta_counts, union_dt,
                                cfl);
  pa.v4 = detail::arrive_family(pa.case2_shape, follower, t_rd, counts, theta_counts, union_dt,
                                cfl);
  pa.v5 = detail::arrive_family(pa.case5_shape, follower, tbar, counts, theta_counts, union_dt,
                                cfl);
  pa.v3_box = detail::boxes_of(pa.v3);
  pa.v4_box = detail::boxes_of(pa.v4);
  pa.v5_box = detail::boxes_of(pa.v5);

  // Separation and buffer footprints (Minkowski sums on one aligned plane).
  const ScalarField av_j_full = detail::flatten_heading(art_leader.avoid.sample(tbar));
  const ScalarField av_j_trd = detail::flatten_heading(art_leader.avoid.sample(t_rd));
  const ScalarField av_i_full = detail::flatten_heading(art_follower.avoid.sample(tbar));
  const ScalarField av_i_trd = detail::flatten_heading(art_follower.avoid.sample(t_rd));
  const ScalarField buf_i = detail::flatten_heading(art_follower.buffer.sample(t_brd));
  const ScalarField buf_j = detail::flatten_heading(art_leader.buffer.sample(t_brd));
  const double r_av_i = detail::subzero_radius(av_i_full);
  const double r_av_j = detail::subzero_radius(av_j_full);
  const double r_buf = std::max(detail::subzero_radius(buf_i), detail::subzero_radius(buf_j));
  const double bound = eps_track + r_av_i + r_av_j + r_buf + r_av_i;
  const Grid sum_g = detail::sized_plane(bound, counts);
  auto on = [&](const ScalarField& f) { return detail::resample2(sum_g, f); };
  const ScalarField tube0 = detail::ball_field(sum_g, 0.0, 0.0, eps_track);
  pa.sep_shape = minkowski_sum(tube0, on(av_j_full));
  pa.buffer_shape = minkowski_sum(minkowski_sum(pa.sep_shape, on(buf_i)), on(av_i_trd));
  pa.mirror_shape = minkowski_sum(
      minkowski_sum(minkowski_sum(tube0, on(av_j_trd)), on(buf_j)), on(av_i_full));

  pa.case1_box = subzero_box(pa.case1_shape);
  pa.case2_box = subzero_box(pa.case2_shape);
  pa.case5_box = subzero_box(pa.case5_shape);
  pa.sep_box = subzero_box(pa.sep_shape);
  pa.buffer_box = subzero_box(pa.buffer_shape);
  pa.mirror_box = subzero_box(pa.mirror_shape);
  return pa;
}

// --------------------------------------------------------------------------
// Induced obstacles (the five cases).
// --------------------------------------------------------------------------

namespace detail {

// Inclusive union lattice over [lo, hi] with stride near `dt`.
template <typename F>
inline void for_union_times(double lo, double hi, double dt, F&& body) {
  if (hi <= lo + 1e-12) {
    body(lo);
    return;
  }
  const int k_max = std::max(1, static_cast<int>(std::ceil((hi - lo) / dt - 1e-9)));
  const double step = (hi - lo) / k_max;
  for (int k = 0; k <= k_max; ++k) body(lo + step * k);
}

}  // namespace detail

// Obstacle schedule a leader's possible intruder-avoidance imposes on a
// follower, by case:
//   1  the capture-inflated tube itself (no deviation modeled);
//   2  the avoidance has fully played out — the tube's forward reach over the
//      last tbar, capture-inflated (contains case 1);
//   3  the avoidance may start during the follower's own engagement window —
//      backward reach, over arrival times in [t, t+tbar], of the
//      capture-inflated tube (plus the raw static set when present);
//   4  the avoidance started before the follower's window — backward reach
//      over [t, t+tbar-t_brd] of the fully grown footprint at s - tbar;
//   5  both engagements overlap at the separation gap — arrive-at-exact-time
//      sets over arrival times in [t+tbar-2*t_brd, t+tbar] of the
//      reduced-growth footprint at the arrival time minus tbar - t_brd.
// All unions are discretized on the `union_dt` lattice. Obstacles exist only
// while the leader is airborne: a member whose engagement anchor (the time
// the leader's position is referenced at) falls outside [depart, arrive] is
// dropped — a parked or landed vehicle occupies no airspace. Remaining-time
// lookups round up to the next stored snapshot (the conservative side).
inline ObstacleSchedule induced_obstacles(const VehiclePlan& leader, const PairArtifacts& pa,
                                          int case_k, const Grid& grid,
                                          const std::vector<double>& times, double union_dt,
                                          const ScalarField* static_raw_brs = nullptr) {
  require(case_k >= 1 && case_k <= 5, errc::bad_argument,
          "induced_obstacles: case must lie in 1..5");
  require(!times.empty(), errc::bad_argument, "induced_obstacles: no schedule times");
  require(union_dt > 0.0, errc::bad_argument, "induced_obstacles: union stride must be positive");
  const double tbar = pa.tbar;
  const double t_brd = pa.t_brd;
  const double t_rd = tbar - t_brd;
  ObstacleSchedule out;
  out.direction = TimeDirection::forward;
  for (double t : times) {
    ScalarField f = make_field(grid, kFar, t);
    auto at = [&](double tc) { return leader.position_at(tc); };
    auto flying = [&](double anchor) {
      return anchor >= leader.depart - 1e-9 && anchor <= leader.arrive + 1e-9;
    };
    switch (case_k) {
      case 1: {
        if (!flying(t)) break;
        const auto p = at(t);
        detail::translate_min_into(f, pa.case1_shape, pa.case1_box, p[0], p[1]);
        break;
      }
      case 2: {
        if (!flying(t - tbar)) break;
        const auto p = at(t - tbar);
        detail::translate_min_into(f, pa.case2_shape, pa.case2_box, p[0], p[1]);
        break;
      }
      case 3: {
        detail::for_union_times(t, t + tbar, union_dt, [&](double s) {
          if (!flying(s)) return;
          const int k = detail::sample_index_up(pa.v3, s - t);
          const auto p = at(s);
          detail::translate_min_into(f, pa.v3.snaps[static_cast<size_t>(k)],
                                     pa.v3_box[static_cast<size_t>(k)], p[0], p[1]);
        });
        if (static_raw_brs)
          for (size_t n = 0; n < f.values.size(); ++n)
            f.values[n] = std::min(f.values[n], static_raw_brs->values[n]);
        break;
      }
      case 4: {
        detail::for_union_times(t, t + t_rd, union_dt, [&](double s) {
          if (!flying(s - tbar)) return;
          const int k = detail::sample_index_up(pa.v4, s - t);
          const auto p = at(s - tbar);
          detail::translate_min_into(f, pa.v4.snaps[static_cast<size_t>(k)],
                                     pa.v4_box[static_cast<size_t>(k)], p[0], p[1]);
        });
        break;
      }
      case 5: {
        const double lo = std::max(t, t + tbar - 2.0 * t_brd);
        detail::for_union_times(lo, t + tbar, union_dt, [&](double tau) {
          if (!flying(tau - t_rd)) return;
          const int k = detail::sample_index_up(pa.v5, tau - t);
          const auto p = at(tau - t_rd);
          detail::translate_min_into(f, pa.v5.snaps[static_cast<size_t>(k)],
                                     pa.v5_box[static_cast<size_t>(k)], p[0], p[1]);
        });
        break;
      }
      default:
        break;
    }
    out.append(std::move(f));
  }
  return out;
}

// --------------------------------------------------------------------------
// Plan-time context: caches shared across vehicles of one planning run.
// --------------------------------------------------------------------------

struct RelSets {
  std::shared_ptr<const AvoidArtifacts> art;
};

struct StaticSets {
  bool present = false;
  ScalarField avoid_brs;  // stationary reach of the capture-inflated statics
  ScalarField raw_brs;    // stationary reach of the raw statics (case 3)
};

struct PlanContext {
  const Scenario* sc = nullptr;
  std::map<std::array<double, 4>, RelSets> rel;
  std::map<std::array<double, 4>, StaticSets> stat;
  std::map<std::array<double, 8>, std::shared_ptr<const PairArtifacts>> pairs;
};

namespace detail {

inline std::array<double, 4> params_key(const DubinsParams& p) {
  return {p.v_min, p.v_max, p.w_max, p.d_r};
}

inline const RelSets& rel_for(PlanContext& ctx, size_t veh) {
  const DubinsParams& par = ctx.sc->params_for(veh);
  const auto key = params_key(par);
  auto it = ctx.rel.find(key);
  if (it == ctx.rel.end()) {
    const Scenario& sc = *ctx.sc;
    RelSets rs;
    rs.art = std::make_shared<AvoidArtifacts>(
        compute_avoid_region(sc.intruder_params, par, sc.tbar, sc.r_c, sc.t_brd(),
                             sc.opts.rel_counts, sc.opts.rel_theta, sc.opts.cfl));
    it = ctx.rel.emplace(key, std::move(rs)).first;
  }
  return it->second;
}

inline const StaticSets& stat_for(PlanContext& ctx, size_t veh) {
  const DubinsParams& par = ctx.sc->params_for(veh);
  const auto key = params_key(par);
  auto it = ctx.stat.find(key);
  if (it == ctx.stat.end()) {
    const Scenario& sc = *ctx.sc;
    StaticSets st;
    st.present = sc.has_statics();
    if (st.present) {
      const DynSpec dyn = dubins_absolute_spec(par, roles::obstacle_brs());
      auto grown = [&](double inflate) {
        ReachProblem p;
        p.grid = sc.grid;
        p.target = statics_field(sc.grid, sc.circles, sc.rects, inflate);
        p.dynspec = dyn;
        p.horizon = sc.tbar;
        p.direction = TimeDirection::backward;
        p.cfl_factor = sc.opts.cfl;
        p.anchor_time = sc.tbar;
        return solve_brs(p).snaps.front();
      };
      st.avoid_brs = grown(sc.r_c);
      st.raw_brs = grown(0.0);
    }
    it = ctx.stat.emplace(key, std::move(st)).first;
  }
  return it->second;
}

inline std::shared_ptr<const PairArtifacts> pair_for(PlanContext& ctx, size_t follower,
                                                     size_t leader) {
  const Scenario& sc = *ctx.sc;
  const DubinsParams& pi = sc.params_for(follower);
  const DubinsParams& pj = sc.params_for(leader);
  const auto ki = params_key(pi);
  const auto kj = params_key(pj);
  std::array<double, 8> key{};
  std::copy(ki.begin(), ki.end(), key.begin());
  std::copy(kj.begin(), kj.end(), key.begin() + 4);
  auto it = ctx.pairs.find(key);
  if (it == ctx.pairs.end()) {
    const int theta =
        sc.opts.canon_theta > 0 ? sc.opts.canon_theta : sc.grid.counts[2];
    const double union_dt = sc.opts.union_dt > 0.0 ? sc.opts.union_dt : sc.opts.control_dt;
    auto pa = std::make_shared<PairArtifacts>(build_pair_artifacts(
        pi, pj, *rel_for(ctx, follower).art, *rel_for(ctx, leader).art, sc.eps_track, sc.r_c,
        sc.tbar, sc.t_brd(), sc.opts.canon_counts, theta, union_dt, sc.opts.cfl));
    it = ctx.pairs.emplace(key, std::move(pa)).first;
  }
  return it->second;
}

// Accumulate one leader's footprints into `total`: the buffer and mirror
// shapes carried along the nominal trajectory while the leader is airborne,
// plus induced cases 2-5 (case 1 is contained in case 2). `raw_statics`
// feeds the flight-feasibility clip of case 3 when the map has shapes.
inline void add_leader_obstacles(PlanContext& ctx, size_t follower, size_t leader,
                                 const VehiclePlan& plan, ObstacleSchedule& total,
                                 const std::vector<double>& times,
                                 const ScalarField* raw_statics) {
  const Scenario& sc = *ctx.sc;
  const double union_dt = sc.opts.union_dt > 0.0 ? sc.opts.union_dt : sc.opts.control_dt;
  const auto pa = pair_for(ctx, follower, leader);
  for (size_t k = 0; k < times.size(); ++k) {
    if (times[k] < plan.depart - 1e-9 || times[k] > plan.arrive + 1e-9) continue;
    const auto p = plan.position_at(times[k]);
    translate_min_into(total.snaps[k], pa->buffer_shape, pa->buffer_box, p[0], p[1]);
    translate_min_into(total.snaps[k], pa->mirror_shape, pa->mirror_box, p[0], p[1]);
  }
  for (int case_k = 2; case_k <= 5; ++case_k) {
    const ObstacleSchedule induced = induced_obstacles(plan, *pa, case_k, sc.grid, times,
                                                       union_dt,
                                                       case_k == 3 ? raw_statics : nullptr);
    for (size_t k = 0; k < times.size(); ++k)
      for (size_t n = 0; n < total.snaps[k].values.size(); ++n)
        total.snaps[k].values[n] =
            std::min(total.snaps[k].values[n], induced.snaps[k].values[n]);
  }
}

}  // namespace detail

// --------------------------------------------------------------------------
// Total obstacles and per-vehicle planning.
// --------------------------------------------------------------------------

// Union of everything vehicle `i` must stay clear of: the static hardening,
// and per higher-priority leader both buffer footprints plus induced cases
// 2-5 (case 1 is contained in case 2). The highest-priority vehicle faces
// the static hardening alone.
inline ObstacleSchedule total_obstacles(PlanContext& ctx, size_t i,
                                        const std::vector<VehiclePlan>& higher,
                                        const std::vector<double>& times) {
  require(ctx.sc != nullptr, errc::bad_argument, "total_obstacles: context not bound");
  const Scenario& sc = *ctx.sc;
  require(i < sc.vehicles.size(), errc::bad_argument, "total_obstacles: vehicle index");
  require(higher.size() >= i, errc::missing_prerequisite,
          "total_obstacles: all higher-priority vehicles must be planned first");
  require(!times.empty(), errc::bad_argument, "total_obstacles: no schedule times");
  const StaticSets& st = detail::stat_for(ctx, i);

  ObstacleSchedule total;
  total.direction = TimeDirection::forward;
  for (double t : times) {
    ScalarField f = st.present ? st.avoid_brs : make_field(sc.grid, kFar);
    f.time = t;
    total.append(std::move(f));
  }
  if (i == 0) return total;

  for (size_t j = 0; j < i; ++j)
    detail::add_leader_obstacles(ctx, i, j, higher[j], total, times,
                                 st.present ? &st.raw_brs : nullptr);
  return total;
}

// Plan one vehicle against a fixed obstacle schedule: backward reach of the
// target anchored at the scheduled arrival, latest departure time from the
// start state's last sub-zero crossing, then a zero-disturbance rollout of
// the optimal controller sampled on the control lattice.
inline VehiclePlan plan_vehicle(const Scenario& sc, size_t idx, ObstacleSchedule total,
                                HamRole role = roles::planning()) {
  require(idx < sc.vehicles.size(), errc::bad_argument, "plan_vehicle: vehicle index");
  const VehicleSpec& veh = sc.vehicles[idx];
  const DubinsParams& par = sc.params_for(idx);
  const PlannerOptions& o = sc.opts;
  const std::string who = "vehicle " + std::to_string(veh.id);

  VehiclePlan plan;
  plan.vehicle_id = veh.id;
  plan.vehicle = veh;
  plan.spec = dubins_absolute_spec(par, role);
  plan.total = std::move(total);

  ReachProblem p;
  p.grid = sc.grid;
  p.target = detail::ball_field(sc.grid, veh.target.center[0], veh.target.center[1],
                                veh.target.radius);
  p.obstacles = plan.total.empty() ? nullptr : &plan.total;
  p.dynspec = plan.spec;
  p.horizon = veh.sta + o.departure_slack;
  p.direction = TimeDirection::backward;
  p.cfl_factor = o.cfl;
  p.anchor_time = veh.sta;
  p.save_stride = detail::stride_for(p, p.horizon / std::max(1, o.value_snaps - 1));
  plan.value = solve_brs(p);

  // Latest departure: the last snapshot time whose reach set contains the
  // start state, sharpened between snapshots by a linear crossing of the
  // sampled value.
  const std::vector<double> x0{veh.x0[0], veh.x0[1], veh.x0[2]};
  std::vector<double> g;
  g.reserve(plan.value.snaps.size());
  for (const ScalarField& snap : plan.value.snaps) g.push_back(interpolate(snap, x0));
  int last = -1;
  for (int k = static_cast<int>(g.size()) - 1; k >= 0; --k)
    if (g[static_cast<size_t>(k)] <= 0.0) {
      last = k;
      break;
    }
  require(last >= 0, errc::infeasible,
          who + ": start state never enters the planning reach set by the scheduled arrival");
  if (last == static_cast<int>(g.size()) - 1) {
    plan.ldt = plan.value.snaps.back().time;
  } else {
    const double t0 = plan.value.snaps[static_cast<size_t>(last)].time;
    const double t1 = plan.value.snaps[static_cast<size_t>(last) + 1].time;
    const double g0 = g[static_cast<size_t>(last)];
    const double g1 = g[static_cast<size_t>(last) + 1];
    plan.ldt = t0 + (t1 - t0) * (-g0) / (g1 - g0);
  }
  plan.depart = plan.ldt;

  // Zero-disturbance rollout under the optimal controller, forward Euler
  // with the control held over each period. Sample times come from the
  // lattice depart + k dt rather than accumulation so a closed-loop replay
  // stepping the same lattice reproduces the rollout exactly.
  const double dt = o.control_dt;
  std::array<double, 3> x = veh.x0;
  const double deadline = veh.sta + 2.0 * dt + 1e-9;
  bool arrived = false;
  for (int step = 0;; ++step) {
    const double t = plan.depart + dt * step;
    if (t > deadline) break;
    const std::vector<double> xv{x[0], x[1], x[2]};
    const ControlSample cs = controller_from_value(plan.value, plan.spec, t, xv);
    plan.nominal.push_back({t, x, cs.u.own[0], cs.u.own[1]});
    if (std::hypot(x[0] - veh.target.center[0], x[1] - veh.target.center[1]) <=
        veh.target.radius) {
      arrived = true;
      break;
    }
    Vec xs{};
    for (int d = 0; d < 3; ++d) xs[d] = x[d];
    ControlPair u;
    u.own = {cs.u.own[0], cs.u.own[1]};
    u.other = {0.0, 0.0};
    const Vec f = flow(plan.spec, xs, u, DisturbPair{});
    for (int d = 0; d < 3; ++d) x[d] += dt * f[d];
  }
  require(arrived, errc::infeasible,
          who + ": nominal rollout does not reach the target by the scheduled arrival");
  plan.arrive = plan.nominal.back().t;
  return plan;
}

// --------------------------------------------------------------------------
// Plan sets.
// --------------------------------------------------------------------------

struct PlanSet {
  Scenario scenario;
  std::vector<VehiclePlan> plans;
  std::vector<std::shared_ptr<const AvoidArtifacts>> avoid;  // per vehicle
  std::vector<ScalarField> sep_shape;  // origin-centered separation footprint
                                       // around each vehicle's own tube
  bool basic = false;
  std::vector<int> replanned;  // ids whose plans were rebuilt after an intrusion
};

namespace detail {

// Origin-centered separation footprint for one vehicle as the moving
// obstacle: its tube cross-section widened by its avoid footprint.
inline ScalarField separation_shape(const AvoidArtifacts& art, double eps_track, double tbar,
                                    int counts) {
  const ScalarField flat = flatten_heading(art.avoid.sample(tbar));
  const Grid g = sized_plane(eps_track + subzero_radius(flat), counts);
  return minkowski_sum(ball_field(g, 0.0, 0.0, eps_track), resample2(g, flat));
}

// Pairwise separation while both vehicles are airborne (parked and landed
// states occupy no airspace).
inline void audit_separation(const PlanSet& ps, double r_c, double dt) {
  const auto& plans = ps.plans;
  for (size_t a = 0; a + 1 < plans.size(); ++a)
    for (size_t b = a + 1; b < plans.size(); ++b) {
      const double lo = std::max(plans[a].depart, plans[b].depart);
      const double hi = std::min(plans[a].arrive, plans[b].arrive);
      for (double t = lo; t <= hi + 1e-9; t += dt) {
        const auto pa = plans[a].position_at(t);
        const auto pb = plans[b].position_at(t);
        require(std::hypot(pa[0] - pb[0], pa[1] - pb[1]) >= r_c - 1e-9,
                errc::separation_breach,
                "vehicles " + std::to_string(plans[a].vehicle_id) + " and " +
                    std::to_string(plans[b].vehicle_id) +
                    " come within the capture radius at t = " + std::to_string(t));
      }
    }
}

}  // namespace detail

// Plan the whole fleet in priority order against one possible intruder:
// each vehicle's obstacles are the static hardening plus the buffer and
// induced-case sets of every higher-priority vehicle.
inline PlanSet plan_all(const Scenario& sc) {
  validate_scenario(sc);
  PlanContext ctx;
  ctx.sc = &sc;
  PlanSet out;
  out.scenario = sc;
  const Grid plane = detail::plane_of(sc.grid);
  for (size_t i = 0; i < sc.vehicles.size(); ++i) {
    const std::vector<double> times =
        detail::schedule_times(0.0, sc.vehicles[i].sta + sc.tbar, sc.opts.obstacle_dt);
    ObstacleSchedule total = total_obstacles(ctx, i, out.plans, times);
    VehiclePlan plan = plan_vehicle(sc, i, std::move(total));
    plan.base = base_obstacle_rtt(plan, sc.eps_track, plane, times);
    out.plans.push_back(std::move(plan));
  }
  for (size_t i = 0; i < sc.vehicles.size(); ++i) {
    const RelSets& rs = detail::rel_for(ctx, i);
    out.avoid.push_back(rs.art);
    out.sep_shape.push_back(
        detail::separation_shape(*rs.art, sc.eps_track, sc.tbar, sc.opts.canon_counts));
  }
  detail::audit_separation(out, sc.r_c, sc.opts.control_dt);
  return out;
}

// Baseline sequential planner: no intruder and no disturbances; each vehicle
// treats the raw statics plus capture disks around the exact trajectories of
// higher-priority vehicles as obstacles.
inline PlanSet basic_stp(const Scenario& sc) {
  validate_scenario(sc);
  Scenario calm = sc;
  calm.vehicle_params.d_r = 0.0;
  for (DubinsParams& p : calm.per_vehicle) p.d_r = 0.0;
  PlanSet out;
  out.scenario = calm;
  out.basic = true;
  ScalarField statics;
  if (calm.has_statics()) statics = statics_field(calm.grid, calm.circles, calm.rects, 0.0);
  const Grid plane = detail::plane_of(calm.grid);
  // Half-cell hardening: the planning clamp holds the value function outside
  // the stamped set only to first-order accuracy, so a trajectory riding the
  // boundary would graze r_c minus O(spacing/2) in rollout.
  const double stamp_r = calm.r_c + 0.5 * std::max(calm.grid.spacing[0], calm.grid.spacing[1]);
  for (size_t i = 0; i < calm.vehicles.size(); ++i) {
    const std::vector<double> times =
        detail::schedule_times(0.0, calm.vehicles[i].sta + calm.opts.obstacle_dt,
                               calm.opts.obstacle_dt);
    ObstacleSchedule total;
    total.direction = TimeDirection::forward;
    for (double t : times) {
      ScalarField f = calm.has_statics() ? statics : make_field(calm.grid, kFar);
      f.time = t;
      for (size_t j = 0; j < i; ++j) {
        if (t < out.plans[j].depart - 1e-9 || t > out.plans[j].arrive + 1e-9) continue;
        const auto p = out.plans[j].position_at(t);
        detail::stamp_ball(f, p[0], p[1], stamp_r);
      }
      total.append(std::move(f));
    }
    VehiclePlan plan = plan_vehicle(calm, i, std::move(total), roles::reach_basic());
    plan.base = base_obstacle_rtt(plan, calm.eps_track, plane, times);
    out.plans.push_back(std::move(plan));
  }
  detail::audit_separation(out, calm.r_c, calm.opts.control_dt);
  return out;
}

}  // namespace hjstp
