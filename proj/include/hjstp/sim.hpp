//
// sim.hpp — closed-loop simulation of a planned fleet under winds and one
// adversarial intruder: mode switching to the avoidance controller,
// avoid-start bookkeeping, replanning-set extraction, and post-intrusion
// replanning from the displaced states.
//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hjstp/planner.hpp"

namespace hjstp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DisturbPolicy { none, random, worst_case };
enum class IntruderKind { none, scripted, pursuit, chain };
enum class InjectionRule { explicit_state, avoid_boundary };
enum class SimMode { nominal, avoid, replanned };

inline const char* mode_name(SimMode m) {
  switch (m) {
    case SimMode::nominal: return "nominal";
    case SimMode::avoid: return "avoid";
    case SimMode::replanned: return "replanned";
  }
  return "nominal";
}

struct SimConfig {
  double dt = 0.1;       // control period and integration step (s)
  double horizon = 0.0;  // absolute end time of the run (s)
  DisturbPolicy disturbance = DisturbPolicy::none;
  IntruderKind intruder = IntruderKind::none;
  std::vector<int> victims;  // pursuit hounds front(), chain walks the list
  std::vector<std::array<double, 2>> waypoints;  // scripted route
  double tsa = 0.0;  // intruder appearance time (s)
  InjectionRule injection = InjectionRule::explicit_state;
  std::array<double, 3> intruder_x0{};
  double injection_bearing = 0.0;  // world bearing victim -> intruder (rad)
  bool switching = true;  // hand forced vehicles to the avoidance controller
  std::uint64_t seed = 0;
};

struct SimStep {
  double t = 0.0;
  int vehicle = 0;  // -1 is the intruder
  std::array<double, 3> x{};
  std::array<double, 2> u{};  // speed, turn rate
  std::array<double, 2> d{};  // wind
  SimMode mode = SimMode::nominal;
  double v_avoid = kInf;  // avoid-region value at the sampled relative state
};

// Point event: kind is one of "injection", "avoid-switch", "removal",
// "landing", "separation-violation", "separation-breach". `a`/`b` are vehicle
// ids where they apply (-1 for the intruder or when unused).
struct SimEvent {
  double t = 0.0;
  std::string kind;
  int a = -1;
  int b = -1;
  double value = 0.0;
};

struct SimLog {
  double dt = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double tbar = 0.0;
  double r_c = 0.0;
  int n_va = 0;
  std::vector<int> vehicle_ids;  // priority order
  std::vector<SimStep> steps;    // per step: vehicles in priority order, intruder last
  std::vector<SimEvent> events;
  std::vector<double> t_avoid;  // forced-avoidance start per vehicle, inf = never
  bool intruder_ran = false;
  bool removal_recorded = false;
  double tsa = kInf;
  double tea = kInf;
  std::vector<std::array<double, 3>> state_at_removal;
  std::vector<bool> airborne_at_removal;
};

namespace detail {

inline int sim_index_of(const std::vector<int>& ids, int id) {
  for (size_t k = 0; k < ids.size(); ++k)
    if (ids[k] == id) return static_cast<int>(k);
  return -1;
}

// Intruder state in the vehicle's body frame.
inline std::vector<double> relative_state(const std::array<double, 3>& veh,
                                          const std::array<double, 3>& intr) {
  const double c = std::cos(veh[2]), s = std::sin(veh[2]);
  const double dx = intr[0] - veh[0], dy = intr[1] - veh[1];
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(intr[2] - veh[2])};
}

// Clamp a query point into the grid box so gradient extraction stays legal;
// periodic axes wrap on their own.
inline std::vector<double> clamp_into(const Grid& g, std::vector<double> x) {
  for (int k = 0; k < g.ndim; ++k)
    if (!g.periodic[k]) x[k] = std::clamp(x[k], g.mins[k], g.maxs[k]);
  return x;
}

// One wind draw, area-uniform on the disk of radius r. Always consumes two
// uniforms so the stream position does not depend on the policy in force.
inline std::array<double, 2> draw_wind(std::mt19937_64& rng,
                                       std::uniform_real_distribution<double>& unif, double r) {
  const double u1 = unif(rng);
  const double u2 = unif(rng);
  const double rad = r * std::sqrt(u1);
  const double phi = 2.0 * kPi * u2;
  return {rad * std::cos(phi), rad * std::sin(phi)};
}

// Rotate a body-frame vector into the world frame of a vehicle at heading th.
inline std::array<double, 2> to_world(double th, const std::array<double, 2>& v) {
  const double c = std::cos(th), s = std::sin(th);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

// Turn-rate command that homes a unicycle onto a world-frame bearing.
inline double homing_turn(double bearing, double heading, double w_max) {
  return std::clamp(4.0 * wrap_angle(bearing - heading), -w_max, w_max);
}

}  // namespace detail

// Place the intruder on the boundary of the victim's full-duration avoid
// region along a fixed world bearing, facing the victim. The returned state
// sits on the inside of the boundary, so the victim is forced at the moment
// of injection.
inline std::array<double, 3> inject_on_boundary(const AvoidArtifacts& art,
                                                const std::array<double, 3>& victim,
                                                double bearing, double r_c) {
  const Grid& g = art.avoid.grid();
  const double heading = wrap_angle(bearing + kPi);
  auto state_of = [&](double r) {
    return std::array<double, 3>{victim[0] + r * std::cos(bearing),
                                 victim[1] + r * std::sin(bearing), heading};
  };
  const ScalarField& full = art.avoid.snaps.back();
  auto value_of = [&](double r) {
    const auto rel = detail::relative_state(victim, state_of(r));
    return interpolate_ext(full, rel.data());
  };
  double lo = 0.5 * r_c;
  double hi = 0.98 * std::min(std::min(g.maxs[0], -g.mins[0]), std::min(g.maxs[1], -g.mins[1]));
  require(value_of(lo) <= 0.0, errc::bad_argument,
          "avoid boundary injection: ray starts outside the avoid region");
  require(value_of(hi) > 0.0, errc::bad_argument,
          "avoid boundary injection: ray never leaves the avoid region");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value_of(mid) <= 0.0 ? lo : hi) = mid;
  }
  return state_of(lo);
}

struct IntruderDecision {
  std::array<double, 2> u{};     // speed, turn rate
  std::array<double, 2> wind{};  // world-frame worst wind for the intruder
  size_t victim = 0;             // index into the victim list after advancing
  bool engaged = false;
};

// Piecewise pursuit: chase the current victim with the pursuit side of the
// avoidance game, advancing down the list once a victim has been forced (its
// avoid value crossed zero) or stops flying. Victims already forced are
// passed permanently; victims not yet airborne are only skipped over for the
// step. Inside the relative grid the control comes from the value gradient;
// far outside it, plain bearing homing closes the gap first.
inline IntruderDecision intruder_chain_strategy(
    const std::array<double, 3>& x_intr, const std::vector<int>& victims, size_t current,
    const PlanSet& ps, const std::vector<std::array<double, 3>>& states,
    const std::vector<bool>& airborne, const std::vector<bool>& forced, double remaining) {
  require(!victims.empty(), errc::bad_argument, "intruder strategy: no victims listed");
  std::vector<int> ids;
  ids.reserve(ps.plans.size());
  for (const VehiclePlan& p : ps.plans) ids.push_back(p.vehicle_id);
  auto index_of = [&](size_t k) {
    const int vi = detail::sim_index_of(ids, victims[k]);
    require(vi >= 0, errc::bad_argument,
            "intruder strategy: victim " + std::to_string(victims[k]) +
                " is not in the plan set");
    return static_cast<size_t>(vi);
  };

  IntruderDecision dec;
  size_t cur = std::min(current, victims.size());
  while (cur < victims.size() && forced[index_of(cur)]) ++cur;
  dec.victim = cur;
  size_t tgt = cur;
  while (tgt < victims.size() && !airborne[index_of(tgt)]) ++tgt;

  const DubinsParams& par = ps.scenario.intruder_params;
  if (tgt >= victims.size()) {
    dec.u = {par.v_max, 0.0};
    return dec;
  }
  dec.engaged = true;
  const size_t vi = index_of(tgt);
  require(vi < ps.avoid.size() && ps.avoid[vi] != nullptr, errc::missing_prerequisite,
          "intruder strategy: the victim has no avoidance artifacts");
  const AvoidArtifacts& art = *ps.avoid[vi];
  const auto rel = detail::relative_state(states[vi], x_intr);
  const Grid& rg = art.avoid.grid();
  if (std::abs(rel[0]) <= 0.9 * rg.maxs[0] && std::abs(rel[1]) <= 0.9 * rg.maxs[1]) {
    const ControlSample cs = art.avoidance_control(remaining, detail::clamp_into(rg, rel));
    dec.u = cs.u.other;
    dec.wind = detail::to_world(states[vi][2], cs.d.other);
  } else {
    const double bearing = std::atan2(states[vi][1] - x_intr[1], states[vi][0] - x_intr[0]);
    dec.u = {par.v_max, detail::homing_turn(bearing, x_intr[2], par.w_max)};
  }
  return dec;
}

// Closed-loop run of a planned fleet: forward Euler at the control period,
// with every control decision taken from the states at the start of the step
// and all states advanced together. Vehicles fly their planning controller,
// switch to the avoidance controller when their avoid-region value crosses
// zero while the intruder is live (and hold that posture through the end of
// the engagement window), and stop at their targets. The intruder appears at
// tsa, pursues per its configured strategy, and is removed at tsa + tbar.
inline SimLog simulate(const Scenario& sc, const PlanSet& ps, const SimConfig& cfg) {
  validate_scenario(sc);
  require(cfg.dt > 0.0, errc::bad_argument, "simulate: control period must be positive");
  const size_t n = sc.vehicles.size();
  require(ps.plans.size() == n, errc::missing_plan,
          "simulate: the plan set does not cover the scenario fleet");
  std::vector<int> ids;
  ids.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    require(ps.plans[i].vehicle_id == sc.vehicles[i].id, errc::missing_plan,
            "simulate: plan order does not match the scenario fleet");
    ids.push_back(ps.plans[i].vehicle_id);
  }
  const bool intr_cfg = cfg.intruder != IntruderKind::none;
  if (intr_cfg) {
    bool have_avoid = ps.avoid.size() == n;
    for (const auto& a : ps.avoid) have_avoid = have_avoid && a != nullptr;
    require(have_avoid, errc::missing_prerequisite,
            "simulate: avoidance artifacts are required to run an intruder");
    require(std::isfinite(cfg.tsa), errc::bad_argument,
            "simulate: the intruder appearance time must be finite");
  }
  if (cfg.intruder == IntruderKind::pursuit || cfg.intruder == IntruderKind::chain ||
      (intr_cfg && cfg.injection == InjectionRule::avoid_boundary)) {
    require(!cfg.victims.empty(), errc::bad_argument, "simulate: the intruder needs victims");
    for (int id : cfg.victims)
      require(detail::sim_index_of(ids, id) >= 0, errc::bad_argument,
              "simulate: victim " + std::to_string(id) + " is not in the fleet");
  }
  if (cfg.intruder == IntruderKind::scripted)
    require(!cfg.waypoints.empty(), errc::bad_argument,
            "simulate: a scripted intruder needs waypoints");

  double t_start = kFar;
  for (const VehiclePlan& p : ps.plans) t_start = std::min(t_start, p.depart);
  if (intr_cfg) t_start = std::min(t_start, cfg.tsa);
  require(cfg.horizon > t_start, errc::bad_argument,
          "simulate: the horizon ends before the run begins");

  SimLog log;
  log.dt = cfg.dt;
  log.t_start = t_start;
  log.tbar = sc.tbar;
  log.r_c = sc.r_c;
  log.n_va = sc.n_va;
  log.vehicle_ids = ids;
  log.t_avoid.assign(n, kInf);
  log.state_at_removal.assign(n, std::array<double, 3>{});
  log.airborne_at_removal.assign(n, false);

  std::vector<std::array<double, 3>> x(n);
  std::vector<bool> landed(n);
  std::vector<SimMode> base_mode(n, SimMode::nominal);
  for (size_t i = 0; i < n; ++i) {
    x[i] = ps.plans[i].vehicle.x0;
    const TargetSpec& tg = ps.plans[i].vehicle.target;
    landed[i] = std::hypot(x[i][0] - tg.center[0], x[i][1] - tg.center[1]) <= tg.radius;
    for (int id : ps.replanned)
      if (id == ids[i]) base_mode[i] = SimMode::replanned;
  }

  bool intr_active = false, intr_removed = false;
  std::array<double, 3> xi{};
  size_t chain_pos = 0, wp_pos = 0;
  const double tsa = cfg.tsa;
  const double tea = tsa + sc.tbar;
  if (intr_cfg) {
    log.tsa = tsa;
    log.tea = tea;
  }
  DynSpec intr_spec;
  if (intr_cfg) intr_spec = dubins_absolute_spec(sc.intruder_params, roles::reach_basic());

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::array<double, 2>> cmd(n), wind(n);
  std::vector<bool> act(n);
  const int nsteps = static_cast<int>(std::floor((cfg.horizon - t_start) / cfg.dt + 1e-9));
  for (int k = 0; k <= nsteps; ++k) {
    const double t = t_start + cfg.dt * k;

    // Intruder lifecycle: appears at tsa, vanishes at tsa + tbar.
    if (intr_cfg && !intr_active && !intr_removed && t >= tsa - 1e-9) {
      if (cfg.injection == InjectionRule::explicit_state) {
        xi = cfg.intruder_x0;
      } else {
        const int vi = detail::sim_index_of(ids, cfg.victims.front());
        xi = inject_on_boundary(*ps.avoid[vi], x[vi], cfg.injection_bearing, sc.r_c);
      }
      intr_active = true;
      log.intruder_ran = true;
      log.events.push_back({t, "injection", -1, -1, 0.0});
    }
    if (intr_active && t >= tea - 1e-9) {
      intr_active = false;
      intr_removed = true;
      log.removal_recorded = true;
      log.state_at_removal = x;
      for (size_t i = 0; i < n; ++i)
        log.airborne_at_removal[i] = !landed[i] && t >= ps.plans[i].depart - 1e-9;
      log.events.push_back({t, "removal", -1, -1, 0.0});
    }
    const double rho = intr_active ? std::clamp(tea - t, 0.0, sc.tbar) : 0.0;

    // Separation scan over everything airborne.
    for (size_t a = 0; a < n; ++a) {
      if (landed[a] || t < ps.plans[a].depart - 1e-9) continue;
      for (size_t b = a + 1; b < n; ++b) {
        if (landed[b] || t < ps.plans[b].depart - 1e-9) continue;
        const double dist = std::hypot(x[a][0] - x[b][0], x[a][1] - x[b][1]);
        if (dist < sc.r_c - 1e-9)
          log.events.push_back({t, "separation-violation", ids[a], ids[b], dist});
      }
      if (intr_active) {
        const double dist = std::hypot(x[a][0] - xi[0], x[a][1] - xi[1]);
        if (dist < sc.r_c - 1e-9)
          log.events.push_back({t, "separation-violation", ids[a], -1, dist});
      }
    }

    // Vehicle decisions from the states at time t.
    for (size_t i = 0; i < n; ++i) {
      const auto draw = detail::draw_wind(rng, unif, sc.params_for(i).d_r);
      act[i] = false;
      if (landed[i] || t < ps.plans[i].depart - 1e-9) continue;
      const VehiclePlan& plan = ps.plans[i];

      double va = kInf;
      if (intr_active) {
        const auto rel = detail::relative_state(x[i], xi);
        const TimeField& av = ps.avoid[i]->avoid;
        // Remaining-duration lookups round up: the next-larger avoid set
        // triggers the switch on the conservative side.
        va = interpolate_ext(av.snaps[detail::sample_index_up(av, rho)], rel.data());
        if (va <= 0.0 && log.t_avoid[i] == kInf) {
          log.t_avoid[i] = t;
          log.events.push_back({t, "avoid-switch", ids[i], -1, va});
          int forced_count = 0;
          for (double ta : log.t_avoid)
            if (ta < kInf) ++forced_count;
          if (forced_count == sc.n_va + 1)
            log.events.push_back(
                {t, "separation-breach", ids[i], -1, static_cast<double>(forced_count)});
        }
      }

      SimMode mode = base_mode[i];
      std::array<double, 2> u{};
      std::array<double, 2> worst{};
      const bool was_forced = log.t_avoid[i] < kInf;
      if (cfg.switching && was_forced && intr_active) {
        mode = SimMode::avoid;
        const AvoidArtifacts& art = *ps.avoid[i];
        const auto rel =
            detail::clamp_into(art.avoid.grid(), detail::relative_state(x[i], xi));
        const ControlSample cs = art.avoidance_control(rho, rel, cfg.dt);
        u = cs.u.own;
        // The relative state is intruder minus own, so the own wind enters
        // the relative model negated: flip the sign to make it physical.
        worst = detail::to_world(x[i][2], {-cs.d.own[0], -cs.d.own[1]});
      } else if (cfg.switching && was_forced && !intr_active) {
        // The engagement window has closed but the vehicle is off its plan:
        // loiter in place (or a tightest circle) until replanning takes over.
        mode = SimMode::avoid;
        const DubinsParams& par = sc.params_for(i);
        u = {par.v_min, par.v_min > 0.0 ? par.w_max : 0.0};
      } else {
        const std::vector<double> xv =
            detail::clamp_into(plan.value.grid(), {x[i][0], x[i][1], x[i][2]});
        const ControlSample cs = plan.control_at(t, xv);
        u = cs.u.own;
        worst = cs.d.own;
      }

      std::array<double, 2> w{};
      if (cfg.disturbance == DisturbPolicy::random) w = draw;
      else if (cfg.disturbance == DisturbPolicy::worst_case) w = worst;
      log.steps.push_back({t, ids[i], x[i], u, w, mode, va});

      const TargetSpec& tg = plan.vehicle.target;
      if (std::hypot(x[i][0] - tg.center[0], x[i][1] - tg.center[1]) <= tg.radius) {
        landed[i] = true;
        log.events.push_back({t, "landing", ids[i], -1, t});
        continue;
      }
      cmd[i] = u;
      wind[i] = w;
      act[i] = true;
    }

    // Intruder decision from the same state snapshot.
    bool intr_step = false;
    std::array<double, 2> ui{}, wi{};
    if (intr_cfg) {
      const auto draw = detail::draw_wind(rng, unif, sc.intruder_params.d_r);
      if (intr_active) {
        std::array<double, 2> worst{};
        if (cfg.intruder == IntruderKind::scripted) {
          while (wp_pos + 1 < cfg.waypoints.size() &&
                 std::hypot(cfg.waypoints[wp_pos][0] - xi[0], cfg.waypoints[wp_pos][1] - xi[1]) <=
                     1.5 * sc.intruder_params.v_max * cfg.dt)
            ++wp_pos;
          const auto& wp = cfg.waypoints[wp_pos];
          const double bearing = std::atan2(wp[1] - xi[1], wp[0] - xi[0]);
          ui = {sc.intruder_params.v_max,
                detail::homing_turn(bearing, xi[2], sc.intruder_params.w_max)};
        } else {
          std::vector<bool> airborne(n), forced(n);
          for (size_t i = 0; i < n; ++i) {
            airborne[i] = !landed[i] && t >= ps.plans[i].depart - 1e-9;
            // A plain pursuer never gives up on a forced victim; only the
            // chain moves down its list.
            forced[i] = cfg.intruder == IntruderKind::chain && log.t_avoid[i] < kInf;
          }
          const IntruderDecision dec = intruder_chain_strategy(xi, cfg.victims, chain_pos, ps, x,
                                                               airborne, forced, rho);
          chain_pos = dec.victim;
          ui = dec.u;
          worst = dec.wind;
        }
        if (cfg.disturbance == DisturbPolicy::random) wi = draw;
        else if (cfg.disturbance == DisturbPolicy::worst_case) wi = worst;
        log.steps.push_back({t, -1, xi, ui, wi, SimMode::nominal, kInf});
        intr_step = true;
      }
    }

    // Simultaneous forward Euler update.
    for (size_t i = 0; i < n; ++i) {
      if (!act[i]) continue;
      Vec xs{};
      for (int d = 0; d < 3; ++d) xs[d] = x[i][d];
      ControlPair u2;
      u2.own = cmd[i];
      DisturbPair d2;
      d2.own = wind[i];
      const Vec f = flow(ps.plans[i].spec, xs, u2, d2);
      for (int d = 0; d < 3; ++d) x[i][d] += cfg.dt * f[d];
    }
    if (intr_step) {
      Vec xs{};
      for (int d = 0; d < 3; ++d) xs[d] = xi[d];
      ControlPair u2;
      u2.own = ui;
      DisturbPair d2;
      d2.own = wi;
      const Vec f = flow(intr_spec, xs, u2, d2);
      for (int d = 0; d < 3; ++d) xi[d] += cfg.dt * f[d];
    }
  }
  log.t_end = t_start + cfg.dt * nsteps;
  return log;
}

// Vehicles forced into avoidance during the run, in priority order. More
// members than the buffer design allows means the planned separation was
// breached somewhere upstream.
inline std::vector<int> extract_rvs(const SimLog& log) {
  std::vector<int> rvs;
  for (size_t i = 0; i < log.vehicle_ids.size(); ++i)
    if (log.t_avoid[i] < kInf) rvs.push_back(log.vehicle_ids[i]);
  require(static_cast<int>(rvs.size()) <= log.n_va, errc::separation_breach,
          "replanning set has " + std::to_string(rvs.size()) +
              " vehicles, the buffer design allows " + std::to_string(log.n_va));
  return rvs;
}

// Rebuild the plans of every vehicle the intruder forced off its trajectory,
// in priority order, from the states recorded when the intruder vanished.
// Each rebuilt vehicle first gets its earliest feasible arrival from a
// forward reach of its displaced state (clipped by the obstacles of the
// vehicles still on plan), then a fresh plan anchored there; vehicles that
// already reached their targets collapse to a landed stub. Vehicles outside
// the replanning set keep their plans untouched.
inline PlanSet replan(const Scenario& sc, const PlanSet& ps, const SimLog& log) {
  validate_scenario(sc);
  const size_t n = sc.vehicles.size();
  require(ps.plans.size() == n, errc::missing_plan,
          "replan: the plan set does not cover the scenario fleet");
  for (size_t i = 0; i < n; ++i)
    require(ps.plans[i].vehicle_id == sc.vehicles[i].id, errc::missing_plan,
            "replan: plan order does not match the scenario fleet");
  const std::vector<int> rvs = extract_rvs(log);
  if (rvs.empty()) return ps;
  require(log.removal_recorded, errc::missing_prerequisite,
          "replan: the intruder engagement must have ended inside the simulated horizon");
  require(log.vehicle_ids.size() == n && log.state_at_removal.size() == n &&
              log.airborne_at_removal.size() == n,
          errc::missing_plan, "replan: the log does not cover the scenario fleet");

  PlanSet out = ps;
  out.replanned = rvs;
  Scenario sc2 = sc;
  PlanContext ctx;
  ctx.sc = &sc2;
  const Grid plane = detail::plane_of(sc2.grid);
  const double tea = log.tea;
  const double obstacle_dt = sc2.opts.obstacle_dt;
  const double stamp_r = sc2.r_c + sc2.eps_track +
                         0.5 * std::max(sc2.grid.spacing[0], sc2.grid.spacing[1]);

  std::vector<bool> in_rvs(n, false), rebuilt(n, false);
  for (int id : rvs) in_rvs[static_cast<size_t>(detail::sim_index_of(log.vehicle_ids, id))] = true;

  ScalarField basic_statics;
  if (sc2.opts.replan_basic && sc2.has_statics())
    basic_statics = statics_field(sc2.grid, sc2.circles, sc2.rects, 0.0);

  // Obstacles for vehicle i on a given time lattice: the static hardening
  // plus the footprints of every vehicle still on a valid plan. Members of
  // the replanning set drop out until their plans are rebuilt; rebuilt
  // leaders also cover their wait at the displaced state before departure.
  auto build_obs = [&](size_t i, const std::vector<double>& times) {
    const bool basic = sc2.opts.replan_basic;
    const StaticSets* st = basic ? nullptr : &detail::stat_for(ctx, i);
    ObstacleSchedule total;
    total.direction = TimeDirection::forward;
    for (double t : times) {
      ScalarField f = basic ? (sc2.has_statics() ? basic_statics : make_field(sc2.grid, kFar))
                            : (st->present ? st->avoid_brs : make_field(sc2.grid, kFar));
      f.time = t;
      total.append(std::move(f));
    }
    for (size_t j = 0; j < n; ++j) {
      // Skip self, members not yet rebuilt, and landed stubs (no airspace).
      if (j == i || (in_rvs[j] && !rebuilt[j]) || out.plans[j].nominal.size() <= 1) continue;
      const VehiclePlan& pj = out.plans[j];
      if (basic) {
        for (size_t k = 0; k < times.size(); ++k) {
          if (times[k] < pj.depart - 1e-9 || times[k] > pj.arrive + 1e-9) continue;
          const auto p = pj.position_at(times[k]);
          detail::stamp_ball(total.snaps[k], p[0], p[1], stamp_r);
        }
      } else {
        detail::add_leader_obstacles(ctx, i, j, pj, total, times,
                                     st->present ? &st->raw_brs : nullptr);
      }
      if (rebuilt[j] && pj.depart > tea + 1e-9) {
        const auto pa = basic ? nullptr : detail::pair_for(ctx, i, j);
        for (size_t k = 0; k < times.size(); ++k) {
          if (times[k] < tea - 1e-9 || times[k] > pj.depart + 1e-9) continue;
          if (basic) {
            detail::stamp_ball(total.snaps[k], pj.vehicle.x0[0], pj.vehicle.x0[1], stamp_r);
          } else {
            detail::translate_min_into(total.snaps[k], pa->buffer_shape, pa->buffer_box,
                                       pj.vehicle.x0[0], pj.vehicle.x0[1]);
            detail::translate_min_into(total.snaps[k], pa->mirror_shape, pa->mirror_box,
                                       pj.vehicle.x0[0], pj.vehicle.x0[1]);
          }
        }
      }
    }
    return total;
  };

  auto reaches_target = [](const ScalarField& f, const TargetSpec& tg) {
    const Grid& g = f.grid;
    const std::int64_t sz = g.size();
    for (std::int64_t flat = 0; flat < sz; ++flat) {
      if (f.values[static_cast<size_t>(flat)] > 0.0) continue;
      const auto idx = g.unflatten(flat);
      if (std::hypot(g.coord(0, idx[0]) - tg.center[0], g.coord(1, idx[1]) - tg.center[1]) <=
          tg.radius)
        return true;
    }
    return false;
  };

  for (size_t i = 0; i < n; ++i) {
    if (!in_rvs[i]) continue;
    std::array<double, 3> x0 = log.state_at_removal[i];
    x0[0] = std::clamp(x0[0], sc2.grid.mins[0], sc2.grid.maxs[0]);
    x0[1] = std::clamp(x0[1], sc2.grid.mins[1], sc2.grid.maxs[1]);
    x0[2] = wrap_angle(x0[2]);
    const std::string who = "vehicle " + std::to_string(sc2.vehicles[i].id);
    const TargetSpec& tg = sc2.vehicles[i].target;
    const DubinsParams& par = sc2.params_for(i);

    if (!log.airborne_at_removal[i] ||
        std::hypot(x0[0] - tg.center[0], x0[1] - tg.center[1]) <= tg.radius) {
      // Landed during the engagement: the mission is complete, keep only a
      // stub so the merged set stays consistent and occupies no airspace.
      sc2.vehicles[i].x0 = x0;
      sc2.vehicles[i].sta = tea;
      VehiclePlan stub;
      stub.vehicle_id = sc2.vehicles[i].id;
      stub.vehicle = sc2.vehicles[i];
      stub.spec = dubins_absolute_spec(par, roles::planning());
      stub.nominal = {{tea, x0, 0.0, 0.0}};
      stub.ldt = stub.depart = stub.arrive = tea;
      stub.base = base_obstacle_rtt(stub, sc2.eps_track, plane,
                                    detail::schedule_times(0.0, tea + obstacle_dt, obstacle_dt));
      out.plans[i] = std::move(stub);
      out.scenario.vehicles[i] = sc2.vehicles[i];
      rebuilt[i] = true;
      continue;
    }

    // Earliest feasible arrival: march the displaced state forward, clipped
    // by the live obstacles, until the reach set touches the target.
    const double dist = std::hypot(x0[0] - tg.center[0], x0[1] - tg.center[1]);
    const double floor_speed = std::max(par.v_max - par.d_r, 0.1 * par.v_max);
    // The forward seed must span several cells: a seed near one cell wide is
    // a lone kink that the scheme's dissipation flattens before the front can
    // move, leaving an empty set.
    const double seed_r = 3.0 * std::max(sc2.grid.spacing[0], sc2.grid.spacing[1]);
    double h = std::max(sc2.tbar, 1.6 * dist / floor_speed) + 2.0 * obstacle_dt;
    double frs_sta = -1.0;
    for (int attempt = 0; attempt < 3 && frs_sta < 0.0; ++attempt) {
      const ObstacleSchedule obs =
          build_obs(i, detail::schedule_times(tea, tea + h, obstacle_dt));
      ReachProblem p;
      p.grid = sc2.grid;
      p.target = detail::ball_field(sc2.grid, x0[0], x0[1], seed_r);
      p.obstacles = &obs;
      p.dynspec = dubins_absolute_spec(par, roles::replan_frs());
      p.horizon = h;
      p.direction = TimeDirection::forward;
      p.cfl_factor = sc2.opts.cfl;
      p.anchor_time = tea;
      p.save_stride = detail::stride_for(p, h / std::max(1, sc2.opts.value_snaps - 1));
      const TimeField frs = solve_frs(p);
      for (const ScalarField& snap : frs.snaps)
        if (reaches_target(snap, tg)) {
          frs_sta = snap.time;
          break;
        }
      if (frs_sta < 0.0) h *= 2.0;
    }
    require(frs_sta >= 0.0, errc::replan_infeasible,
            who + ": no feasible arrival time within the replanning horizon");

    // The forward front starts from a whole-cell seed, so its first target
    // contact can undercut the true flight time; never schedule earlier than
    // the straight-line bound, and back off geometrically on failure.
    double sta_try =
        std::max(frs_sta, tea + std::max(0.0, dist - tg.radius) / (par.v_max + par.d_r));
    bool accepted = false;
    for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
      sc2.vehicles[i].x0 = x0;
      sc2.vehicles[i].sta = sta_try;
      const std::vector<double> times =
          detail::schedule_times(0.0, sta_try + sc2.tbar, obstacle_dt);
      try {
        VehiclePlan plan = plan_vehicle(sc2, i, build_obs(i, times));
        bool hold_clear = plan.ldt >= tea - 1e-6;
        const std::vector<double> xq{x0[0], x0[1], x0[2]};
        for (const ScalarField& snap : plan.total.snaps) {
          if (!hold_clear) break;
          if (snap.time < tea - 1e-9 || snap.time > plan.depart + 1e-9) continue;
          if (interpolate(snap, xq) <= 0.0) hold_clear = false;
        }
        if (hold_clear) {
          plan.base = base_obstacle_rtt(plan, sc2.eps_track, plane, times);
          out.plans[i] = std::move(plan);
          out.scenario.vehicles[i] = sc2.vehicles[i];
          rebuilt[i] = true;
          accepted = true;
        }
      } catch (const error& e) {
        if (e.code() != errc::infeasible) throw;
      }
      if (!accepted) sta_try = tea + 1.35 * (sta_try - tea) + 2.0 * obstacle_dt;
    }
    require(accepted, errc::replan_infeasible,
            who + ": no feasible arrival time within the replanning horizon");
  }

  // Pairwise separation across the merged set. A rebuilt vehicle occupies
  // its displaced state from the intruder's removal until departure, so its
  // audit window opens at the removal; landed stubs occupy no airspace.
  for (size_t a = 0; a + 1 < n; ++a) {
    if (out.plans[a].nominal.size() <= 1) continue;
    for (size_t b = a + 1; b < n; ++b) {
      if (out.plans[b].nominal.size() <= 1) continue;
      const double lo_a = rebuilt[a] ? tea : out.plans[a].depart;
      const double lo_b = rebuilt[b] ? tea : out.plans[b].depart;
      const double lo = std::max(lo_a, lo_b);
      const double hi = std::min(out.plans[a].arrive, out.plans[b].arrive);
      for (double t = lo; t <= hi + 1e-9; t += sc2.opts.control_dt) {
        const auto pa = out.plans[a].position_at(t);
        const auto pb = out.plans[b].position_at(t);
        require(std::hypot(pa[0] - pb[0], pa[1] - pb[1]) >= sc2.r_c - 1e-9,
                errc::separation_breach,
                "vehicles " + std::to_string(out.plans[a].vehicle_id) + " and " +
                    std::to_string(out.plans[b].vehicle_id) +
                    " come within the capture radius at t = " + std::to_string(t));
      }
    }
  }
  return out;
}

}  // namespace hjstp
