#pragma once
//
// reachops.hpp — time-indexed obstacle algebra on snapshot schedules:
// pointwise unions on merged time lattices, time shifts, capture-radius
// augmentation, rolling forward-reachable families, and the sensing-distance
// query. A schedule is a TimeField: monotone snapshot times on one shared
// grid, sampled with the piecewise-constant previous-snapshot hold rule.
//

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "hjstp/common.hpp"
#include "hjstp/dynamics.hpp"
#include "hjstp/field.hpp"
#include "hjstp/field_ops.hpp"
#include "hjstp/grid.hpp"
#include "hjstp/solver.hpp"

namespace hjstp {

using ObstacleSchedule = TimeField;

inline const ScalarField& schedule_sample(const ObstacleSchedule& s, double t) {
  return s.sample(t);
}

// Pointwise union (minimum) of two schedules on the merged time lattice.
// Each side is sampled with the hold rule; outside its own span a schedule
// contributes its held endpoint snapshot.
inline ObstacleSchedule schedule_union(const ObstacleSchedule& a, const ObstacleSchedule& b) {
  require(!a.empty() && !b.empty(), errc::empty_schedule, "schedule_union: empty schedule");
  require(a.grid().same_shape(b.grid()), errc::grid_mismatch,
          "schedule_union: schedules live on different grids");
  require(a.snaps.front().time <= b.snaps.back().time &&
              b.snaps.front().time <= a.snaps.back().time,
          errc::bad_argument, "schedule_union: schedule spans do not overlap");

  std::vector<double> times;
  for (const auto& s : a.snaps) times.push_back(s.time);
  for (const auto& s : b.snaps) times.push_back(s.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-12; }),
              times.end());

  ObstacleSchedule out;
  out.direction = a.direction;
  for (double t : times) {
    const ScalarField& fa = a.sample(t);
    const ScalarField& fb = b.sample(t);
    ScalarField snap = make_field(a.grid(), 0.0, t);
    for (size_t i = 0; i < snap.values.size(); ++i)
      snap.values[i] = std::min(fa.values[i], fb.values[i]);
    out.append(std::move(snap));
  }
  return out;
}

inline ObstacleSchedule schedule_shift(const ObstacleSchedule& s, double dt) {
  ObstacleSchedule out = s;
  for (auto& snap : out.snaps) snap.time += dt;
  return out;
}

// Every snapshot dilated by the capture radius in the position dimensions.
inline ObstacleSchedule augment_capture(const ObstacleSchedule& s, double r_c) {
  require(r_c >= 0.0, errc::negative_radius, "augment_capture: radius must be nonnegative");
  ObstacleSchedule out;
  out.direction = s.direction;
  for (const auto& snap : s.snaps) {
    ScalarField d = dilate_ball(snap, r_c);
    d.time = snap.time;
    out.append(std::move(d));
  }
  return out;
}

// Rolling forward-reachable family: the output at time t is the forward
// reachable set, propagated for `duration`, of the base snapshot at
// t - duration; output times before base.first + duration propagate the
// first base snapshot for the (shorter) time elapsed since base.first.
// One forward solve per distinct source snapshot — the truncated head comes
// from the intermediate snapshots of the first solve.
inline ObstacleSchedule rolling_frs(const ObstacleSchedule& base, double duration,
                                    const DynSpec& dyn) {
  require(!base.empty(), errc::empty_schedule, "rolling_frs: empty base schedule");
  require(duration >= 0.0, errc::bad_argument, "rolling_frs: duration must be nonnegative");
  if (duration == 0.0) return base;
  const double first = base.snaps.front().time;
  const double span = base.snaps.back().time - first;
  require(span >= duration - 1e-9, errc::span_too_short,
          "rolling_frs: base schedule spans less than the duration");

  auto frs_of = [&](const ScalarField& src, double anchor, double horizon) {
    ReachProblem p;
    p.grid = src.grid;
    p.target = src;
    p.dynspec = dyn;
    p.horizon = horizon;
    p.direction = TimeDirection::forward;
    p.anchor_time = anchor;
    return solve_frs(p);
  };

  // Head solve: covers every output time in [first, first + duration).
  const TimeField head = frs_of(base.snaps.front(), first, duration);

  ObstacleSchedule out;
  out.direction = TimeDirection::forward;
  std::map<int, ScalarField> final_by_source;  // source snapshot index -> grown field
  for (const auto& snap : base.snaps) {
    const double t = snap.time;
    ScalarField grown = make_field(base.grid(), 0.0, t);
    if (t < first + duration - 1e-12) {
      grown.values = head.sample(t).values;
    } else {
      const int src = base.sample_index(t - duration);
      auto it = final_by_source.find(src);
      if (it == final_by_source.end()) {
        const TimeField full = frs_of(base.snaps[static_cast<size_t>(src)],
                                      base.snaps[static_cast<size_t>(src)].time, duration);
        it = final_by_source.emplace(src, full.snaps.back()).first;
      }
      grown.values = it->second.values;
    }
    out.append(std::move(grown));
  }
  return out;
}

// Minimum detection range: the farthest position-norm reached by the
// sub-zero set of an avoid-region field.
inline double sensing_distance(const ScalarField& avoid_region) {
  const std::vector<int> dims =
      avoid_region.grid.ndim >= 2 ? std::vector<int>{0, 1} : std::vector<int>{0};
  return max_norm_of_subzero(avoid_region, dims);
}

}  // namespace hjstp
