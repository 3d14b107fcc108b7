#pragma once

// Deterministic simulated environments with reset/step semantics, early
// termination, and the trajectory observer that produces behavior
// descriptors.
//
// Ball-In-Cup: a point-mass ball on an inextensible string below a cup that
// is driven by velocity commands. State is the 3D position of the ball
// relative to the cup plus the ball velocity. The string applies an impulsive
// constraint when taut and nothing when slack. Never terminates early.
//
// Redundant Arm: a 20-link planar chain with first-order joint dynamics
// (joint velocity proportional to commanded torque), anchored at the origin.
// State is the 20 joint angles plus the end-effector x-y. Episodes stop on
// wall collision (walls variant), self-collision, or a joint-limit
// violation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bootbench/errors.hpp"

namespace bootbench {

enum class EnvName { BallInCup, RedundantArm, RedundantArmNoWalls };

enum class TerminationReason { None, WallCollision, SelfCollision, JointLimit };

inline std::string to_string(EnvName name) {
  switch (name) {
    case EnvName::BallInCup: return "ball_in_cup";
    case EnvName::RedundantArm: return "redundant_arm";
    case EnvName::RedundantArmNoWalls: return "redundant_arm_no_walls";
  }
  return "?";
}

inline EnvName env_name_from_string(const std::string& s) {
  if (s == "ball_in_cup") return EnvName::BallInCup;
  if (s == "redundant_arm") return EnvName::RedundantArm;
  if (s == "redundant_arm_no_walls") return EnvName::RedundantArmNoWalls;
  throw ConfigError("unknown environment name: " + s);
}

inline std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::None: return "none";
    case TerminationReason::WallCollision: return "wall_collision";
    case TerminationReason::SelfCollision: return "self_collision";
    case TerminationReason::JointLimit: return "joint_limit";
  }
  return "?";
}

struct Segment {
  double x1, y1, x2, y2;
};

struct EnvSpec {
  EnvName name = EnvName::BallInCup;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  std::vector<double> action_low, action_high;
  std::vector<int> outcome_dims;
  double dt = 0.02;

  // Ball-In-Cup parameters.
  double string_length = 0.3;
  double gravity = 9.81;

  // Redundant Arm parameters.
  int n_links = 20;
  double link_length = 0.05;
  double joint_limit = std::numbers::pi / 2.0;
  double torque_gain = 1.0;
  std::vector<Segment> walls;

  // Per-dimension state bounds; used for histogram ranges and the capped
  // error assigned to diverged model rollouts.
  std::vector<double> state_low, state_high;

  double workspace_diameter() const {
    double sq = 0.0;
    for (std::size_t i = 0; i < state_low.size(); ++i) {
      const double d = state_high[i] - state_low[i];
      sq += d * d;
    }
    return std::sqrt(sq);
  }
};

inline EnvSpec make_env_spec(EnvName name) {
  EnvSpec spec;
  spec.name = name;
  if (name == EnvName::BallInCup) {
    spec.state_dim = 6;
    spec.action_dim = 3;
    spec.horizon = 300;
    spec.action_low.assign(3, -1.0);
    spec.action_high.assign(3, 1.0);
    spec.outcome_dims = {0, 1, 2};  // relative ball position
    const double L = spec.string_length;
    spec.state_low = {-L, -L, -L, -4.0, -4.0, -4.0};
    spec.state_high = {L, L, L, 4.0, 4.0, 4.0};
  } else {
    spec.state_dim = 22;
    spec.action_dim = 20;
    spec.horizon = 250;
    spec.action_low.assign(20, -0.5);
    spec.action_high.assign(20, 0.5);
    spec.outcome_dims = {20, 21};  // end-effector x-y
    spec.state_low.assign(20, -spec.joint_limit);
    spec.state_high.assign(20, spec.joint_limit);
    spec.state_low.push_back(-1.0);
    spec.state_low.push_back(-1.0);
    spec.state_high.push_back(1.0);
    spec.state_high.push_back(1.0);
    if (name == EnvName::RedundantArm) {
      // Cross-shaped obstacle layout. The east bar sits above the x axis so
      // the fully extended rest pose starts in a free corridor.
      spec.walls = {
          {0.0, 0.2, 0.0, 0.8},      // north
          {0.0, -0.8, 0.0, -0.2},    // south
          {-0.8, 0.0, -0.2, 0.0},    // west
          {0.2, 0.2, 0.8, 0.2},      // east, elevated
      };
    }
  }
  return spec;
}

struct EnvState {
  std::vector<double> values;
  int step_index = 0;
  TerminationReason terminated = TerminationReason::None;
};

// --- geometry -------------------------------------------------------------

namespace detail {

// Orientation snapped to zero below the roundoff floor, so chains of exactly
// collinear links (a straight arm) do not produce sign noise.
inline constexpr double kGeomEps = 1e-12;

inline double orient(double ox, double oy, double ax, double ay, double bx,
                     double by) {
  const double cross = (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
  return std::abs(cross) <= kGeomEps ? 0.0 : cross;
}

inline bool on_segment(double px, double py, double qx, double qy, double rx,
                       double ry) {
  return std::min(px, rx) <= qx && qx <= std::max(px, rx) &&
         std::min(py, ry) <= qy && qy <= std::max(py, ry);
}

}  // namespace detail

// Closed segment intersection (touching counts).
inline bool segments_intersect(const Segment& a, const Segment& b) {
  const double d1 = detail::orient(b.x1, b.y1, b.x2, b.y2, a.x1, a.y1);
  const double d2 = detail::orient(b.x1, b.y1, b.x2, b.y2, a.x2, a.y2);
  const double d3 = detail::orient(a.x1, a.y1, a.x2, a.y2, b.x1, b.y1);
  const double d4 = detail::orient(a.x1, a.y1, a.x2, a.y2, b.x2, b.y2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && detail::on_segment(b.x1, b.y1, a.x1, a.y1, b.x2, b.y2))
    return true;
  if (d2 == 0 && detail::on_segment(b.x1, b.y1, a.x2, a.y2, b.x2, b.y2))
    return true;
  if (d3 == 0 && detail::on_segment(a.x1, a.y1, b.x1, b.y1, a.x2, a.y2))
    return true;
  if (d4 == 0 && detail::on_segment(a.x1, a.y1, b.x2, b.y2, a.x2, a.y2))
    return true;
  return false;
}

// Joint positions of the planar chain, base first: n_links + 1 points.
inline std::vector<double> arm_joint_positions(const EnvSpec& spec,
                                               std::span<const double> angles) {
  std::vector<double> pts;
  pts.reserve(2 * (spec.n_links + 1));
  double x = 0.0, y = 0.0, heading = 0.0;
  pts.push_back(x);
  pts.push_back(y);
  for (int i = 0; i < spec.n_links; ++i) {
    heading += angles[i];
    x += spec.link_length * std::cos(heading);
    y += spec.link_length * std::sin(heading);
    pts.push_back(x);
    pts.push_back(y);
  }
  return pts;
}

// --- env operations --------------------------------------------------------

inline EnvState reset(const EnvSpec& spec) {
  EnvState state;
  state.values.assign(spec.state_dim, 0.0);
  if (spec.name == EnvName::BallInCup) {
    state.values[2] = -spec.string_length;  // ball hanging below the cup
  } else {
    // Fully extended along +x with zero joint angles. The end-effector comes
    // from the same kinematics as step(), so zero torque is an exact fixed
    // point.
    const std::vector<double> pts = arm_joint_positions(
        spec, std::span<const double>(state.values.data(),
                                      static_cast<std::size_t>(spec.n_links)));
    state.values[20] = pts[2 * spec.n_links];
    state.values[21] = pts[2 * spec.n_links + 1];
  }
  return state;
}

inline TerminationReason check_termination(const EnvSpec& spec,
                                           const EnvState& state) {
  if (spec.name == EnvName::BallInCup) return TerminationReason::None;
  const std::span<const double> q(state.values.data(),
                                  static_cast<std::size_t>(spec.n_links));
  const std::vector<double> pts = arm_joint_positions(spec, q);
  auto link = [&](int i) {
    return Segment{pts[2 * i], pts[2 * i + 1], pts[2 * i + 2], pts[2 * i + 3]};
  };
  for (int i = 0; i < spec.n_links; ++i) {
    const Segment li = link(i);
    for (const Segment& wall : spec.walls)
      if (segments_intersect(li, wall)) return TerminationReason::WallCollision;
  }
  for (int i = 0; i < spec.n_links; ++i) {
    const Segment li = link(i);
    for (int j = i + 2; j < spec.n_links; ++j)
      if (segments_intersect(li, link(j)))
        return TerminationReason::SelfCollision;
  }
  for (int i = 0; i < spec.n_links; ++i)
    if (std::abs(state.values[i]) > spec.joint_limit)
      return TerminationReason::JointLimit;
  return TerminationReason::None;
}

namespace detail {

inline void step_ball_in_cup(const EnvSpec& spec, EnvState& state,
                             const double* u) {
  double* p = state.values.data();
  double* v = state.values.data() + 3;
  v[2] -= spec.gravity * spec.dt;
  for (int i = 0; i < 3; ++i) p[i] += (v[i] - u[i]) * spec.dt;
  const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  const double L = spec.string_length;
  if (r > L) {
    const double scale = L / r;
    for (int i = 0; i < 3; ++i) p[i] *= scale;
    double rhat[3] = {p[0] / L, p[1] / L, p[2] / L};
    const double radial = (v[0] - u[0]) * rhat[0] + (v[1] - u[1]) * rhat[1] +
                          (v[2] - u[2]) * rhat[2];
    if (radial > 0.0)
      for (int i = 0; i < 3; ++i) v[i] -= radial * rhat[i];
  }
}

inline void step_arm(const EnvSpec& spec, EnvState& state, const double* u) {
  double* q = state.values.data();
  for (int i = 0; i < spec.n_links; ++i)
    q[i] += spec.dt * spec.torque_gain * u[i];
  const std::vector<double> pts = arm_joint_positions(
      spec, std::span<const double>(q, static_cast<std::size_t>(spec.n_links)));
  state.values[20] = pts[2 * spec.n_links];
  state.values[21] = pts[2 * spec.n_links + 1];
}

}  // namespace detail

inline EnvState step(const EnvSpec& spec, const EnvState& state,
                     std::span<const double> action) {
  if (static_cast<int>(action.size()) != spec.action_dim)
    throw ShapeError("env step: action length " +
                     std::to_string(action.size()) + " != action dim " +
                     std::to_string(spec.action_dim));
  if (state.terminated != TerminationReason::None)
    throw UsageError("env step: state is terminated");
  if (state.step_index >= spec.horizon)
    throw UsageError("env step: horizon exhausted");
  std::vector<double> clamped(action.begin(), action.end());
  for (int i = 0; i < spec.action_dim; ++i)
    clamped[i] = std::clamp(clamped[i], spec.action_low[i], spec.action_high[i]);
  EnvState next = state;
  if (spec.name == EnvName::BallInCup)
    detail::step_ball_in_cup(spec, next, clamped.data());
  else
    detail::step_arm(spec, next, clamped.data());
  next.step_index = state.step_index + 1;
  next.terminated = check_termination(spec, next);
  return next;
}

// Behavior descriptor: the outcome dimensions of the final trajectory state.
using BehaviorDescriptor = std::vector<double>;

inline BehaviorDescriptor observer(const EnvSpec& spec,
                                   std::span<const double> final_state) {
  if (static_cast<int>(final_state.size()) != spec.state_dim)
    throw ShapeError("observer: state dim mismatch");
  BehaviorDescriptor b;
  b.reserve(spec.outcome_dims.size());
  for (int d : spec.outcome_dims) b.push_back(final_state[d]);
  return b;
}

inline BehaviorDescriptor observer(const EnvSpec& spec,
                                   const std::vector<EnvState>& trajectory) {
  if (trajectory.empty()) throw UsageError("observer: empty trajectory");
  return observer(spec, trajectory.back().values);
}

}  // namespace bootbench
