#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "bootbench/envs.hpp"
#include "bootbench/rng.hpp"

using namespace bootbench;

namespace {

// Independent parametric segment-intersection oracle: solves
// p + t*r = q + u*s for t, u in [0, 1]; collinear overlap by projection.
bool oracle_intersect(const Segment& a, const Segment& b) {
  const double rx = a.x2 - a.x1, ry = a.y2 - a.y1;
  const double sx = b.x2 - b.x1, sy = b.y2 - b.y1;
  const double qpx = b.x1 - a.x1, qpy = b.y1 - a.y1;
  const double denom = rx * sy - ry * sx;
  const double qp_cross_r = qpx * ry - qpy * rx;
  if (denom != 0.0) {
    const double t = (qpx * sy - qpy * sx) / denom;
    const double u = qp_cross_r / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
  }
  if (qp_cross_r != 0.0) return false;  // parallel, not collinear
  const double rr = rx * rx + ry * ry;
  if (rr == 0.0) return false;
  const double t0 = (qpx * rx + qpy * ry) / rr;
  const double t1 = t0 + (sx * rx + sy * ry) / rr;
  return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
}

std::vector<double> zero_action(const EnvSpec& spec) {
  return std::vector<double>(spec.action_dim, 0.0);
}

}  // namespace

TEST_CASE("ball_in_cup spec constants") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  REQUIRE(spec.state_dim == 6);
  REQUIRE(spec.action_dim == 3);
  REQUIRE(spec.horizon == 300);
  REQUIRE(spec.outcome_dims == std::vector<int>{0, 1, 2});
  for (int i = 0; i < spec.action_dim; ++i)
    REQUIRE(spec.action_low[i] < spec.action_high[i]);
}

TEST_CASE("redundant_arm spec constants") {
  for (EnvName name :
       {EnvName::RedundantArm, EnvName::RedundantArmNoWalls}) {
    const EnvSpec spec = make_env_spec(name);
    REQUIRE(spec.state_dim == 22);
    REQUIRE(spec.action_dim == 20);
    REQUIRE(spec.horizon == 250);
    REQUIRE(spec.outcome_dims == std::vector<int>{20, 21});
  }
  REQUIRE(make_env_spec(EnvName::RedundantArm).walls.size() == 4);
  REQUIRE(make_env_spec(EnvName::RedundantArmNoWalls).walls.empty());
}

TEST_CASE("reset: ball hangs straight below the cup") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  const EnvState s = reset(spec);
  REQUIRE(s.values == std::vector<double>{0.0, 0.0, -0.3, 0.0, 0.0, 0.0});
  REQUIRE(s.step_index == 0);
  REQUIRE(s.terminated == TerminationReason::None);
}

TEST_CASE("reset: arm fully extended along +x") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArm);
  const EnvState s = reset(spec);
  for (int i = 0; i < 20; ++i) REQUIRE(s.values[i] == 0.0);
  REQUIRE(std::abs(s.values[20] - 20 * 0.05) < 1e-12);
  REQUIRE(s.values[21] == 0.0);
}

TEST_CASE("reset is deterministic") {
  for (EnvName name : {EnvName::BallInCup, EnvName::RedundantArm}) {
    const EnvSpec spec = make_env_spec(name);
    REQUIRE(reset(spec).values == reset(spec).values);
  }
}

TEST_CASE("slack string free fall: z-velocity drops by g*dt each step") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  EnvState s = reset(spec);
  s.values = {0.0, 0.0, -0.1, 0.0, 0.0, 0.0};  // slack: |p| < L
  double prev_vz = 0.0;
  for (int k = 0; k < 5; ++k) {
    s = step(spec, s, zero_action(spec));
    const double r = std::sqrt(s.values[0] * s.values[0] +
                               s.values[1] * s.values[1] +
                               s.values[2] * s.values[2]);
    if (r >= spec.string_length) break;  // string went taut
    REQUIRE(std::abs((prev_vz - s.values[5]) - 9.81 * 0.02) < 1e-12);
    prev_vz = s.values[5];
  }
}

TEST_CASE("taut rest pose is stationary under zero action") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  EnvState s = reset(spec);
  for (int k = 0; k < 300; ++k) {
    s = step(spec, s, zero_action(spec));
    REQUIRE(std::abs(s.values[0]) < 1e-12);
    REQUIRE(std::abs(s.values[1]) < 1e-12);
    REQUIRE(std::abs(s.values[2] + spec.string_length) < 1e-12);
    for (int d = 3; d < 6; ++d) REQUIRE(std::abs(s.values[d]) < 1e-12);
  }
  REQUIRE(s.step_index == 300);
}

TEST_CASE("string constraint bounds the relative position") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  Rng rng(101);
  EnvState s = reset(spec);
  for (int k = 0; k < 1000; ++k) {
    if (s.step_index >= spec.horizon) s = reset(spec);
    std::vector<double> a(3);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    s = step(spec, s, a);
    const double r = std::sqrt(s.values[0] * s.values[0] +
                               s.values[1] * s.values[1] +
                               s.values[2] * s.values[2]);
    REQUIRE(r <= spec.string_length + 1e-9);
  }
}

TEST_CASE("ball_in_cup never terminates early") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  Rng rng(102);
  EnvState s = reset(spec);
  for (int k = 0; k < spec.horizon; ++k) {
    std::vector<double> a(3);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    s = step(spec, s, a);
    REQUIRE(s.terminated == TerminationReason::None);
  }
  REQUIRE(s.step_index == spec.horizon);
  REQUIRE_THROWS_AS(step(spec, s, zero_action(spec)), UsageError);
}

TEST_CASE("step is deterministic") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArm);
  Rng rng(103);
  EnvState s = reset(spec);
  std::vector<double> a(spec.action_dim);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  const EnvState n1 = step(spec, s, a);
  const EnvState n2 = step(spec, s, a);
  REQUIRE(n1.values == n2.values);
  REQUIRE(n1.terminated == n2.terminated);
}

TEST_CASE("arm zero torque is an exact equilibrium") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  const EnvState start = reset(spec);
  EnvState s = start;
  for (int k = 0; k < spec.horizon; ++k) {
    s = step(spec, s, zero_action(spec));
    REQUIRE(s.values == start.values);
    REQUIRE(s.terminated == TerminationReason::None);
  }
  REQUIRE(s.step_index == spec.horizon);
}

TEST_CASE("actions are clamped to the box") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  EnvState s = reset(spec);
  std::vector<double> huge(spec.action_dim, 50.0);
  const EnvState next = step(spec, s, huge);
  // torque clamps to +0.5 -> each joint moves exactly 0.5 * dt
  for (int i = 0; i < spec.n_links; ++i)
    REQUIRE(std::abs(next.values[i] - 0.01) < 1e-15);
}

TEST_CASE("driving the base joint hits the joint limit") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  EnvState s = reset(spec);
  std::vector<double> a = zero_action(spec);
  a[0] = 1.0;  // clamps to the box edge 0.5
  int steps = 0;
  while (s.terminated == TerminationReason::None &&
         s.step_index < spec.horizon) {
    s = step(spec, s, a);
    ++steps;
  }
  REQUIRE(s.terminated == TerminationReason::JointLimit);
  // pi/2 at 0.5 * dt = 0.01 rad per step
  REQUIRE(steps == static_cast<int>(std::floor(spec.joint_limit / 0.01)) + 1);
}

TEST_CASE("sweeping the straight arm upward hits a wall within tens of steps") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArm);
  EnvState s = reset(spec);
  std::vector<double> a = zero_action(spec);
  a[0] = 1.0;
  while (s.terminated == TerminationReason::None &&
         s.step_index < spec.horizon)
    s = step(spec, s, a);
  REQUIRE(s.terminated == TerminationReason::WallCollision);
  REQUIRE(s.step_index <= 40);
}

TEST_CASE("no-walls variant never reports wall collisions") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  Rng rng(104);
  for (int ep = 0; ep < 20; ++ep) {
    EnvState s = reset(spec);
    while (s.terminated == TerminationReason::None &&
           s.step_index < spec.horizon) {
      std::vector<double> a(spec.action_dim);
      for (double& v : a) v = rng.uniform(-1.0, 1.0);
      s = step(spec, s, a);
    }
    REQUIRE(s.terminated != TerminationReason::WallCollision);
  }
}

TEST_CASE("tight spiral pose self-collides") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  EnvState s = reset(spec);
  for (int i = 1; i < spec.n_links; ++i) s.values[i] = 1.5;
  // oracle: confirm some non-adjacent link pair crosses
  const std::vector<double> pts = arm_joint_positions(
      spec, std::span<const double>(s.values.data(), 20));
  bool any = false;
  for (int i = 0; i < spec.n_links && !any; ++i)
    for (int j = i + 2; j < spec.n_links && !any; ++j) {
      const Segment si{pts[2 * i], pts[2 * i + 1], pts[2 * i + 2],
                       pts[2 * i + 3]};
      const Segment sj{pts[2 * j], pts[2 * j + 1], pts[2 * j + 2],
                       pts[2 * j + 3]};
      any = oracle_intersect(si, sj);
    }
  REQUIRE(any);
  REQUIRE(check_termination(spec, s) == TerminationReason::SelfCollision);
}

TEST_CASE("rest pose has no termination") {
  for (EnvName name : {EnvName::RedundantArm, EnvName::RedundantArmNoWalls}) {
    const EnvSpec spec = make_env_spec(name);
    REQUIRE(check_termination(spec, reset(spec)) == TerminationReason::None);
  }
  const EnvSpec bic = make_env_spec(EnvName::BallInCup);
  EnvState wild = reset(bic);
  wild.values = {0.2, 0.1, -0.1, 3.0, -2.0, 1.0};
  REQUIRE(check_termination(bic, wild) == TerminationReason::None);
}

TEST_CASE("segment intersection agrees with the parametric oracle") {
  Rng rng(105);
  int hits = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Segment a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                    rng.uniform(-1, 1)};
    const Segment b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                    rng.uniform(-1, 1)};
    const bool want = oracle_intersect(a, b);
    REQUIRE(segments_intersect(a, b) == want);
    hits += want ? 1 : 0;
  }
  REQUIRE(hits > 100);  // both outcomes well represented
  REQUIRE(hits < 900);
}

TEST_CASE("segment intersection handles touching and collinear cases") {
  const Segment base{0, 0, 1, 0};
  REQUIRE(segments_intersect(base, {0.5, 0, 0.5, 1}));     // T-touch
  REQUIRE(segments_intersect(base, {1, 0, 2, 1}));         // endpoint touch
  REQUIRE(segments_intersect(base, {0.5, 0, 2, 0}));       // collinear overlap
  REQUIRE(!segments_intersect(base, {1.5, 0, 2, 0}));      // collinear apart
  REQUIRE(!segments_intersect(base, {0, 0.1, 1, 0.1}));    // parallel above
  REQUIRE(!segments_intersect(base, {0.5, 0.01, 0.5, 1})); // near miss
}

TEST_CASE("observer returns outcome dims of the final state") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  const EnvState s = reset(spec);
  REQUIRE(observer(spec, std::vector<EnvState>{s}) ==
          BehaviorDescriptor{0.0, 0.0, -0.3});

  std::vector<EnvState> rest(5, s);
  REQUIRE(observer(spec, rest) == BehaviorDescriptor{0.0, 0.0, -0.3});

  Rng rng(106);
  std::vector<EnvState> traj;
  EnvState cur = s;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> a(3);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    cur = step(spec, cur, a);
    traj.push_back(cur);
  }
  const BehaviorDescriptor b = observer(spec, traj);
  for (std::size_t i = 0; i < spec.outcome_dims.size(); ++i)
    REQUIRE(b[i] == traj.back().values[spec.outcome_dims[i]]);
}

TEST_CASE("observer rejects an empty trajectory") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  REQUIRE_THROWS_AS(observer(spec, std::vector<EnvState>{}), UsageError);
}

TEST_CASE("stepping a terminated state is an error") {
  const EnvSpec spec = make_env_spec(EnvName::RedundantArmNoWalls);
  EnvState s = reset(spec);
  s.terminated = TerminationReason::SelfCollision;
  REQUIRE_THROWS_AS(step(spec, s, zero_action(spec)), UsageError);
}

TEST_CASE("step rejects wrong action size") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  REQUIRE_THROWS_AS(step(spec, reset(spec), std::vector<double>{1.0}),
                    ShapeError);
}

TEST_CASE("env name round-trips") {
  for (EnvName name : {EnvName::BallInCup, EnvName::RedundantArm,
                       EnvName::RedundantArmNoWalls})
    REQUIRE(env_name_from_string(to_string(name)) == name);
  REQUIRE_THROWS_AS(env_name_from_string("nope"), ConfigError);
}
