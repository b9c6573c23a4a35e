#include "srmpc/mpc.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "srmpc/error.hpp"
#include "srmpc/qp_io.hpp"
#include "test_util.hpp"

namespace srmpc {
namespace {

using namespace testing;

Scenario scene() { return Scenario::light(); }

OcpConfig config() { return OcpConfig::for_scenario(scene()); }

TrafficVehicle car(double x, double y, double v) {
  TrafficVehicle t;
  t.state = {x, y, 0.0, v};
  t.desired_speed = v;
  t.lane = scene().lane_of(y);
  return t;
}

ObstaclePrediction constant_velocity(int slot, const VehicleState& s, int horizon, double dt) {
  ObstaclePrediction p;
  p.slot = slot;
  for (int k = 0; k <= horizon; ++k) p.states.push_back({s.x + s.v * k * dt, s.y, 0.0, s.v});
  return p;
}

TEST(Ellipse, BoundaryOnMajorAxis) {
  const EllipseAxes axes{4.9, 2.8};
  EXPECT_EQ(ellipse_value({axes.a, 0.0}, 0.0, axes, 2.0), 1.0);
  const VehicleState ego{axes.a, 0.0, 0.0, 0.0};
  EXPECT_EQ(circle_clearance(ego, 0.0, VehicleState{}, axes, 2.0), 1.0);
}

TEST(Ellipse, BoundaryOnRotatedMinorAxis) {
  const EllipseAxes axes{4.9, 2.8};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    const double phi = angle(rng);
    const Eigen::Vector2d delta(-axes.b * std::sin(phi), axes.b * std::cos(phi));
    EXPECT_NEAR(ellipse_value(delta, phi, axes, 2.0), 1.0, 1e-12);
    EXPECT_NEAR(ellipse_value(delta, phi, axes, 4.0), 1.0, 1e-12);
  }
}

TEST(Ellipse, QuadraticFormAgreesWithMatrixForm) {
  const EllipseAxes axes{3.0, 1.5};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d d(uni(rng), uni(rng));
    const double phi = uni(rng);
    Eigen::Matrix2d rot;
    rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    const Eigen::Matrix2d scale = Eigen::Vector2d(1.0 / axes.a, 1.0 / axes.b).asDiagonal();
    const double expected = d.dot(rot * scale * scale * rot.transpose() * d);
    EXPECT_NEAR(ellipse_value(d, phi, axes, 2.0), expected, 1e-12 * std::max(1.0, expected));
  }
}

TEST(Ellipse, ClearanceGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const VehicleState obstacle{10.0 * uni(rng), 4.0 * uni(rng), 0.3 * uni(rng), 20.0};
    VehicleState ego{obstacle.x + 15.0 * uni(rng), obstacle.y + 6.0 * uni(rng), 0.3 * uni(rng), 25.0};
    const double offset = 2.0 * uni(rng);
    const EllipseAxes axes{4.0 + uni(rng), 2.0 + 0.5 * uni(rng)};
    const double p = i % 2 == 0 ? 2.0 : 4.0;
    // Skip the neighbourhood of the center, where the norm is not smooth.
    if (circle_clearance(ego, offset, obstacle, axes, p) < 0.2) continue;
    const Eigen::Vector3d analytic = circle_clearance_gradient(ego, offset, obstacle, axes, p);
    auto f = [&](const Eigen::VectorXd& v) {
      VehicleState s = ego;
      s.x = v[0];
      s.y = v[1];
      s.phi = v[2];
      Eigen::VectorXd out(1);
      out[0] = circle_clearance(s, offset, obstacle, axes, p);
      return out;
    };
    const Eigen::MatrixXd numeric = fd_jacobian(f, Eigen::Vector3d(ego.x, ego.y, ego.phi));
    for (int j = 0; j < 3; ++j) worst = std::max(worst, rel_err(analytic[j], numeric(0, j)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Objective, ZeroOnReference) {
  const OcpConfig cfg = config();
  const OcpLayout L = OcpLayout::for_config(cfg);
  const VehicleState x{0.0, 2.0, 0.0, 25.0};
  const auto targets = tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt);
  const QuadraticForm f = tracking_objective(targets, {}, cfg);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L.num_variables());
  for (int k = 0; k <= cfg.horizon; ++k) z.segment<4>(L.state(k, 0)) = targets[static_cast<std::size_t>(k)].vec();
  EXPECT_NEAR(f.value(z), 0.0, 1e-9);
}

// Sum of the tracking, effort, rate and slack terms evaluated term by term.
double direct_cost(const Eigen::VectorXd& z, const std::vector<VehicleState>& targets, const ControlInput& last,
                   const OcpConfig& cfg) {
  const OcpLayout L = OcpLayout::for_config(cfg);
  double sum = 0.0;
  for (int k = 0; k <= cfg.horizon; ++k) {
    const Eigen::Vector4d e = z.segment<4>(L.state(k, 0)) - targets[static_cast<std::size_t>(k)].vec();
    sum += e.dot(cfg.q.asDiagonal() * e);
  }
  Eigen::Vector2d prev = last.vec();
  for (int k = 0; k < cfg.horizon; ++k) {
    const Eigen::Vector2d u = z.segment<2>(L.control(k, 0));
    sum += u.dot(cfg.r.asDiagonal() * u);
    sum += (u - prev).dot(cfg.s.asDiagonal() * (u - prev));
    prev = u;
  }
  for (int k = 1; k <= cfg.horizon; ++k) {
    for (int slot = 0; slot < L.slots; ++slot) {
      const double h = z[L.hard_slack(slot, k)];
      const double s = z[L.soft_slack(slot, k)];
      sum += cfg.hard_slack_weight * (h + h * h) + cfg.soft_slack_weight * (s + s * s);
    }
    const double r = z[L.road_slack(k)];
    sum += cfg.road_slack_weight * (r + r * r);
  }
  return sum;
}

TEST(Objective, MatchesDirectSummation) {
  const OcpConfig cfg = config();
  const OcpLayout L = OcpLayout::for_config(cfg);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const VehicleState x{3.0, 2.5, 0.05, 22.0};
  const auto targets = tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt);
  const ControlInput last{0.02, -0.5};
  const QuadraticForm f = tracking_objective(targets, last, cfg);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd z(L.num_variables());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = n01(rng);
    const double expected = direct_cost(z, targets, last, cfg);
    EXPECT_LT(rel_err(f.value(z), expected), 1e-9);
  }
}

TEST(Objective, NoRateWeightDecouplesControlSteps) {
  OcpConfig cfg = config();
  cfg.s.setZero();
  const OcpLayout L = OcpLayout::for_config(cfg);
  const auto targets = tracking_targets({}, 2.0, 25.0, cfg.horizon, cfg.dt);
  const QuadraticForm f = tracking_objective(targets, {}, cfg);
  for (int col = 0; col < f.H.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(f.H, col); it; ++it) {
      if (it.row() != it.col()) ADD_FAILURE() << "coupling " << it.row() << "," << it.col();
    }
  }
  (void)L;
}

TEST(Assemble, HessianIsPositiveSemidefinite) {
  const OcpConfig cfg = config();
  HighwayEnv env(Scenario::dense());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    env.reset(seed);
    const VehicleState x = env.world().ego;
    const auto obs = predict_obstacles(env.world(), env.observation(), env.scenario(), cfg.horizon);
    const AssembledQp qp = assemble_qp(x, constant_velocity_reference(x, cfg.horizon, cfg.dt),
                                       tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt), obs, {}, cfg);
    const Eigen::MatrixXd H(qp.problem.H);
    EXPECT_TRUE(H.isApprox(H.transpose()));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Assemble, StraightReferenceOnEmptyRoad) {
  const OcpConfig cfg = config();
  const VehicleState x{0.0, 2.0, 0.0, 25.0};
  const AssembledQp qp = assemble_qp(x, constant_velocity_reference(x, cfg.horizon, cfg.dt),
                                     tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt), {}, {}, cfg);
  const QpSolution sol = solve(qp.problem);
  ASSERT_EQ(sol.status, QpStatus::Solved);
  const Trajectory t = extract_trajectory(qp, sol.z);
  for (const auto& u : t.controls) {
    EXPECT_NEAR(u.delta, 0.0, 1e-4);
    EXPECT_NEAR(u.a, 0.0, 1e-4);
  }
  for (const auto& s : t.states) EXPECT_NEAR(s.y, 2.0, 1e-4);
  EXPECT_LT(max_slack(qp.layout, sol.z), 1e-6);
}

TEST(Assemble, SlackUnusedWhenObstaclesAreFar) {
  const OcpConfig cfg = config();
  const VehicleState x{0.0, 2.0, 0.0, 22.0};
  std::vector<ObstaclePrediction> obs{constant_velocity(2, {30.0, 6.0, 0.0, 22.0}, cfg.horizon, cfg.dt),
                                      constant_velocity(5, {-20.0, 10.0, 0.0, 22.0}, cfg.horizon, cfg.dt)};
  const AssembledQp qp = assemble_qp(x, constant_velocity_reference(x, cfg.horizon, cfg.dt),
                                     tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt), obs, {}, cfg);
  const QpSolution sol = solve(qp.problem);
  ASSERT_EQ(sol.status, QpStatus::Solved);
  EXPECT_LT(max_slack(qp.layout, sol.z), 1e-6);
}

TEST(Assemble, FeasibleForArbitraryObstacleFields) {
  const OcpConfig cfg = config();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dx(-15.0, 30.0);
  std::uniform_real_distribution<double> y(1.0, 11.0);
  std::uniform_real_distribution<double> v(0.0, 35.0);
  for (int trial = 0; trial < 20; ++trial) {
    const VehicleState x{0.0, y(rng), 0.0, v(rng)};
    std::vector<ObstaclePrediction> obs;
    for (int slot = 0; slot < kNeighborSlots; ++slot) {
      obs.push_back(constant_velocity(slot, {dx(rng), y(rng), 0.0, v(rng)}, cfg.horizon, cfg.dt));
    }
    const AssembledQp qp = assemble_qp(x, constant_velocity_reference(x, cfg.horizon, cfg.dt),
                                       tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt), obs, {}, cfg);
    QpSettings s;
    s.max_iter = 100000;
    const QpSolution sol = solve(qp.problem, s);
    EXPECT_EQ(sol.status, QpStatus::Solved) << "trial " << trial;
    EXPECT_LT(kkt_residuals(qp.problem, sol.z, sol.y).primal, 1e-3);
  }
}

TEST(Assemble, MalformedReferenceIsRejected) {
  const OcpConfig cfg = config();
  const VehicleState x{0.0, 2.0, 0.0, 25.0};
  const auto targets = tracking_targets(x, 2.0, 25.0, cfg.horizon, cfg.dt);
  Trajectory short_ref = constant_velocity_reference(x, cfg.horizon - 1, cfg.dt);
  EXPECT_THROW(assemble_qp(x, short_ref, targets, {}, {}, cfg), LinearizationError);
  Trajectory nan_ref = constant_velocity_reference(x, cfg.horizon, cfg.dt);
  nan_ref.states[3].y = std::nan("");
  EXPECT_THROW(assemble_qp(x, nan_ref, targets, {}, {}, cfg), LinearizationError);
}

// Max deviation between the QP state sequence and the nonlinear re-simulation
// of its controls, starting off the reference by `offset` metres.
std::pair<double, double> resimulation_error(double offset) {
  const OcpConfig cfg = config();
  const VehicleState ref0{0.0, 2.0, 0.0, 25.0};
  const VehicleState x{0.0, 2.0 + offset, 0.0, 25.0 - offset};
  const AssembledQp qp = assemble_qp(x, constant_velocity_reference(ref0, cfg.horizon, cfg.dt),
                                     tracking_targets(ref0, 2.0, 25.0, cfg.horizon, cfg.dt), {}, {}, cfg);
  QpSettings s;
  s.eps_abs = 1e-8;
  const QpSolution sol = solve(qp.problem, s);
  const Trajectory t = extract_trajectory(qp, sol.z);
  const Trajectory sim = simulate(x, t.controls, cfg.geometry, cfg.dt);
  double err = 0.0;
  double deviation = 0.0;
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    err = std::max(err, (t.states[k].vec() - sim.states[k].vec()).lpNorm<Eigen::Infinity>());
    deviation = std::max(deviation, std::abs(t.states[k].y - 2.0));
  }
  return {err, deviation};
}

TEST(Assemble, SolutionMatchesNonlinearResimulation) {
  const auto [err_full, dev_full] = resimulation_error(0.4);
  const auto [err_half, dev_half] = resimulation_error(0.2);
  EXPECT_GT(dev_full, 0.3);
  // Linearization error is second order in the deviation from the reference.
  EXPECT_LT(err_full, 0.05 * dev_full);
  EXPECT_GT(err_full / err_half, 3.0);
  EXPECT_LT(err_full / err_half, 5.0);
}

TEST(Shift, ConstantControlMatchesForwardRoll) {
  const OcpConfig cfg = config();
  const VehicleState x{0.0, 2.0, 0.02, 20.0};
  const std::vector<ControlInput> controls(static_cast<std::size_t>(cfg.horizon), ControlInput{0.01, 0.5});
  const Trajectory t = simulate(x, controls, cfg.geometry, cfg.dt);
  const Trajectory longer =
      simulate(x, std::vector<ControlInput>(controls.size() + 1, controls[0]), cfg.geometry, cfg.dt);
  const Trajectory shifted = shift_trajectory(t, cfg.geometry, cfg.dt);
  ASSERT_EQ(shifted.states.size(), t.states.size());
  for (std::size_t k = 0; k < shifted.states.size(); ++k) {
    EXPECT_LT((shifted.states[k].vec() - longer.states[k + 1].vec()).lpNorm<Eigen::Infinity>(), 1e-9);
  }
  EXPECT_EQ(shifted.timestamps.front(), t.timestamps[1]);
  EXPECT_NEAR(shifted.timestamps.back(), t.timestamps.back() + cfg.dt, 1e-12);
}

TEST(Shift, TailIsDynamicallyConsistent) {
  const OcpConfig cfg = config();
  const Trajectory t = lane_change_reference({0.0, 2.0, 0.0, 25.0}, 6.0, cfg.horizon, cfg.geometry, cfg.dt);
  const Trajectory s = shift_trajectory(t, cfg.geometry, cfg.dt);
  const VehicleState tail = step(s.states[s.states.size() - 2], s.controls.back(), cfg.geometry, cfg.dt);
  EXPECT_LT((tail.vec() - s.states.back().vec()).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_EQ(s.controls.back().delta, t.controls.back().delta);
}

TEST(Shift, Composition) {
  const OcpConfig cfg = config();
  const Trajectory t = lane_change_reference({0.0, 2.0, 0.0, 25.0}, 6.0, cfg.horizon, cfg.geometry, cfg.dt);
  const Trajectory twice = shift_trajectory(shift_trajectory(t, cfg.geometry, cfg.dt), cfg.geometry, cfg.dt);
  for (std::size_t k = 0; k + 2 < t.states.size(); ++k) EXPECT_EQ(twice.states[k].x, t.states[k + 2].x);
  ASSERT_EQ(twice.states.size(), t.states.size());
  ASSERT_EQ(twice.controls.size(), t.controls.size());
}

TEST(Controller, InitialReferenceIsConstantVelocity) {
  const OcpConfig cfg = config();
  MpcController mpc(cfg, 2.0, 25.0);
  const VehicleState x{10.0, 2.0, 0.0, 23.0};
  const Trajectory ref = mpc.default_reference(x);
  const Trajectory cv = constant_velocity_reference(x, cfg.horizon, cfg.dt);
  for (std::size_t k = 0; k < ref.states.size(); ++k) {
    EXPECT_EQ(ref.states[k].x, cv.states[k].x);
    EXPECT_EQ(ref.states[k].v, 23.0);
    EXPECT_DOUBLE_EQ(ref.states[k].x, 10.0 + 23.0 * cfg.dt * static_cast<double>(k));
  }
  for (const auto& u : ref.controls) {
    EXPECT_EQ(u.delta, 0.0);
    EXPECT_EQ(u.a, 0.0);
  }
}

TEST(Controller, EmptyRoadAtReferenceSpeedHoldsStill) {
  MpcController mpc(config(), 2.0, 25.0);
  const MpcStep r = mpc.step({0.0, 2.0, 0.0, 25.0}, {});
  EXPECT_EQ(r.status, QpStatus::Solved);
  EXPECT_NEAR(r.control.delta, 0.0, 1e-4);
  EXPECT_NEAR(r.control.a, 0.0, 1e-4);
  EXPECT_FALSE(r.braking);
}

TEST(Controller, SlowLeaderCausesDeceleration) {
  const Scenario sc = scene();
  HighwayEnv env(sc);
  World w;
  w.ego = {100.0, 2.0, 0.0, 25.0};
  w.traffic.push_back(car(130.0, 2.0, 15.0));
  env.reset(w);
  MpcController mpc(config(), sc.y_ref, sc.v_ref);
  double min_a = 0.0;
  double max_y = 0.0;
  for (int k = 0; k < 50; ++k) {
    const VehicleState x = env.world().ego;
    const auto obs = predict_obstacles(env.world(), env.observation(), sc, mpc.config().horizon);
    const MpcStep r = mpc.step(x, lane_change_reference(x, sc.y_ref, 25, sc.geometry, sc.dt), obs);
    min_a = std::min(min_a, r.control.a);
    const StepOutcome res = env.step(r.control);
    max_y = std::max(max_y, env.world().ego.y);
    ASSERT_NE(res.termination, Termination::Collision) << "step " << k;
  }
  EXPECT_LT(min_a, -0.5);
  EXPECT_LT(max_y, 2.5);
  EXPECT_LT(env.world().ego.x, env.world().traffic[0].state.x);
}

TEST(Controller, MalformedReferenceFallsBackToBraking) {
  OcpConfig cfg = config();
  MpcController mpc(cfg, 2.0, 25.0);
  Trajectory bad = constant_velocity_reference({0.0, 2.0, 0.0, 25.0}, cfg.horizon, cfg.dt);
  bad.controls[0].a = std::nan("");
  const MpcStep r = mpc.step({0.0, 2.0, 0.0, 25.0}, bad, {});
  EXPECT_TRUE(r.braking);
  EXPECT_EQ(r.control.a, cfg.braking.a);
  EXPECT_EQ(mpc.consecutive_failures(), 1);
}

TEST(Controller, RepeatedSolverFailuresBrake) {
  OcpConfig cfg = config();
  cfg.qp.max_iter = 1;
  cfg.qp.polish = false;
  cfg.fallback_after = 2;
  MpcController mpc(cfg, 2.0, 25.0);
  const VehicleState x{0.0, 3.0, 0.0, 20.0};
  const MpcStep first = mpc.step(x, {});
  EXPECT_TRUE(first.solver_failed);
  EXPECT_FALSE(first.braking);
  const MpcStep second = mpc.step(x, {});
  EXPECT_TRUE(second.braking);
  EXPECT_EQ(second.control.a, cfg.braking.a);
}

std::vector<double> closed_loop_controls(std::uint64_t seed, int steps) {
  const Scenario sc = Scenario::dense();
  HighwayEnv env(sc);
  env.reset(seed);
  MpcController mpc(OcpConfig::for_scenario(sc), sc.y_ref, sc.v_ref);
  std::vector<double> out;
  for (int k = 0; k < steps && !env.done(); ++k) {
    const MpcStep r = mpc.step(env.world().ego, predict_obstacles(env.world(), env.observation(), sc, 25));
    out.push_back(r.control.delta);
    out.push_back(r.control.a);
    env.step(r.control);
  }
  return out;
}

TEST(Controller, RecedingHorizonIsDeterministic) {
  EXPECT_EQ(closed_loop_controls(11, 40), closed_loop_controls(11, 40));
}

TEST(Controller, LaneChangeReferenceSelectsOvertake) {
  const Scenario sc = scene();
  HighwayEnv env(sc);
  World w;
  w.ego = {100.0, 2.0, 0.0, 25.0};
  w.traffic.push_back(car(130.0, 2.0, 15.0));
  env.reset(w);
  const OcpConfig cfg = config();
  const auto obs = predict_obstacles(env.world(), env.observation(), sc, cfg.horizon);
  const auto targets = tracking_targets(w.ego, sc.y_ref, sc.v_ref, cfg.horizon, cfg.dt);
  double max_y[2] = {0.0, 0.0};
  for (int mode = 0; mode < 2; ++mode) {
    const Trajectory ref = lane_change_reference(w.ego, mode == 0 ? 2.0 : 6.0, cfg.horizon, cfg.geometry, cfg.dt);
    const AssembledQp qp = assemble_qp(w.ego, ref, targets, obs, {}, cfg);
    QpSettings s;
    s.eps_abs = 1e-6;
    const QpSolution sol = solve(qp.problem, s);
    ASSERT_EQ(sol.status, QpStatus::Solved);
    const KktResiduals kkt = kkt_residuals(qp.problem, sol.z, sol.y);
    EXPECT_LT(kkt.primal, 1e-4);
    EXPECT_LT(kkt.dual, 1e-4);
    for (const auto& st : extract_trajectory(qp, sol.z).states) max_y[mode] = std::max(max_y[mode], st.y);
  }
  EXPECT_LT(max_y[0], 2.0 + 0.1);                              // stays in lane
  EXPECT_GT(max_y[1], sc.lane_center(1) - 0.5 * sc.lane_width);  // crosses into the next lane
}

TEST(WarmStart, ShiftedIterateCutsIterations) {
  const Scenario sc = Scenario::light();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  HighwayEnv env(sc);
  int better = 0;
  int total = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    env.reset(seed);
    MpcController mpc(cfg, sc.y_ref, sc.v_ref);
    std::optional<WarmStart> warm;
    for (int k = 0; k < 40 && !env.done(); ++k) {
      const VehicleState x = env.world().ego;
      const auto obs = predict_obstacles(env.world(), env.observation(), sc, cfg.horizon);
      const Trajectory ref = mpc.default_reference(x);
      const ControlInput last = env.world().last_control;
      const AssembledQp qp = assemble_qp(x, ref, tracking_targets(x, sc.y_ref, sc.v_ref, cfg.horizon, cfg.dt), obs,
                                         last, cfg);
      const QpSolution cold = solve(qp.problem, cfg.qp);
      if (warm) {
        const QpSolution hot = solve(qp.problem, cfg.qp, warm);
        ++total;
        better += hot.iterations < cold.iterations;
      }
      warm = shift_warm_start(qp.layout, cold.z, cold.y);
      const MpcStep r = mpc.step(x, ref, obs);
      env.step(r.control);
    }
  }
  ASSERT_GT(total, 30);
  EXPECT_GE(better, 0.8 * total) << better << " of " << total;
}

TEST(Config, Validation) {
  OcpConfig cfg = config();
  cfg.q[1] = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = config();
  cfg.exponent = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = config();
  cfg.horizon = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(config().validate());
}

TEST(Dump, WritesOneQpPerStep) {
  const auto dir = std::filesystem::temp_directory_path() / "srmpc_dump_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  OcpConfig cfg = config();
  cfg.dump_dir = dir.string();
  MpcController mpc(cfg, 2.0, 25.0);
  VehicleState x{0.0, 2.5, 0.0, 24.0};
  for (int k = 0; k < 3; ++k) x = step(x, mpc.step(x, {}).control, cfg.geometry, cfg.dt);
  const auto files = list_qp_corpus(dir);
  ASSERT_EQ(files.size(), 3u);
  const QpRecord rec = load_qp(files[0]);
  ASSERT_TRUE(rec.solution.has_value());
  const QpSolution again = solve(rec.problem, cfg.qp);
  EXPECT_LT((again.z - rec.solution->z).lpNorm<Eigen::Infinity>(), 1e-9);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace srmpc
