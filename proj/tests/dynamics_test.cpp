#include "srmpc/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "srmpc/error.hpp"
#include "test_util.hpp"

namespace srmpc {
namespace {

using testing::fd_jacobian;
using testing::max_rel_err;

const VehicleGeometry kGeom{};  // l_r = 1.5, l = 3.0

TEST(SlipAngle, ZeroSteering) { EXPECT_EQ(slip_angle(0.0, kGeom), 0.0); }

TEST(SlipAngle, OddInSteering) {
  for (double d : {0.01, 0.1, 0.3, 0.5, 1.2}) EXPECT_DOUBLE_EQ(slip_angle(-d, kGeom), -slip_angle(d, kGeom));
}

TEST(SlipAngle, HandEvaluation) {
  // atan(0.5 * tan(0.2)), evaluated independently in double precision.
  EXPECT_NEAR(slip_angle(0.2, kGeom), 0.10101007345816129, 1e-12);
}

TEST(Derivative, StraightDriving) {
  const Eigen::Vector4d d = derivative({0, 0, 0, 25}, {0, 0}, kGeom);
  EXPECT_TRUE(d.isApprox(Eigen::Vector4d(25, 0, 0, 0)));
}

TEST(Derivative, StandstillAccelerating) {
  const Eigen::Vector4d d = derivative({3, 4, 0.2, 0}, {0.3, 1.0}, kGeom);
  EXPECT_NEAR(d[0], 0.0, 1e-15);
  EXPECT_NEAR(d[1], 0.0, 1e-15);
  EXPECT_NEAR(d[2], 0.0, 1e-15);
  EXPECT_EQ(d[3], 1.0);
}

TEST(Derivative, SymbolicOracle) {
  // v=20, phi=0.1, delta=0.05 evaluated with an independent symbolic model.
  const Eigen::Vector4d d = derivative({0, 0, 0.1, 20}, {0.05, 0}, kGeom);
  EXPECT_NEAR(d[0], 19.843914356945316, 1e-12);
  EXPECT_NEAR(d[1], 2.4938049230482244, 1e-12);
  EXPECT_NEAR(d[2], 0.3335070106152888, 1e-12);
  EXPECT_EQ(d[3], 0.0);
}

TEST(Derivative, InvariantUnderFullTurn) {
  const VehicleState s{1, 2, 0.7, 15};
  VehicleState turned = s;
  turned.phi += 2.0 * std::numbers::pi;
  EXPECT_TRUE(derivative(s, {0.1, 0.5}, kGeom).isApprox(derivative(turned, {0.1, 0.5}, kGeom), 1e-12));
}

TEST(DerivativeJacobian, SteeringColumnSymbolic) {
  Eigen::Matrix4d fx;
  Eigen::Matrix<double, 4, 2> fu;
  derivative_jacobians({0, 0, 0.1, 20}, {0.3, 0}, kGeom, fx, fu);
  // d/d(delta) of (x', y', phi') from a symbolic differentiation.
  EXPECT_NEAR(fu(0, 0), -2.6832222933554402, 1e-10);
  EXPECT_NEAR(fu(1, 0), 10.359033460025678, 1e-10);
  EXPECT_NEAR(fu(2, 0), 7.0501044600990648, 1e-10);

  // At delta = 0 the yaw-rate sensitivity reduces to v / l.
  derivative_jacobians({0, 0, 0.0, 20}, {0.0, 0}, kGeom, fx, fu);
  EXPECT_NEAR(fu(2, 0), 20.0 / 3.0, 1e-12);
}

TEST(Step, ZeroControlAdvancesStraight) {
  const VehicleState s = step({10, 2, 0, 25}, {0, 0}, kGeom, 0.1);
  EXPECT_NEAR(s.x, 12.5, 1e-12);
  EXPECT_EQ(s.y, 2.0);
  EXPECT_EQ(s.v, 25.0);
}

TEST(Step, ConstantAccelerationIsExact) {
  const VehicleState s = step({0, 0, 0, 20}, {0, 2.0}, kGeom, 0.1);
  EXPECT_NEAR(s.v, 20.2, 1e-12);
  EXPECT_NEAR(s.x, 2.0 + 0.5 * 2.0 * 0.01, 1e-12);
}

TEST(Step, HalfStepRefinement) {
  // Highway operating range: yaw rates up to ~1 rad/s.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const VehicleState s{100 * uni(rng), 5 * uni(rng), 0.5 * uni(rng), 20 + 5 * uni(rng)};
    const ControlInput u{0.1 * uni(rng), 2.0 * uni(rng)};
    const VehicleState full = step(s, u, kGeom, 0.1);
    const VehicleState half = step(step(s, u, kGeom, 0.05), u, kGeom, 0.05);
    EXPECT_LT((full.vec() - half.vec()).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Step, SpeedClampAndHeadingWrap) {
  EXPECT_EQ(step({0, 0, 0, 0.1}, {0, -5}, kGeom, 0.1).v, 0.0);
  EXPECT_EQ(step({0, 0, 0, 39.9}, {0, 3}, kGeom, 0.1).v, 40.0);
  const VehicleState s = step({0, 0, std::numbers::pi - 1e-3, 20}, {0.5, 0}, kGeom, 0.1);
  EXPECT_GT(s.phi, -std::numbers::pi);
  EXPECT_LE(s.phi, std::numbers::pi);
  EXPECT_LT(s.phi, 0.0);  // wrapped past +pi
}

TEST(Step, SpeedConstantWithoutAcceleration) {
  VehicleState s{0, 2, 0.05, 23.0};
  for (int k = 0; k < 500; ++k) s = step(s, {0.02 * std::sin(0.1 * k), 0.0}, kGeom, 0.1);
  EXPECT_EQ(s.v, 23.0);
}

Trajectory random_reference(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<ControlInput> us;
  for (int k = 0; k < n; ++k) us.push_back({0.3 * uni(rng), 2.0 * uni(rng)});
  return simulate({50 * uni(rng), 6 + 4 * uni(rng), 0.3 * uni(rng), 22 + 5 * uni(rng)}, us, kGeom, 0.1);
}

TEST(Linearize, AffineResidualIdentity) {
  std::mt19937_64 rng(11);
  const Trajectory ref = random_reference(rng, 25);
  const auto lin = linearize(ref, kGeom, 0.1);
  ASSERT_EQ(lin.size(), 25u);
  for (std::size_t k = 0; k < lin.size(); ++k) {
    const Eigen::Vector4d pred = lin[k].A * ref.states[k].vec() + lin[k].B * ref.controls[k].vec() + lin[k].c;
    EXPECT_LT((pred - step(ref.states[k], ref.controls[k], kGeom, 0.1).vec()).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Linearize, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const VehicleState s{100 * uni(rng), 6 + 5 * uni(rng), 0.6 * uni(rng), 20 + 10 * uni(rng)};
    const ControlInput u{0.5 * uni(rng), 4.0 * uni(rng)};
    const LinearizedDynamics lin = linearize_step(s, u, kGeom, 0.1);
    const auto fs = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return step(VehicleState::from(x), u, kGeom, 0.1).vec();
    };
    const auto fu = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
      return step(s, ControlInput::from(c), kGeom, 0.1).vec();
    };
    worst = std::max(worst, max_rel_err(lin.A, fd_jacobian(fs, s.vec())));
    worst = std::max(worst, max_rel_err(lin.B, fd_jacobian(fu, u.vec())));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Linearize, RejectsNonFiniteReference) {
  std::mt19937_64 rng(1);
  Trajectory ref = random_reference(rng, 5);
  ref.states[2].y = std::nan("");
  EXPECT_THROW(linearize(ref, kGeom, 0.1), LinearizationError);
  ref = random_reference(rng, 5);
  ref.controls.pop_back();
  EXPECT_THROW(linearize(ref, kGeom, 0.1), LinearizationError);
}

TEST(Trajectory, Validate) {
  std::mt19937_64 rng(2);
  Trajectory ref = random_reference(rng, 4);
  EXPECT_NO_THROW(ref.validate());
  ref.states.pop_back();
  EXPECT_THROW(ref.validate(), InvalidArgument);
}

}  // namespace
}  // namespace srmpc
