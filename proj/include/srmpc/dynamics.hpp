#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace srmpc {

// Kinematic bicycle model state. Position of the center of gravity in global
// coordinates, heading and speed.
struct VehicleState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double phi = 0.0;  // rad
  double v = 0.0;    // m/s

  Eigen::Vector4d vec() const { return {x, y, phi, v}; }
  static VehicleState from(const Eigen::Vector4d& s) { return {s[0], s[1], s[2], s[3]}; }
  bool finite() const;
};

struct ControlInput {
  double delta = 0.0;  // steering angle, rad
  double a = 0.0;      // acceleration, m/s^2

  Eigen::Vector2d vec() const { return {delta, a}; }
  static ControlInput from(const Eigen::Vector2d& u) { return {u[0], u[1]}; }
  bool finite() const;
};

struct VehicleGeometry {
  double l_f = 1.5;     // front axle to COG, m
  double l_r = 1.5;     // rear axle to COG, m
  double length = 5.0;  // footprint, m
  double width = 2.0;   // footprint, m

  double wheelbase() const { return l_f + l_r; }
  void validate() const;
};

// Box constraints on the controls and the speed clamp used by `step`.
struct ControlLimits {
  double delta_max = 0.5;
  double a_min = -5.0;
  double a_max = 3.0;
  double v_max = 40.0;

  ControlInput clamp(const ControlInput& u) const;
  bool contains(const ControlInput& u, double tol = 0.0) const;
};

// x_{k+1} ~= A x_k + B u_k + c about one reference point.
struct LinearizedDynamics {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  Eigen::Vector4d c = Eigen::Vector4d::Zero();
};

// N+1 states and N controls over a horizon, with per-state timestamps.
struct Trajectory {
  std::vector<VehicleState> states;
  std::vector<ControlInput> controls;
  std::vector<double> timestamps;

  std::size_t horizon() const { return controls.size(); }
  // Throws InvalidArgument on inconsistent lengths or non-finite entries.
  void validate() const;
};

double wrap_angle(double angle);

// Slip angle at the COG for a given steering angle.
double slip_angle(double delta, const VehicleGeometry& geometry);

// Continuous-time kinematic bicycle dynamics (x', y', phi', v').
Eigen::Vector4d derivative(const VehicleState& state, const ControlInput& control,
                           const VehicleGeometry& geometry);

// Jacobians of `derivative` with respect to state and control.
void derivative_jacobians(const VehicleState& state, const ControlInput& control,
                          const VehicleGeometry& geometry, Eigen::Matrix4d& f_x,
                          Eigen::Matrix<double, 4, 2>& f_u);

// One RK4 step of length dt. Speed is clamped to [0, v_max] and the heading
// wrapped to (-pi, pi] afterwards.
VehicleState step(const VehicleState& state, const ControlInput& control,
                  const VehicleGeometry& geometry, double dt, double v_max = ControlLimits{}.v_max);

// Exact Jacobians of the RK4 map (before clamping and wrapping) together with
// the affine residual so that A x + B u + c reproduces `step` at the point.
LinearizedDynamics linearize_step(const VehicleState& state, const ControlInput& control,
                                  const VehicleGeometry& geometry, double dt,
                                  double v_max = ControlLimits{}.v_max);

// Per-step linearization along a reference trajectory. Throws
// LinearizationError if the reference holds non-finite values.
std::vector<LinearizedDynamics> linearize(const Trajectory& reference, const VehicleGeometry& geometry,
                                          double dt, double v_max = ControlLimits{}.v_max);

// Forward simulation of a control sequence from an initial state.
Trajectory simulate(const VehicleState& initial, const std::vector<ControlInput>& controls,
                    const VehicleGeometry& geometry, double dt, double t0 = 0.0,
                    double v_max = ControlLimits{}.v_max);

}  // namespace srmpc
