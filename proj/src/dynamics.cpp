#include "srmpc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "srmpc/error.hpp"

namespace srmpc {

bool VehicleState::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(phi) && std::isfinite(v);
}

bool ControlInput::finite() const { return std::isfinite(delta) && std::isfinite(a); }

void VehicleGeometry::validate() const {
  if (!(l_f >= 0.0 && l_r >= 0.0 && wheelbase() > 0.0)) {
    throw InvalidArgument("vehicle geometry: wheelbase l_f + l_r must be positive");
  }
  if (!(length > 0.0 && width > 0.0)) {
    throw InvalidArgument("vehicle geometry: length and width must be positive");
  }
}

ControlInput ControlLimits::clamp(const ControlInput& u) const {
  return {std::clamp(u.delta, -delta_max, delta_max), std::clamp(u.a, a_min, a_max)};
}

bool ControlLimits::contains(const ControlInput& u, double tol) const {
  return std::abs(u.delta) <= delta_max + tol && u.a >= a_min - tol && u.a <= a_max + tol;
}

void Trajectory::validate() const {
  if (states.size() != controls.size() + 1) {
    throw InvalidArgument("trajectory: expected N+1 states for N controls, got " +
                          std::to_string(states.size()) + " states and " +
                          std::to_string(controls.size()) + " controls");
  }
  if (!timestamps.empty() && timestamps.size() != states.size()) {
    throw InvalidArgument("trajectory: timestamp count does not match state count");
  }
  for (const auto& s : states) {
    if (!s.finite()) throw InvalidArgument("trajectory: non-finite state");
  }
  for (const auto& u : controls) {
    if (!u.finite()) throw InvalidArgument("trajectory: non-finite control");
  }
}

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);  // in [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

double slip_angle(double delta, const VehicleGeometry& geometry) {
  return std::atan(geometry.l_r / geometry.wheelbase() * std::tan(delta));
}

Eigen::Vector4d derivative(const VehicleState& state, const ControlInput& control,
                           const VehicleGeometry& geometry) {
  const double beta = slip_angle(control.delta, geometry);
  return {state.v * std::cos(state.phi + beta), state.v * std::sin(state.phi + beta),
          state.v / geometry.wheelbase() * std::tan(control.delta) * std::cos(beta), control.a};
}

void derivative_jacobians(const VehicleState& state, const ControlInput& control,
                          const VehicleGeometry& geometry, Eigen::Matrix4d& f_x,
                          Eigen::Matrix<double, 4, 2>& f_u) {
  const double l = geometry.wheelbase();
  const double ratio = geometry.l_r / l;
  const double tan_d = std::tan(control.delta);
  const double sec2_d = 1.0 + tan_d * tan_d;
  const double beta = std::atan(ratio * tan_d);
  const double dbeta = ratio * sec2_d / (1.0 + ratio * ratio * tan_d * tan_d);
  const double c = std::cos(state.phi + beta);
  const double s = std::sin(state.phi + beta);
  const double v = state.v;

  f_x.setZero();
  f_x(0, 2) = -v * s;
  f_x(0, 3) = c;
  f_x(1, 2) = v * c;
  f_x(1, 3) = s;
  f_x(2, 3) = tan_d * std::cos(beta) / l;

  f_u.setZero();
  f_u(0, 0) = -v * s * dbeta;
  f_u(1, 0) = v * c * dbeta;
  f_u(2, 0) = v / l * (sec2_d * std::cos(beta) - tan_d * std::sin(beta) * dbeta);
  f_u(3, 1) = 1.0;
}

namespace {

VehicleState finish(const Eigen::Vector4d& raw, double v_max) {
  VehicleState out = VehicleState::from(raw);
  out.v = std::clamp(out.v, 0.0, v_max);
  out.phi = wrap_angle(out.phi);
  return out;
}

Eigen::Vector4d rk4(const Eigen::Vector4d& x0, const ControlInput& u, const VehicleGeometry& g,
                    double dt) {
  const Eigen::Vector4d k1 = derivative(VehicleState::from(x0), u, g);
  const Eigen::Vector4d k2 = derivative(VehicleState::from(x0 + 0.5 * dt * k1), u, g);
  const Eigen::Vector4d k3 = derivative(VehicleState::from(x0 + 0.5 * dt * k2), u, g);
  const Eigen::Vector4d k4 = derivative(VehicleState::from(x0 + dt * k3), u, g);
  return x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

VehicleState step(const VehicleState& state, const ControlInput& control,
                  const VehicleGeometry& geometry, double dt, double v_max) {
  return finish(rk4(state.vec(), control, geometry, dt), v_max);
}

LinearizedDynamics linearize_step(const VehicleState& state, const ControlInput& control,
                                  const VehicleGeometry& geometry, double dt, double v_max) {
  using Mat4 = Eigen::Matrix4d;
  using Mat42 = Eigen::Matrix<double, 4, 2>;
  const Mat4 eye = Mat4::Identity();

  // Chain rule through the four RK4 stages. Stage i is evaluated at
  // x0 + h_i * k_{i-1}, so d(stage point)/dx = I + h_i dk_{i-1}/dx.
  const Eigen::Vector4d x0 = state.vec();
  Mat4 fx;
  Mat42 fu;

  const Eigen::Vector4d k1 = derivative(state, control, geometry);
  derivative_jacobians(state, control, geometry, fx, fu);
  const Mat4 k1x = fx;
  const Mat42 k1u = fu;

  const VehicleState s2 = VehicleState::from(x0 + 0.5 * dt * k1);
  const Eigen::Vector4d k2 = derivative(s2, control, geometry);
  derivative_jacobians(s2, control, geometry, fx, fu);
  const Mat4 k2x = fx * (eye + 0.5 * dt * k1x);
  const Mat42 k2u = fx * (0.5 * dt * k1u) + fu;

  const VehicleState s3 = VehicleState::from(x0 + 0.5 * dt * k2);
  const Eigen::Vector4d k3 = derivative(s3, control, geometry);
  derivative_jacobians(s3, control, geometry, fx, fu);
  const Mat4 k3x = fx * (eye + 0.5 * dt * k2x);
  const Mat42 k3u = fx * (0.5 * dt * k2u) + fu;

  const VehicleState s4 = VehicleState::from(x0 + dt * k3);
  derivative_jacobians(s4, control, geometry, fx, fu);
  const Mat4 k4x = fx * (eye + dt * k3x);
  const Mat42 k4u = fx * (dt * k3u) + fu;
  (void)k2;
  (void)k3;

  LinearizedDynamics lin;
  lin.A = eye + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  lin.B = dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  const Eigen::Vector4d next = step(state, control, geometry, dt, v_max).vec();
  lin.c = next - lin.A * x0 - lin.B * control.vec();
  return lin;
}

std::vector<LinearizedDynamics> linearize(const Trajectory& reference, const VehicleGeometry& geometry,
                                          double dt, double v_max) {
  if (reference.states.size() != reference.controls.size() + 1) {
    throw LinearizationError("linearize: reference must hold N+1 states and N controls");
  }
  std::vector<LinearizedDynamics> out;
  out.reserve(reference.horizon());
  for (std::size_t k = 0; k < reference.horizon(); ++k) {
    const auto& x = reference.states[k];
    const auto& u = reference.controls[k];
    if (!x.finite() || !u.finite()) {
      throw LinearizationError("linearize: non-finite reference at step " + std::to_string(k));
    }
    out.push_back(linearize_step(x, u, geometry, dt, v_max));
  }
  if (!reference.states.back().finite()) {
    throw LinearizationError("linearize: non-finite terminal reference state");
  }
  return out;
}

Trajectory simulate(const VehicleState& initial, const std::vector<ControlInput>& controls,
                    const VehicleGeometry& geometry, double dt, double t0, double v_max) {
  Trajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.timestamps.reserve(controls.size() + 1);
  traj.states.push_back(initial);
  traj.timestamps.push_back(t0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    traj.states.push_back(step(traj.states.back(), controls[k], geometry, dt, v_max));
    traj.timestamps.push_back(t0 + static_cast<double>(k + 1) * dt);
  }
  return traj;
}

}  // namespace srmpc
