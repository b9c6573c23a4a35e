#include "srmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "srmpc/error.hpp"
#include "srmpc/qp_io.hpp"

namespace srmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Triplets = std::vector<Eigen::Triplet<double>>;

VehicleState translated(VehicleState s, double dx) {
  s.x += dx;
  return s;
}

// Superellipse norm and its gradient with respect to the circle center.
double superellipse_norm(const Eigen::Vector2d& delta, double heading, const EllipseAxes& axes, double p,
                         Eigen::Vector2d* grad) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double xi = c * delta.x() + s * delta.y();
  const double eta = -s * delta.x() + c * delta.y();
  const double fx = std::abs(xi) / axes.a;
  const double fy = std::abs(eta) / axes.b;
  const double sum = std::pow(fx, p) + std::pow(fy, p);
  const double norm = std::pow(sum, 1.0 / p);
  if (grad != nullptr) {
    Eigen::Vector2d local;
    if (norm < 1e-12) {
      // Undefined at the center; push sideways.
      local = {0.0, 1.0 / axes.b};
    } else {
      const double scale = std::pow(norm, 1.0 - p);
      local = {scale * std::pow(fx, p - 1.0) * (xi < 0 ? -1.0 : 1.0) / axes.a,
               scale * std::pow(fy, p - 1.0) * (eta < 0 ? -1.0 : 1.0) / axes.b};
    }
    *grad = {c * local.x() - s * local.y(), s * local.x() + c * local.y()};
  }
  return norm;
}

Eigen::Vector2d circle_center(const VehicleState& ego, double offset) {
  return {ego.x + offset * std::cos(ego.phi), ego.y + offset * std::sin(ego.phi)};
}

void check_reference(const Trajectory& reference, int horizon) {
  if (static_cast<int>(reference.controls.size()) != horizon ||
      static_cast<int>(reference.states.size()) != horizon + 1) {
    throw LinearizationError("reference length does not match the horizon");
  }
  for (const auto& s : reference.states) {
    if (!s.finite()) throw LinearizationError("non-finite reference state");
  }
  for (const auto& u : reference.controls) {
    if (!u.finite()) throw LinearizationError("non-finite reference control");
  }
}

}  // namespace

OcpConfig OcpConfig::for_scenario(const Scenario& scenario) {
  OcpConfig c;
  c.dt = scenario.dt;
  c.geometry = scenario.geometry;
  c.limits = scenario.limits;
  c.fit_road(scenario);
  const double third = scenario.geometry.length / 3.0;
  c.circle_offsets = {-third, 0.0, third};
  c.circle_radius = scenario.geometry.width / std::sqrt(2.0);
  c.qp.eps_abs = 1e-3;
  c.qp.eps_rel = 1e-3;
  return c;
}

void OcpConfig::fit_road(const Scenario& scenario) {
  // Keeps the footprint corners on the road at the heading bound.
  const double edge = 0.5 * geometry.width + 0.5 * geometry.length * std::sin(heading_max) + 0.1;
  y_min = edge;
  y_max = scenario.road_width() - edge;
}

EllipseAxes OcpConfig::hard_axes() const {
  // The superellipse through the rectangle corners, inflated by the circle.
  const double corner = std::pow(2.0, 1.0 / exponent);
  return {corner * 0.5 * geometry.length + circle_radius, corner * 0.5 * geometry.width + circle_radius};
}

EllipseAxes OcpConfig::soft_axes() const {
  const EllipseAxes h = hard_axes();
  return {h.a + safety_margin_ratio * h.b, h.b};
}

void OcpConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("mpc dt must be positive");
  if ((q.array() < 0.0).any() || (r.array() < 0.0).any() || (s.array() < 0.0).any()) {
    throw ConfigError("mpc weights must be nonnegative");
  }
  if (!(hard_slack_weight > 0.0) || !(soft_slack_weight > 0.0) || !(road_slack_weight > 0.0)) {
    throw ConfigError("slack weights must be positive");
  }
  if (!(y_min < y_max)) throw ConfigError("mpc y bounds are empty");
  if (!(heading_max > 0.0)) throw ConfigError("mpc heading bound must be positive");
  if (circle_offsets.empty() || !(circle_radius > 0.0)) throw ConfigError("ego circles are empty");
  if (!(exponent >= 2.0)) throw ConfigError("superellipse exponent must be >= 2");
  if (!(safety_margin_ratio >= 0.0)) throw ConfigError("safety margin must be nonnegative");
  if (!(activation_radius > 0.0)) throw ConfigError("activation radius must be positive");
  if (obstacle_slots < 0) throw ConfigError("obstacle slots must be nonnegative");
  if (fallback_after < 1) throw ConfigError("fallback_after must be >= 1");
  geometry.validate();
}

OcpLayout OcpLayout::for_config(const OcpConfig& config) {
  return {config.horizon, config.obstacle_slots, static_cast<int>(config.circle_offsets.size())};
}

std::vector<ObstaclePrediction> predict_obstacles(const World& world, const Observation& obs,
                                                  const Scenario& scenario, int horizon) {
  const double dt = scenario.dt;
  const int ego_lane = scenario.lane_of(world.ego.y);
  std::vector<ObstaclePrediction> out;
  for (int slot = 0; slot < kNeighborSlots; ++slot) {
    const NeighborRow& row = obs.neighbors[static_cast<std::size_t>(slot)];
    if (!row.present() || slot == 2 * ego_lane + 1) continue;
    const VehicleState& s = world.traffic[static_cast<std::size_t>(row.vehicle)].state;
    ObstaclePrediction p;
    p.slot = slot;
    p.states.reserve(static_cast<std::size_t>(horizon) + 1);
    for (int k = 0; k <= horizon; ++k) {
      p.states.push_back({s.x + s.v * k * dt, s.y, 0.0, s.v});
    }
    out.push_back(std::move(p));
  }
  return out;
}

double ellipse_value(const Eigen::Vector2d& delta, double obstacle_heading, const EllipseAxes& axes,
                     double exponent) {
  return std::pow(superellipse_norm(delta, obstacle_heading, axes, exponent, nullptr), exponent);
}

double circle_clearance(const VehicleState& ego, double offset, const VehicleState& obstacle,
                        const EllipseAxes& axes, double exponent) {
  const Eigen::Vector2d delta = circle_center(ego, offset) - Eigen::Vector2d(obstacle.x, obstacle.y);
  return superellipse_norm(delta, obstacle.phi, axes, exponent, nullptr);
}

Eigen::Vector3d circle_clearance_gradient(const VehicleState& ego, double offset,
                                          const VehicleState& obstacle, const EllipseAxes& axes,
                                          double exponent) {
  const Eigen::Vector2d delta = circle_center(ego, offset) - Eigen::Vector2d(obstacle.x, obstacle.y);
  Eigen::Vector2d g;
  superellipse_norm(delta, obstacle.phi, axes, exponent, &g);
  const double dcx = -offset * std::sin(ego.phi);
  const double dcy = offset * std::cos(ego.phi);
  return {g.x(), g.y(), g.x() * dcx + g.y() * dcy};
}

double QuadraticForm::value(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(H * z) + g.dot(z) + constant;
}

QuadraticForm tracking_objective(const std::vector<VehicleState>& x_ref, const ControlInput& last_control,
                                 const OcpConfig& config) {
  const OcpLayout L = OcpLayout::for_config(config);
  const int N = config.horizon;
  if (static_cast<int>(x_ref.size()) != N + 1) throw InvalidArgument("x_ref length must be horizon + 1");

  QuadraticForm f;
  f.g = Eigen::VectorXd::Zero(L.num_variables());
  Triplets t;
  // w * (z_i - target)^2
  auto square = [&](int i, double w, double target) {
    if (w == 0.0) return;
    t.emplace_back(i, i, 2.0 * w);
    f.g[i] -= 2.0 * w * target;
    f.constant += w * target * target;
  };
  for (int k = 0; k <= N; ++k) {
    const Eigen::Vector4d ref = x_ref[static_cast<std::size_t>(k)].vec();
    for (int i = 0; i < 4; ++i) square(L.state(k, i), config.q[i], ref[i]);
  }
  const Eigen::Vector2d u_prev = last_control.vec();
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < 2; ++i) {
      square(L.control(k, i), config.r[i], 0.0);
      const double w = config.s[i];
      if (w == 0.0) continue;
      if (k == 0) {
        square(L.control(0, i), w, u_prev[i]);
      } else {
        const int a = L.control(k, i);
        const int b = L.control(k - 1, i);
        t.emplace_back(a, a, 2.0 * w);
        t.emplace_back(b, b, 2.0 * w);
        t.emplace_back(a, b, -2.0 * w);
        t.emplace_back(b, a, -2.0 * w);
      }
    }
  }
  auto slack = [&](int i, double w) {
    t.emplace_back(i, i, 2.0 * w);
    f.g[i] += w;
  };
  for (int k = 1; k <= N; ++k) {
    for (int slot = 0; slot < L.slots; ++slot) {
      slack(L.hard_slack(slot, k), config.hard_slack_weight);
      slack(L.soft_slack(slot, k), config.soft_slack_weight);
    }
    slack(L.road_slack(k), config.road_slack_weight);
  }
  f.H.resize(L.num_variables(), L.num_variables());
  f.H.setFromTriplets(t.begin(), t.end());
  return f;
}

std::vector<CollisionRow> collision_rows(const Trajectory& reference,
                                         std::span<const ObstaclePrediction> obstacles,
                                         const OcpConfig& config) {
  const int N = config.horizon;
  check_reference(reference, N);
  const EllipseAxes tiers[2] = {config.hard_axes(), config.soft_axes()};
  std::vector<CollisionRow> rows;
  for (const auto& obstacle : obstacles) {
    if (obstacle.slot < 0 || obstacle.slot >= config.obstacle_slots) {
      throw InvalidArgument("obstacle slot out of range");
    }
    if (static_cast<int>(obstacle.states.size()) != N + 1) {
      throw InvalidArgument("obstacle prediction must cover the horizon");
    }
    for (int k = 1; k <= N; ++k) {
      const VehicleState& ego = reference.states[static_cast<std::size_t>(k)];
      const VehicleState& other = obstacle.states[static_cast<std::size_t>(k)];
      if (std::hypot(ego.x - other.x, ego.y - other.y) > config.activation_radius) continue;
      const Eigen::Vector3d xbar(ego.x, ego.y, ego.phi);
      for (int j = 0; j < static_cast<int>(config.circle_offsets.size()); ++j) {
        const double offset = config.circle_offsets[static_cast<std::size_t>(j)];
        for (int tier = 0; tier < 2; ++tier) {
          CollisionRow row;
          row.slot = obstacle.slot;
          row.step = k;
          row.circle = j;
          row.tier = tier;
          row.value = circle_clearance(ego, offset, other, tiers[tier], config.exponent);
          row.gradient = circle_clearance_gradient(ego, offset, other, tiers[tier], config.exponent);
          row.lower = 1.0 - row.value + row.gradient.dot(xbar);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

AssembledQp assemble_qp(const VehicleState& x_hat, const Trajectory& reference,
                        const std::vector<VehicleState>& x_ref,
                        std::span<const ObstaclePrediction> obstacles, const ControlInput& last_control,
                        const OcpConfig& config) {
  config.validate();
  const int N = config.horizon;
  if (!x_hat.finite()) throw LinearizationError("non-finite current state");
  check_reference(reference, N);

  AssembledQp out;
  out.layout = OcpLayout::for_config(config);
  out.origin_x = x_hat.x;
  const OcpLayout& L = out.layout;
  const double shift = -out.origin_x;

  Trajectory ref = reference;
  for (auto& s : ref.states) s.x += shift;
  std::vector<VehicleState> targets;
  targets.reserve(x_ref.size());
  for (const auto& s : x_ref) targets.push_back(translated(s, shift));
  std::vector<ObstaclePrediction> obs(obstacles.begin(), obstacles.end());
  for (auto& o : obs) {
    for (auto& s : o.states) s.x += shift;
  }
  const VehicleState x0 = translated(x_hat, shift);

  const std::vector<LinearizedDynamics> lin = linearize(ref, config.geometry, config.dt, config.limits.v_max);

  QuadraticForm f = tracking_objective(targets, last_control, config);
  out.objective_constant = f.constant;

  const int n = L.num_variables();
  const int m = L.num_constraints();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, -kInf);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(m, kInf);
  Triplets t;

  const Eigen::Vector4d x0v = x0.vec();
  for (int i = 0; i < 4; ++i) {
    t.emplace_back(L.init_row(i), L.state(0, i), 1.0);
    lo[L.init_row(i)] = hi[L.init_row(i)] = x0v[i];
  }
  for (int k = 0; k < N; ++k) {
    const LinearizedDynamics& d = lin[static_cast<std::size_t>(k)];
    for (int i = 0; i < 4; ++i) {
      const int row = L.dynamics_row(k, i);
      t.emplace_back(row, L.state(k + 1, i), 1.0);
      for (int j = 0; j < 4; ++j) {
        if (d.A(i, j) != 0.0) t.emplace_back(row, L.state(k, j), -d.A(i, j));
      }
      for (int j = 0; j < 2; ++j) {
        if (d.B(i, j) != 0.0) t.emplace_back(row, L.control(k, j), -d.B(i, j));
      }
      lo[row] = hi[row] = d.c[i];
    }
  }
  for (const CollisionRow& c : collision_rows(ref, obs, config)) {
    const int row = L.collision_row(c.slot, c.step, c.circle, c.tier);
    for (int i = 0; i < 3; ++i) {
      if (c.gradient[i] != 0.0) t.emplace_back(row, L.state(c.step, i), c.gradient[i]);
    }
    t.emplace_back(row, c.tier == 0 ? L.hard_slack(c.slot, c.step) : L.soft_slack(c.slot, c.step), 1.0);
    lo[row] = c.lower;
  }
  const ControlLimits& lim = config.limits;
  for (int k = 0; k < N; ++k) {
    t.emplace_back(L.control_row(k, 0), L.control(k, 0), 1.0);
    lo[L.control_row(k, 0)] = -lim.delta_max;
    hi[L.control_row(k, 0)] = lim.delta_max;
    t.emplace_back(L.control_row(k, 1), L.control(k, 1), 1.0);
    lo[L.control_row(k, 1)] = lim.a_min;
    hi[L.control_row(k, 1)] = lim.a_max;
  }
  for (int k = 1; k <= N; ++k) {
    t.emplace_back(L.speed_row(k), L.state(k, 3), 1.0);
    lo[L.speed_row(k)] = 0.0;
    hi[L.speed_row(k)] = lim.v_max;
    t.emplace_back(L.road_row(k, 0), L.state(k, 1), 1.0);
    t.emplace_back(L.road_row(k, 0), L.road_slack(k), 1.0);
    lo[L.road_row(k, 0)] = config.y_min;
    t.emplace_back(L.road_row(k, 1), L.state(k, 1), 1.0);
    t.emplace_back(L.road_row(k, 1), L.road_slack(k), -1.0);
    hi[L.road_row(k, 1)] = config.y_max;
    t.emplace_back(L.road_row(k, 2), L.state(k, 2), 1.0);
    t.emplace_back(L.road_row(k, 2), L.road_slack(k), 1.0);
    lo[L.road_row(k, 2)] = -config.heading_max;
    t.emplace_back(L.road_row(k, 3), L.state(k, 2), 1.0);
    t.emplace_back(L.road_row(k, 3), L.road_slack(k), -1.0);
    hi[L.road_row(k, 3)] = config.heading_max;
  }
  for (int j = 0; j < n - L.first_slack(); ++j) {
    t.emplace_back(L.slack_row(j), L.first_slack() + j, 1.0);
    lo[L.slack_row(j)] = 0.0;
  }

  out.problem.H = std::move(f.H);
  out.problem.g = std::move(f.g);
  out.problem.A.resize(m, n);
  out.problem.A.setFromTriplets(t.begin(), t.end());
  out.problem.l = std::move(lo);
  out.problem.u = std::move(hi);
  return out;
}

Trajectory extract_trajectory(const AssembledQp& qp, const Eigen::VectorXd& z) {
  const OcpLayout& L = qp.layout;
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(L.horizon) + 1);
  for (int k = 0; k <= L.horizon; ++k) {
    VehicleState s{z[L.state(k, 0)] + qp.origin_x, z[L.state(k, 1)], wrap_angle(z[L.state(k, 2)]),
                   z[L.state(k, 3)]};
    traj.states.push_back(s);
  }
  for (int k = 0; k < L.horizon; ++k) {
    traj.controls.push_back({z[L.control(k, 0)], z[L.control(k, 1)]});
  }
  return traj;
}

double max_slack(const OcpLayout& layout, const Eigen::VectorXd& z) {
  double worst = 0.0;
  for (int i = layout.first_slack(); i < layout.num_variables(); ++i) worst = std::max(worst, z[i]);
  return worst;
}

Trajectory shift_trajectory(const Trajectory& previous, const VehicleGeometry& geometry, double dt, double v_max) {
  previous.validate();
  if (previous.controls.empty()) throw InvalidArgument("cannot shift an empty trajectory");
  Trajectory out;
  out.states.assign(previous.states.begin() + 1, previous.states.end());
  out.controls.assign(previous.controls.begin() + 1, previous.controls.end());
  out.controls.push_back(previous.controls.back());
  out.states.push_back(step(previous.states.back(), previous.controls.back(), geometry, dt, v_max));
  if (!previous.timestamps.empty()) {
    out.timestamps.assign(previous.timestamps.begin() + 1, previous.timestamps.end());
    out.timestamps.push_back(previous.timestamps.back() + dt);
  }
  return out;
}

Trajectory constant_velocity_reference(const VehicleState& x_hat, int horizon, double dt, double t0) {
  Trajectory traj;
  for (int k = 0; k <= horizon; ++k) {
    const double s = x_hat.v * k * dt;
    traj.states.push_back({x_hat.x + s * std::cos(x_hat.phi), x_hat.y + s * std::sin(x_hat.phi), x_hat.phi, x_hat.v});
    traj.timestamps.push_back(t0 + k * dt);
  }
  traj.controls.assign(static_cast<std::size_t>(horizon), ControlInput{0.0, 0.0});
  return traj;
}

double lane_steering(const VehicleState& state, double target_y) {
  const double heading = std::clamp(0.06 * (target_y - state.y), -0.12, 0.12);
  return std::clamp(0.5 * (heading - state.phi), -0.1, 0.1);
}

Trajectory lane_change_reference(const VehicleState& x_hat, double target_y, int horizon,
                                 const VehicleGeometry& geometry, double dt, double t0) {
  Trajectory traj;
  traj.states.push_back(x_hat);
  traj.timestamps.push_back(t0);
  for (int k = 0; k < horizon; ++k) {
    const ControlInput u{lane_steering(traj.states.back(), target_y), 0.0};
    traj.controls.push_back(u);
    traj.states.push_back(step(traj.states.back(), u, geometry, dt));
    traj.timestamps.push_back(t0 + (k + 1) * dt);
  }
  return traj;
}

std::vector<VehicleState> tracking_targets(const VehicleState& x_hat, double y_ref, double v_ref, int horizon,
                                           double dt) {
  std::vector<VehicleState> out;
  for (int k = 0; k <= horizon; ++k) out.push_back({x_hat.x + v_ref * k * dt, y_ref, 0.0, v_ref});
  return out;
}

WarmStart shift_warm_start(const OcpLayout& L, const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  WarmStart w{z, y};
  const int N = L.horizon;
  // Moves the value at index(k + 1) to index(k); the last step keeps its value.
  auto shift = [](Eigen::VectorXd& v, const Eigen::VectorXd& src, int first, int last, auto index) {
    for (int k = first; k < last; ++k) v[index(k)] = src[index(k + 1)];
  };
  for (int i = 0; i < 4; ++i) shift(w.z, z, 0, N, [&](int k) { return L.state(k, i); });
  for (int i = 0; i < 2; ++i) shift(w.z, z, 0, N - 1, [&](int k) { return L.control(k, i); });
  for (int slot = 0; slot < L.slots; ++slot) {
    shift(w.z, z, 1, N, [&](int k) { return L.hard_slack(slot, k); });
    shift(w.z, z, 1, N, [&](int k) { return L.soft_slack(slot, k); });
    for (int c = 0; c < L.circles; ++c) {
      for (int tier = 0; tier < 2; ++tier) {
        shift(w.y, y, 1, N, [&](int k) { return L.collision_row(slot, k, c, tier); });
      }
    }
  }
  shift(w.z, z, 1, N, [&](int k) { return L.road_slack(k); });
  for (int i = 0; i < 4; ++i) shift(w.y, y, 0, N - 1, [&](int k) { return L.dynamics_row(k, i); });
  for (int i = 0; i < 2; ++i) shift(w.y, y, 0, N - 1, [&](int k) { return L.control_row(k, i); });
  shift(w.y, y, 1, N, [&](int k) { return L.speed_row(k); });
  for (int side = 0; side < 4; ++side) shift(w.y, y, 1, N, [&](int k) { return L.road_row(k, side); });
  const int slack_count = L.num_variables() - L.first_slack();
  for (int j = 0; j < slack_count; ++j) w.y[L.slack_row(j)] = 0.0;
  return w;
}

MpcController::MpcController(OcpConfig config, double y_ref, double v_ref)
    : config_(std::move(config)), y_ref_(y_ref), v_ref_(v_ref) {
  config_.validate();
}

void MpcController::reset() {
  previous_.reset();
  warm_.reset();
  last_control_ = {};
  failures_ = 0;
}

Trajectory MpcController::default_reference(const VehicleState& x_hat, double t0) const {
  if (!previous_) return constant_velocity_reference(x_hat, config_.horizon, config_.dt, t0);
  return shift_trajectory(*previous_, config_.geometry, config_.dt, config_.limits.v_max);
}

MpcStep MpcController::step(const VehicleState& x_hat, std::span<const ObstaclePrediction> obstacles, double t0) {
  return step(x_hat, default_reference(x_hat, t0), obstacles, t0);
}

MpcStep MpcController::step(const VehicleState& x_hat, const Trajectory& reference,
                            std::span<const ObstaclePrediction> obstacles, double t0) {
  MpcStep result;
  result.reference = reference;
  AssembledQp qp;
  try {
    qp = assemble_qp(x_hat, reference, tracking_targets(x_hat, y_ref_, v_ref_, config_.horizon, config_.dt),
                     obstacles, last_control_, config_);
  } catch (const LinearizationError&) {
    ++failures_;
    result.solver_failed = true;
    return brake(x_hat, std::move(result), t0);
  }
  qp.t0 = t0;

  const QpSolution sol = solve(qp.problem, config_.qp, warm_);
  if (!config_.dump_dir.empty()) {
    const auto path = std::filesystem::path(config_.dump_dir) / ("qp_" + std::to_string(dump_index_++) + ".json");
    save_qp(path, qp.problem, &sol);
  }
  result.status = sol.status;
  result.iterations = sol.iterations;
  result.solver_failed = sol.status != QpStatus::Solved;
  const bool usable = sol.z.allFinite() &&
                      (sol.status == QpStatus::Solved || sol.status == QpStatus::MaxIterations);
  failures_ = result.solver_failed ? failures_ + 1 : 0;
  if (!usable || failures_ >= config_.fallback_after) return brake(x_hat, std::move(result), t0);

  result.solution = extract_trajectory(qp, sol.z);
  for (int k = 0; k <= config_.horizon; ++k) result.solution.timestamps.push_back(t0 + k * config_.dt);
  result.control = config_.limits.clamp(result.solution.controls.front());
  result.max_slack = max_slack(qp.layout, sol.z);
  previous_ = result.solution;
  warm_ = shift_warm_start(qp.layout, sol.z, sol.y);
  last_control_ = result.control;
  return result;
}

MpcStep MpcController::brake(const VehicleState& x_hat, MpcStep result, double t0) {
  result.braking = true;
  result.control = config_.braking;
  result.solution = simulate(x_hat, std::vector<ControlInput>(static_cast<std::size_t>(config_.horizon), config_.braking),
                             config_.geometry, config_.dt, t0, config_.limits.v_max);
  previous_ = result.solution;
  warm_.reset();
  last_control_ = result.control;
  return result;
}

}  // namespace srmpc
