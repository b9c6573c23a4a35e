#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "srmpc/dynamics.hpp"
#include "srmpc/qp.hpp"
#include "srmpc/traffic.hpp"

namespace srmpc {

struct EllipseAxes {
  double a = 1.0;  // longitudinal semi-axis, m
  double b = 1.0;  // lateral semi-axis, m
};

struct OcpConfig {
  int horizon = 25;
  double dt = 0.1;

  // Diagonal weights over (x, y, phi, v) and (delta, a).
  Eigen::Vector4d q{0.0, 0.5, 1.0, 1.0};
  Eigen::Vector2d r{10.0, 1.0};
  Eigen::Vector2d s{50.0, 5.0};

  // Each slack costs w * (s + s^2).
  double hard_slack_weight = 1e4;
  double soft_slack_weight = 1e2;
  double road_slack_weight = 1e4;

  VehicleGeometry geometry;
  ControlLimits limits;
  double y_min = 1.35;  // ego center, m
  double y_max = 10.65;
  double heading_max = 0.1;  // rad, shares the road slack

  // Ego body covered by circles centered on the body axis.
  std::vector<double> circle_offsets{-5.0 / 3.0, 0.0, 5.0 / 3.0};
  double circle_radius = 1.4142135623730951;
  // Superellipse exponent of the obstacle shape.
  double exponent = 2.0;
  // Soft safety region: the longitudinal semi-axis grows by this fraction of
  // the lateral one.
  double safety_margin_ratio = 0.5;
  // Obstacle constraints whose reference distance exceeds this are dropped.
  double activation_radius = 40.0;
  int obstacle_slots = kNeighborSlots;

  // Consecutive solver failures before the braking fallback takes over.
  int fallback_after = 3;
  ControlInput braking{0.0, -3.0};

  QpSettings qp;
  // Per-step QP dumps are written here when non-empty.
  std::string dump_dir;

  static OcpConfig for_scenario(const Scenario& scenario);
  // Lateral bounds that keep the footprint on the road at heading_max.
  void fit_road(const Scenario& scenario);

  // Obstacle shape inflated by the ego circle radius.
  EllipseAxes hard_axes() const;
  EllipseAxes soft_axes() const;
  void validate() const;
};

// Predicted states of one observed vehicle; states[k] is at time k * dt.
struct ObstaclePrediction {
  int slot = 0;
  std::vector<VehicleState> states;
};

// Constant-velocity, lane-locked prediction of the observed vehicles. The
// follower in the ego's own lane is left out: it brakes for the ego, while a
// constant-velocity forecast would have it drive through.
std::vector<ObstaclePrediction> predict_obstacles(const World& world, const Observation& obs,
                                                  const Scenario& scenario, int horizon);

// Quadratic superellipse form in the obstacle frame; 1 on the boundary.
double ellipse_value(const Eigen::Vector2d& delta, double obstacle_heading, const EllipseAxes& axes,
                     double exponent);

// Superellipse norm of one ego circle center relative to an obstacle; >= 1
// means the circle is clear.
double circle_clearance(const VehicleState& ego, double offset, const VehicleState& obstacle,
                        const EllipseAxes& axes, double exponent);

// Gradient of circle_clearance with respect to (x, y, phi) of the ego.
Eigen::Vector3d circle_clearance_gradient(const VehicleState& ego, double offset,
                                          const VehicleState& obstacle, const EllipseAxes& axes,
                                          double exponent);

// Index map of the decision vector and constraint rows.
//
// z = [x_0..x_N (4 each), u_0..u_{N-1} (2 each), hard slacks, soft slacks,
//      road slacks], with one hard and one soft slack per (slot, step) for
//      steps 1..N and one road slack per step 1..N.
struct OcpLayout {
  int horizon = 0;
  int slots = 0;
  int circles = 0;

  int num_states() const { return 4 * (horizon + 1); }
  int num_controls() const { return 2 * horizon; }
  int num_variables() const { return num_states() + num_controls() + (2 * slots + 1) * horizon; }

  int state(int k, int i) const { return 4 * k + i; }
  int control(int k, int i) const { return num_states() + 2 * k + i; }
  int hard_slack(int slot, int k) const { return num_states() + num_controls() + slot * horizon + (k - 1); }
  int soft_slack(int slot, int k) const { return hard_slack(slots, 1) + slot * horizon + (k - 1); }
  int road_slack(int k) const { return hard_slack(2 * slots, 1) + (k - 1); }
  int first_slack() const { return hard_slack(0, 1); }

  // Rows: initial state (4), dynamics (4N), collision (slots*N*circles*2),
  // control box (2N), speed box (N), road and heading bounds (4N), slack
  // bounds.
  int init_row(int i) const { return i; }
  int dynamics_row(int k, int i) const { return 4 + 4 * k + i; }
  int collision_row(int slot, int k, int circle, int tier) const {
    return 4 + 4 * horizon + (((slot * horizon + (k - 1)) * circles + circle) * 2 + tier);
  }
  int control_row(int k, int i) const { return 4 + 4 * horizon + slots * horizon * circles * 2 + 2 * k + i; }
  int speed_row(int k) const { return control_row(horizon, 0) + (k - 1); }
  // side 0/1: lower/upper lateral bound, 2/3: lower/upper heading bound.
  int road_row(int k, int side) const { return speed_row(horizon + 1) + 4 * (k - 1) + side; }
  int slack_row(int j) const { return road_row(horizon + 1, 0) + j; }
  int num_constraints() const { return slack_row((2 * slots + 1) * horizon); }

  static OcpLayout for_config(const OcpConfig& config);
};

struct QuadraticForm {
  SparseMatrix H;
  Eigen::VectorXd g;
  double constant = 0.0;

  double value(const Eigen::VectorXd& z) const;
};

// Tracking cost of states against x_ref, control effort, control rate
// (including the step from the last applied control) and slack penalties, as
// 0.5 z'Hz + g'z + constant.
QuadraticForm tracking_objective(const std::vector<VehicleState>& x_ref,
                                 const ControlInput& last_control, const OcpConfig& config);

// One linearized obstacle constraint: gradient . (x, y, phi)_k + slack >= lower.
struct CollisionRow {
  int slot = 0;
  int step = 0;
  int circle = 0;
  int tier = 0;  // 0 hard, 1 soft safety region
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  double lower = 0.0;
  double value = 0.0;  // clearance at the reference
};

// Rows active within the activation radius, linearized at the reference.
std::vector<CollisionRow> collision_rows(const Trajectory& reference,
                                         std::span<const ObstaclePrediction> obstacles,
                                         const OcpConfig& config);

struct AssembledQp {
  QpProblem problem;
  OcpLayout layout;
  // x positions in the QP are relative to this origin.
  double origin_x = 0.0;
  double objective_constant = 0.0;
  double t0 = 0.0;
};

// Throws LinearizationError on a malformed reference.
AssembledQp assemble_qp(const VehicleState& x_hat, const Trajectory& reference,
                        const std::vector<VehicleState>& x_ref,
                        std::span<const ObstaclePrediction> obstacles,
                        const ControlInput& last_control, const OcpConfig& config);

// Trajectory in world coordinates from a QP primal vector.
Trajectory extract_trajectory(const AssembledQp& qp, const Eigen::VectorXd& z);

// Largest slack value in a QP primal vector.
double max_slack(const OcpLayout& layout, const Eigen::VectorXd& z);

// Drops the first state and control, repeats the last control and appends
// the forward-simulated state.
Trajectory shift_trajectory(const Trajectory& previous, const VehicleGeometry& geometry, double dt,
                            double v_max = 40.0);

// Zero-control trajectory holding the current speed and heading.
Trajectory constant_velocity_reference(const VehicleState& x_hat, int horizon, double dt, double t0 = 0.0);

// Heading-cascade steering law that settles the ego on target_y.
double lane_steering(const VehicleState& state, double target_y);

// Trajectory steering towards target_y at constant speed.
Trajectory lane_change_reference(const VehicleState& x_hat, double target_y, int horizon,
                                 const VehicleGeometry& geometry, double dt, double t0 = 0.0);

// Lane and speed targets for the tracking cost.
std::vector<VehicleState> tracking_targets(const VehicleState& x_hat, double y_ref, double v_ref,
                                           int horizon, double dt);

struct MpcStep {
  ControlInput control;
  Trajectory reference;
  Trajectory solution;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double max_slack = 0.0;
  bool solver_failed = false;
  bool braking = false;
};

// Receding-horizon LTV-MPC. Keeps the previous solution for trajectory
// shifting and the previous QP iterate for warm starting.
class MpcController {
 public:
  MpcController(OcpConfig config, double y_ref, double v_ref);

  void reset();

  // Shifted previous solution, or the constant-velocity trajectory when no
  // solution exists yet.
  Trajectory default_reference(const VehicleState& x_hat, double t0 = 0.0) const;

  // Linearizes about the given reference.
  MpcStep step(const VehicleState& x_hat, const Trajectory& reference,
               std::span<const ObstaclePrediction> obstacles, double t0 = 0.0);
  // Linearizes about default_reference.
  MpcStep step(const VehicleState& x_hat, std::span<const ObstaclePrediction> obstacles,
               double t0 = 0.0);

  const OcpConfig& config() const { return config_; }
  const std::optional<Trajectory>& previous_solution() const { return previous_; }
  int consecutive_failures() const { return failures_; }

 private:
  MpcStep brake(const VehicleState& x_hat, MpcStep result, double t0);

  OcpConfig config_;
  double y_ref_;
  double v_ref_;
  std::optional<Trajectory> previous_;
  std::optional<WarmStart> warm_;
  ControlInput last_control_;
  int failures_ = 0;
  long dump_index_ = 0;
};

// Shifts a QP iterate of the layout one step forward in time.
WarmStart shift_warm_start(const OcpLayout& layout, const Eigen::VectorXd& z, const Eigen::VectorXd& y);

}  // namespace srmpc
