#pragma once

#include <span>

#include "srmpc/dynamics.hpp"

namespace srmpc {

// Energy-function safety index parameters.
//   phi = (sigma + d_min)^n - d^n - k * d_dot
struct SiParams {
  double sigma = 0.5;
  double n = 2.0;
  double k = 1.0;       // s
  double d_min = 6.0;   // m, vehicle length + 1 m for the default geometry
  double eta = 0.05;    // decay slack of the safe-control condition

  void validate() const;
  static SiParams for_geometry(const VehicleGeometry& geometry);
};

struct RelativeMotion {
  double d = 0.0;      // center distance, m
  double d_dot = 0.0;  // rate of change of d, m/s (negative when closing)
};

struct SafetySignal {
  double phi_s = 0.0;
  double phi_s_next = 0.0;
  double cost = 0.0;
  bool is_safe = true;  // phi_s <= 0
};

// Lower bound of the per-step cost.
inline constexpr double kCostFloor = -0.1;

// Velocity of the COG in global coordinates, heading-aligned.
Eigen::Vector2d velocity(const VehicleState& s);

// Two vehicles share a lane when their footprints overlap laterally.
bool same_lane(const VehicleState& ego, const VehicleState& other, const VehicleGeometry& geometry);

// Center distance and its rate. When the vehicles are not in the same lane the
// longitudinal velocity contribution to d_dot is dropped.
RelativeMotion relative_distance(const VehicleState& ego, const VehicleState& other,
                                 const VehicleGeometry& geometry);

double safety_index(double d, double d_dot, const SiParams& params);

// Worst-case (max) pairwise safety index over `others`. With no other vehicle
// the index of a stationary vehicle at `empty_range` is returned.
double safety_index(const VehicleState& ego, std::span<const VehicleState> others,
                    const VehicleGeometry& geometry, const SiParams& params,
                    double empty_range = 100.0);

// c(s,a) = max{ phi(s') - max{phi(s) - eta, 0}, -0.1 }
double si_cost(double phi_s, double phi_s_next, double eta);

// phi(s') < max{phi(s) - eta, 0}
bool is_safe_control(double phi_s, double phi_s_next, double eta);

SafetySignal make_safety_signal(double phi_s, double phi_s_next, double eta);

}  // namespace srmpc
