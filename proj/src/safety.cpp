#include "srmpc/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srmpc/error.hpp"

namespace srmpc {

void SiParams::validate() const {
  if (!(sigma > 0.0)) throw InvalidArgument("si: sigma must be positive");
  if (!(n >= 1.0)) throw InvalidArgument("si: exponent n must be >= 1");
  if (!(k > 0.0)) throw InvalidArgument("si: velocity gain k must be positive");
  if (!(d_min > 0.0)) throw InvalidArgument("si: d_min must be positive");
  if (!(eta > 0.0)) throw InvalidArgument("si: eta must be positive");
}

SiParams SiParams::for_geometry(const VehicleGeometry& geometry) {
  SiParams p;
  p.d_min = geometry.length + 1.0;
  return p;
}

Eigen::Vector2d velocity(const VehicleState& s) {
  return {s.v * std::cos(s.phi), s.v * std::sin(s.phi)};
}

bool same_lane(const VehicleState& ego, const VehicleState& other, const VehicleGeometry& geometry) {
  return std::abs(other.y - ego.y) < geometry.width;
}

RelativeMotion relative_distance(const VehicleState& ego, const VehicleState& other,
                                 const VehicleGeometry& geometry) {
  const Eigen::Vector2d dp{other.x - ego.x, other.y - ego.y};
  Eigen::Vector2d dv = velocity(other) - velocity(ego);
  if (!same_lane(ego, other, geometry)) dv.x() = 0.0;
  RelativeMotion out;
  out.d = dp.norm();
  out.d_dot = out.d > 0.0 ? dp.dot(dv) / out.d : 0.0;
  return out;
}

double safety_index(double d, double d_dot, const SiParams& params) {
  return std::pow(params.sigma + params.d_min, params.n) - std::pow(d, params.n) - params.k * d_dot;
}

double safety_index(const VehicleState& ego, std::span<const VehicleState> others,
                    const VehicleGeometry& geometry, const SiParams& params, double empty_range) {
  if (others.empty()) return safety_index(empty_range, 0.0, params);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& other : others) {
    const auto rel = relative_distance(ego, other, geometry);
    worst = std::max(worst, safety_index(rel.d, rel.d_dot, params));
  }
  return worst;
}

double si_cost(double phi_s, double phi_s_next, double eta) {
  return std::max(phi_s_next - std::max(phi_s - eta, 0.0), kCostFloor);
}

bool is_safe_control(double phi_s, double phi_s_next, double eta) {
  return phi_s_next < std::max(phi_s - eta, 0.0);
}

SafetySignal make_safety_signal(double phi_s, double phi_s_next, double eta) {
  return {phi_s, phi_s_next, si_cost(phi_s, phi_s_next, eta), phi_s <= 0.0};
}

}  // namespace srmpc
