#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srmpc/dynamics.hpp"
#include "srmpc/safety.hpp"

namespace srmpc {

enum class TrafficDensity { Light, Dense };

std::string_view to_string(TrafficDensity density);
TrafficDensity parse_density(std::string_view text);

// Intelligent Driver Model parameters for the non-ego traffic. The desired
// speed of each vehicle is its spawn speed.
struct IdmParams {
  double time_headway = 1.5;  // s
  double a_max = 1.5;         // m/s^2
  double b_comf = 2.0;        // m/s^2
  double s0 = 2.0;            // m
  double exponent = 4.0;
  double decel_limit = 9.0;   // physical braking limit, m/s^2
};

// IDM acceleration for a follower at speed v with a bumper gap to its leader.
// Pass gap = +inf for a free road.
double idm_acceleration(double v, double desired_speed, double gap, double leader_speed,
                        const IdmParams& params);

struct Scenario {
  int lane_count = 3;
  double lane_width = 4.0;        // m
  double road_length = 3000.0;    // m, reaching it ends the episode as goal
  TrafficDensity traffic_density = TrafficDensity::Light;
  double spawn_spacing_mean = 25.0;   // same-lane center spacing, m
  double spawn_spacing_rel_std = 0.3;
  double spawn_speed_min = 20.0;      // m/s
  double spawn_speed_max = 30.0;      // m/s
  double spawn_behind = 100.0;        // traffic filled this far behind the ego, m
  double spawn_ahead = 600.0;         // and this far ahead, m
  double v_ref = 25.0;                // m/s
  double y_ref = 2.0;                 // lateral center of the rightmost lane, m
  int max_steps = 400;
  std::uint64_t seed = 0;
  double dt = 0.1;                    // s
  double sensing_range = 100.0;       // m
  double reward_balance = 0.5;        // g
  double reward_scale = 0.1;          // r = exp(scale * r')

  VehicleGeometry geometry;
  ControlLimits limits;
  IdmParams idm;
  SiParams si = SiParams::for_geometry(VehicleGeometry{});

  static Scenario light();
  static Scenario dense();

  double road_width() const { return lane_width * lane_count; }
  // Lane 0 is the rightmost lane, centered at lane_width / 2.
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  // Lane whose bounds contain y, or -1 outside the road.
  int lane_of(double y) const;
  void validate() const;
};

struct TrafficVehicle {
  VehicleState state;
  double desired_speed = 0.0;
  int lane = 0;
};

struct World {
  VehicleState ego;
  ControlInput last_control;
  std::vector<TrafficVehicle> traffic;
  int step_count = 0;
};

inline constexpr int kNeighborSlots = 6;

// Slot layout: 2 * lane + {0: front, 1: rear}.
struct NeighborRow {
  double dx = 0.0;
  double dy = 0.0;
  double dvx = 0.0;
  double dvy = 0.0;
  int vehicle = -1;  // index into World::traffic, -1 for a sentinel row

  bool present() const { return vehicle >= 0; }
};

struct Observation {
  std::array<NeighborRow, kNeighborSlots> neighbors{};
  // v_x, v_y, phi, dy to right roadside, dy to left roadside, dy to target lane
  std::array<double, 6> ego{};

  bool finite() const;
  // Scaled flat feature vector (30 entries) fed to the networks.
  std::vector<double> features(const Scenario& scenario) const;
};

inline constexpr std::size_t kObservationFeatures = 4 * kNeighborSlots + 6;

enum class Termination { Running, Collision, RoadExit, Goal, Timeout };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view text);
// Collisions and road exits are the episode-level cost events.
inline bool is_failure(Termination t) { return t == Termination::Collision || t == Termination::RoadExit; }

struct StepOutcome {
  Observation observation;
  double reward = 0.0;      // r in (0, 1]
  double raw_reward = 0.0;  // r' <= 0
  SafetySignal safety;
  Termination termination = Termination::Running;

  bool done() const { return termination != Termination::Running; }
};

struct Reward {
  double raw = 0.0;
  double normalized = 0.0;
};

Reward reward(const VehicleState& ego, const Scenario& scenario);

// Nearest leader and follower per lane within sensing range, ego-relative.
Observation build_observation(const World& world, const Scenario& scenario);

// States of the vehicles present in the observation.
std::vector<VehicleState> observed_vehicles(const World& world, const Observation& obs);

// Oriented-rectangle overlap test (separating axis theorem).
bool footprints_overlap(const VehicleState& a, const VehicleState& b, const VehicleGeometry& geometry);

bool ego_collides(const World& world, const Scenario& scenario);
// Largest distance (m) by which the ego footprint lies outside the road; 0 if
// fully on the road.
double road_departure(const VehicleState& ego, const Scenario& scenario);

// Safety index of the ego w.r.t. the vehicles in an observation.
double observed_safety_index(const World& world, const Observation& obs, const Scenario& scenario);

// Three-lane highway with IDM traffic.
class HighwayEnv {
 public:
  explicit HighwayEnv(Scenario scenario);

  Observation reset(std::uint64_t seed);
  // Installs a hand-built world, e.g. for regression scenes.
  Observation reset(World world);

  StepOutcome step(const ControlInput& action);

  const World& world() const { return world_; }
  const Scenario& scenario() const { return scenario_; }
  const Observation& observation() const { return observation_; }
  Termination termination() const { return termination_; }
  bool done() const { return termination_ != Termination::Running; }

 private:
  void advance_traffic(const VehicleState& ego_before);

  Scenario scenario_;
  World world_;
  Observation observation_;
  double phi_current_ = 0.0;
  Termination termination_ = Termination::Running;
  bool started_ = false;
};

// Random initial world. Identical seeds give identical layouts. Throws Error
// if a non-overlapping layout cannot be found within the retry budget.
World spawn_world(const Scenario& scenario, std::uint64_t seed);

}  // namespace srmpc
