#include "srmpc/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "srmpc/error.hpp"

namespace srmpc {

std::string_view to_string(TrafficDensity density) {
  return density == TrafficDensity::Light ? "light" : "dense";
}

TrafficDensity parse_density(std::string_view text) {
  if (text == "light") return TrafficDensity::Light;
  if (text == "dense") return TrafficDensity::Dense;
  throw ConfigError("unknown traffic density '" + std::string(text) + "' (expected light|dense)");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Running: return "running";
    case Termination::Collision: return "collision";
    case Termination::RoadExit: return "road-exit";
    case Termination::Goal: return "goal";
    case Termination::Timeout: return "timeout";
  }
  return "unknown";
}

Termination parse_termination(std::string_view text) {
  for (Termination t : {Termination::Running, Termination::Collision, Termination::RoadExit, Termination::Goal,
                        Termination::Timeout}) {
    if (to_string(t) == text) return t;
  }
  throw InvalidArgument("unknown termination '" + std::string(text) + "'");
}

double idm_acceleration(double v, double desired_speed, double gap, double leader_speed,
                        const IdmParams& p) {
  const double free_term = std::pow(v / std::max(desired_speed, 1e-3), p.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double s_star =
        p.s0 + std::max(0.0, v * p.time_headway + v * (v - leader_speed) / (2.0 * std::sqrt(p.a_max * p.b_comf)));
    const double s = std::max(gap, 0.1);
    interaction = (s_star / s) * (s_star / s);
  }
  const double acc = p.a_max * (1.0 - free_term - interaction);
  return std::max(acc, -p.decel_limit);
}

Scenario Scenario::light() {
  Scenario s;
  s.traffic_density = TrafficDensity::Light;
  s.spawn_spacing_mean = 25.0;
  return s;
}

Scenario Scenario::dense() {
  Scenario s;
  s.traffic_density = TrafficDensity::Dense;
  s.spawn_spacing_mean = 15.0;
  return s;
}

int Scenario::lane_of(double y) const {
  if (y < 0.0 || y > road_width()) return -1;
  return std::min(static_cast<int>(y / lane_width), lane_count - 1);
}

void Scenario::validate() const {
  if (lane_count != 3) throw ConfigError("scenario: the observation layout requires lane_count = 3");
  if (!(lane_width > geometry.width)) throw ConfigError("scenario: lane narrower than the vehicle");
  if (!(spawn_spacing_mean > geometry.length)) throw ConfigError("scenario: spawn spacing below vehicle length");
  if (!(spawn_speed_min >= 0.0 && spawn_speed_max >= spawn_speed_min)) {
    throw ConfigError("scenario: invalid spawn speed range");
  }
  if (max_steps <= 0 || max_steps > 400) throw ConfigError("scenario: max_steps must be in [1, 400]");
  if (!(dt > 0.0)) throw ConfigError("scenario: dt must be positive");
  if (!(reward_balance >= 0.0 && reward_balance <= 1.0)) throw ConfigError("scenario: g must be in [0, 1]");
  if (!(reward_scale > 0.0)) throw ConfigError("scenario: reward scale must be positive");
  geometry.validate();
  si.validate();
}

bool Observation::finite() const {
  for (const auto& row : neighbors) {
    if (!std::isfinite(row.dx) || !std::isfinite(row.dy) || !std::isfinite(row.dvx) || !std::isfinite(row.dvy)) {
      return false;
    }
  }
  return std::all_of(ego.begin(), ego.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> Observation::features(const Scenario& scenario) const {
  std::vector<double> f;
  f.reserve(kObservationFeatures);
  const double w = scenario.road_width();
  for (const auto& row : neighbors) {
    f.push_back(row.dx / scenario.sensing_range);
    f.push_back(row.dy / w);
    f.push_back(row.dvx / 10.0);
    f.push_back(row.dvy / 10.0);
  }
  f.push_back(ego[0] / scenario.v_ref - 1.0);
  f.push_back(ego[1] / 5.0);
  f.push_back(ego[2] / 0.5);
  f.push_back(ego[3] / w);
  f.push_back(ego[4] / w);
  f.push_back(ego[5] / w);
  return f;
}

Reward reward(const VehicleState& ego, const Scenario& scenario) {
  const double vx = ego.v * std::cos(ego.phi);
  const double g = scenario.reward_balance;
  const double dv = scenario.v_ref - vx;
  const double dy = scenario.y_ref - ego.y;
  Reward r;
  r.raw = -g * dv * dv - (1.0 - g) * dy * dy;
  r.normalized = std::exp(scenario.reward_scale * r.raw);
  return r;
}

Observation build_observation(const World& world, const Scenario& scenario) {
  Observation obs;
  const auto& ego = world.ego;
  const Eigen::Vector2d ego_vel = velocity(ego);

  std::array<double, kNeighborSlots> best;
  best.fill(std::numeric_limits<double>::infinity());
  for (int i = 0; i < static_cast<int>(world.traffic.size()); ++i) {
    const auto& veh = world.traffic[static_cast<std::size_t>(i)];
    if (veh.lane < 0 || veh.lane >= scenario.lane_count) continue;
    const double dx = veh.state.x - ego.x;
    if (std::abs(dx) > scenario.sensing_range) continue;
    const int slot = 2 * veh.lane + (dx >= 0.0 ? 0 : 1);
    if (std::abs(dx) < best[static_cast<std::size_t>(slot)]) {
      best[static_cast<std::size_t>(slot)] = std::abs(dx);
      obs.neighbors[static_cast<std::size_t>(slot)].vehicle = i;
    }
  }
  for (int slot = 0; slot < kNeighborSlots; ++slot) {
    auto& row = obs.neighbors[static_cast<std::size_t>(slot)];
    const int lane = slot / 2;
    if (row.present()) {
      const auto& other = world.traffic[static_cast<std::size_t>(row.vehicle)].state;
      const Eigen::Vector2d dv = velocity(other) - ego_vel;
      row.dx = other.x - ego.x;
      row.dy = other.y - ego.y;
      row.dvx = dv.x();
      row.dvy = dv.y();
    } else {
      row.dx = (slot % 2 == 0 ? 1.0 : -1.0) * scenario.sensing_range;
      row.dy = scenario.lane_center(lane) - ego.y;
      row.dvx = 0.0;
      row.dvy = 0.0;
    }
  }
  obs.ego = {ego_vel.x(),
             ego_vel.y(),
             ego.phi,
             0.0 - ego.y,
             scenario.road_width() - ego.y,
             scenario.y_ref - ego.y};
  return obs;
}

std::vector<VehicleState> observed_vehicles(const World& world, const Observation& obs) {
  std::vector<VehicleState> out;
  for (const auto& row : obs.neighbors) {
    if (row.present()) out.push_back(world.traffic[static_cast<std::size_t>(row.vehicle)].state);
  }
  return out;
}

namespace {

std::array<Eigen::Vector2d, 4> corners(const VehicleState& s, const VehicleGeometry& g) {
  const Eigen::Vector2d c{s.x, s.y};
  const Eigen::Vector2d fwd{std::cos(s.phi), std::sin(s.phi)};
  const Eigen::Vector2d left{-fwd.y(), fwd.x()};
  const double hl = 0.5 * g.length;
  const double hw = 0.5 * g.width;
  return {c + hl * fwd + hw * left, c + hl * fwd - hw * left, c - hl * fwd - hw * left,
          c - hl * fwd + hw * left};
}

}  // namespace

bool footprints_overlap(const VehicleState& a, const VehicleState& b, const VehicleGeometry& g) {
  const Eigen::Vector2d delta{b.x - a.x, b.y - a.y};
  const double hl = 0.5 * g.length;
  const double hw = 0.5 * g.width;
  const Eigen::Vector2d fa{std::cos(a.phi), std::sin(a.phi)};
  const Eigen::Vector2d fb{std::cos(b.phi), std::sin(b.phi)};
  const std::array<Eigen::Vector2d, 4> axes{fa, Eigen::Vector2d{-fa.y(), fa.x()}, fb,
                                            Eigen::Vector2d{-fb.y(), fb.x()}};
  for (const auto& axis : axes) {
    const double ra = hl * std::abs(fa.dot(axis)) + hw * std::abs(fa.y() * axis.x() - fa.x() * axis.y());
    const double rb = hl * std::abs(fb.dot(axis)) + hw * std::abs(fb.y() * axis.x() - fb.x() * axis.y());
    if (std::abs(delta.dot(axis)) >= ra + rb) return false;
  }
  return true;
}

bool ego_collides(const World& world, const Scenario& scenario) {
  const double reach = scenario.geometry.length + scenario.geometry.width;
  for (const auto& veh : world.traffic) {
    if (std::abs(veh.state.x - world.ego.x) > reach || std::abs(veh.state.y - world.ego.y) > reach) continue;
    if (footprints_overlap(world.ego, veh.state, scenario.geometry)) return true;
  }
  return false;
}

double road_departure(const VehicleState& ego, const Scenario& scenario) {
  double worst = 0.0;
  for (const auto& c : corners(ego, scenario.geometry)) {
    worst = std::max({worst, -c.y(), c.y() - scenario.road_width()});
  }
  return worst;
}

double observed_safety_index(const World& world, const Observation& obs, const Scenario& scenario) {
  const auto others = observed_vehicles(world, obs);
  return safety_index(world.ego, others, scenario.geometry, scenario.si, scenario.sensing_range);
}

World spawn_world(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> lane_dist(0, scenario.lane_count - 1);
  std::uniform_real_distribution<double> speed_dist(scenario.spawn_speed_min, scenario.spawn_speed_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gap_dist(scenario.spawn_spacing_mean,
                                            scenario.spawn_spacing_rel_std * scenario.spawn_spacing_mean);
  const double min_gap = scenario.geometry.length + 1.0;
  constexpr int kMaxRetries = 100;

  auto draw_gap = [&]() {
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      const double gap = gap_dist(rng);
      if (gap >= min_gap) return gap;
    }
    throw Error("spawn: could not draw a non-overlapping gap within the retry budget");
  };

  World world;
  const int ego_lane = lane_dist(rng);
  world.ego = {scenario.spawn_behind, scenario.lane_center(ego_lane), 0.0, speed_dist(rng)};

  const double front_limit = world.ego.x + scenario.spawn_ahead;
  const double rear_limit = world.ego.x - scenario.spawn_behind;
  for (int lane = 0; lane < scenario.lane_count; ++lane) {
    const double y = scenario.lane_center(lane);
    auto add = [&](double x) {
      TrafficVehicle veh;
      const double v = speed_dist(rng);
      veh.state = {x, y, 0.0, v};
      veh.desired_speed = v;
      veh.lane = lane;
      world.traffic.push_back(veh);
    };
    double anchor = world.ego.x;
    if (lane != ego_lane) {
      anchor += (unit(rng) - 0.5) * scenario.spawn_spacing_mean;
      add(anchor);
    }
    for (double x = anchor + draw_gap(); x <= front_limit; x += draw_gap()) add(x);
    for (double x = anchor - draw_gap(); x >= rear_limit; x -= draw_gap()) add(x);
  }

  // Every pair that could touch is checked, ego included.
  for (std::size_t i = 0; i < world.traffic.size(); ++i) {
    const auto& a = world.traffic[i].state;
    if (footprints_overlap(world.ego, a, scenario.geometry)) throw Error("spawn: vehicle overlaps the ego");
    for (std::size_t j = i + 1; j < world.traffic.size(); ++j) {
      const auto& b = world.traffic[j].state;
      if (std::abs(a.x - b.x) < scenario.geometry.length && footprints_overlap(a, b, scenario.geometry)) {
        throw Error("spawn: overlapping traffic vehicles");
      }
    }
  }
  return world;
}

HighwayEnv::HighwayEnv(Scenario scenario) : scenario_(std::move(scenario)) { scenario_.validate(); }

Observation HighwayEnv::reset(std::uint64_t seed) { return reset(spawn_world(scenario_, seed)); }

Observation HighwayEnv::reset(World world) {
  world_ = std::move(world);
  world_.step_count = 0;
  world_.last_control = {};
  observation_ = build_observation(world_, scenario_);
  phi_current_ = observed_safety_index(world_, observation_, scenario_);
  termination_ = Termination::Running;
  started_ = true;
  return observation_;
}

void HighwayEnv::advance_traffic(const VehicleState& ego_before) {
  const double dt = scenario_.dt;
  const double length = scenario_.geometry.length;
  const int ego_lane = scenario_.lane_of(ego_before.y);
  const double ego_speed = velocity(ego_before).x();

  std::vector<std::vector<std::size_t>> lanes(static_cast<std::size_t>(scenario_.lane_count));
  for (std::size_t i = 0; i < world_.traffic.size(); ++i) {
    const int lane = world_.traffic[i].lane;
    if (lane >= 0 && lane < scenario_.lane_count) lanes[static_cast<std::size_t>(lane)].push_back(i);
  }

  std::vector<double> acc(world_.traffic.size(), 0.0);
  for (int lane = 0; lane < scenario_.lane_count; ++lane) {
    auto& ids = lanes[static_cast<std::size_t>(lane)];
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      return world_.traffic[a].state.x < world_.traffic[b].state.x;
    });
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& veh = world_.traffic[ids[k]];
      double gap = std::numeric_limits<double>::infinity();
      double leader_speed = 0.0;
      if (k + 1 < ids.size()) {
        const auto& leader = world_.traffic[ids[k + 1]].state;
        gap = leader.x - veh.state.x - length;
        leader_speed = leader.v;
      }
      // The ego is a leader candidate once its center is inside this lane.
      if (ego_lane == lane && ego_before.x > veh.state.x) {
        const double ego_gap = ego_before.x - veh.state.x - length;
        if (ego_gap < gap) {
          gap = ego_gap;
          leader_speed = ego_speed;
        }
      }
      acc[ids[k]] = idm_acceleration(veh.state.v, veh.desired_speed, gap, leader_speed, scenario_.idm);
    }
  }

  for (std::size_t i = 0; i < world_.traffic.size(); ++i) {
    auto& s = world_.traffic[i].state;
    const double a = acc[i];
    const double v_next = s.v + a * dt;
    if (v_next < 0.0) {
      const double t_stop = s.v / -a;
      s.x += s.v * t_stop + 0.5 * a * t_stop * t_stop;
      s.v = 0.0;
    } else {
      s.x += s.v * dt + 0.5 * a * dt * dt;
      s.v = v_next;
    }
  }
}

StepOutcome HighwayEnv::step(const ControlInput& action) {
  if (!started_) throw UsageError("step called before reset");
  if (done()) throw UsageError("step called on a terminated episode");
  if (!action.finite()) throw InvalidArgument("step: non-finite action");

  const ControlInput u = scenario_.limits.clamp(action);
  const VehicleState ego_before = world_.ego;
  world_.ego = srmpc::step(ego_before, u, scenario_.geometry, scenario_.dt, scenario_.limits.v_max);
  advance_traffic(ego_before);
  world_.last_control = u;
  ++world_.step_count;

  StepOutcome out;
  observation_ = build_observation(world_, scenario_);
  out.observation = observation_;
  const Reward r = reward(world_.ego, scenario_);
  out.raw_reward = r.raw;
  out.reward = r.normalized;
  const double phi_next = observed_safety_index(world_, observation_, scenario_);
  out.safety = make_safety_signal(phi_current_, phi_next, scenario_.si.eta);
  phi_current_ = phi_next;

  if (ego_collides(world_, scenario_)) {
    termination_ = Termination::Collision;
  } else if (road_departure(world_.ego, scenario_) > 0.0) {
    termination_ = Termination::RoadExit;
  } else if (world_.ego.x >= scenario_.road_length) {
    termination_ = Termination::Goal;
  } else if (world_.step_count >= scenario_.max_steps) {
    termination_ = Termination::Timeout;
  }
  out.termination = termination_;
  return out;
}

}  // namespace srmpc
