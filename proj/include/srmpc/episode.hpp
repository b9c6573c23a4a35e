#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "srmpc/learner.hpp"
#include "srmpc/mpc.hpp"
#include "srmpc/srmpc.hpp"

namespace srmpc {

inline constexpr const char* kTraceSchema = "srmpc.trace/1";

enum class ControllerKind { Mpc, Ppo, PpoLagrangian, Srmpc };

std::string_view to_string(ControllerKind k);
// "mpc", "ppo", "ppo-l-si" or "srmpc".
ControllerKind parse_controller(std::string_view text);
// Learned controllers and srmpc need a policy.
bool needs_policy(ControllerKind k);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Mpc;
  std::shared_ptr<const DrivingPolicy> policy;
};

// Mean-action policy of a training checkpoint. Throws ConfigError when the
// file is missing or not a checkpoint.
std::shared_ptr<const DrivingPolicy> load_driving_policy(const std::filesystem::path& checkpoint);

// One control step. `state` is the ego before the step; reward, cost and
// safety index belong to the transition into the next state.
struct TraceStep {
  int step = 0;
  VehicleState state;
  ControlInput control;  // as applied, after clamping
  Provenance provenance = Provenance::ShiftedReference;
  double raw_reward = 0.0;
  double cost = 0.0;
  double safety_index = 0.0;
  int qp_iterations = 0;
  Termination termination = Termination::Running;
};

struct EpisodeMetrics {
  double episodic_return = 0.0;  // sum of r'
  double return_per_step = 0.0;
  double episodic_cost = 0.0;    // 1 after a collision or road exit
  int n_steps = 0;
  double mean_vx = 0.0;          // over the states the controller acted in
  Termination termination = Termination::Running;
};

// Throws InvalidArgument unless the trace is a complete episode: steps
// numbered from 0, only the last step terminating, at most max_steps long.
EpisodeMetrics compute_metrics(std::span<const TraceStep> trace, int max_steps);

struct EpisodeRecord {
  ControllerKind controller = ControllerKind::Mpc;
  std::uint64_t seed = 0;
  TrafficDensity density = TrafficDensity::Light;
  int max_steps = 0;
  std::vector<TraceStep> trace;
  EpisodeMetrics metrics;
  // Set when the episode aborted; metrics are then not meaningful.
  std::string error;

  bool ok() const { return error.empty(); }
};

// Simulates one episode from spawn_world(scenario, seed). Throws ConfigError
// before any stepping when the controller needs a policy and has none.
// Errors raised while stepping are caught and recorded in the result.
EpisodeRecord run_episode(const ControllerSpec& controller, const Scenario& scenario, const OcpConfig& ocp,
                          std::uint64_t seed);

// JSON-lines: a header object followed by one object per step.
std::string trace_jsonl(const EpisodeRecord& record);
void write_trace(const std::filesystem::path& path, const EpisodeRecord& record);
// Parses a trace and recomputes its metrics.
EpisodeRecord parse_trace(std::string_view text);
EpisodeRecord read_trace(const std::filesystem::path& path);

nlohmann::json metrics_to_json(const EpisodeMetrics& m);

}  // namespace srmpc
