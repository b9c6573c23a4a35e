#include "srmpc/episode.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "srmpc/checkpoint.hpp"
#include "srmpc/error.hpp"
#include "srmpc/io.hpp"

namespace srmpc {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kControllerNames{"mpc", "ppo", "ppo-l-si", "srmpc"};

json step_to_json(const TraceStep& s) {
  return {{"step", s.step},
          {"state", {{"x", s.state.x}, {"y", s.state.y}, {"phi", s.state.phi}, {"v", s.state.v}}},
          {"u", {{"delta", s.control.delta}, {"a", s.control.a}}},
          {"provenance", to_string(s.provenance)},
          {"r_raw", s.raw_reward},
          {"cost", s.cost},
          {"safety_index", s.safety_index},
          {"qp_iterations", s.qp_iterations},
          {"termination", to_string(s.termination)}};
}

TraceStep step_from_json(const json& j) {
  TraceStep s;
  s.step = j.at("step");
  const json& st = j.at("state");
  s.state = {st.at("x"), st.at("y"), st.at("phi"), st.at("v")};
  s.control = {j.at("u").at("delta"), j.at("u").at("a")};
  s.provenance = parse_provenance(j.at("provenance").get<std::string>());
  s.raw_reward = j.at("r_raw");
  s.cost = j.at("cost");
  s.safety_index = j.at("safety_index");
  s.qp_iterations = j.at("qp_iterations");
  s.termination = parse_termination(j.at("termination").get<std::string>());
  return s;
}

}  // namespace

std::string_view to_string(ControllerKind k) { return kControllerNames[static_cast<std::size_t>(k)]; }

ControllerKind parse_controller(std::string_view text) {
  for (std::size_t i = 0; i < kControllerNames.size(); ++i) {
    if (kControllerNames[i] == text) return static_cast<ControllerKind>(i);
  }
  throw ConfigError("unknown controller '" + std::string(text) + "' (expected mpc|ppo|ppo-l-si|srmpc)");
}

bool needs_policy(ControllerKind k) { return k != ControllerKind::Mpc; }

std::shared_ptr<const DrivingPolicy> load_driving_policy(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
  try {
    return std::make_shared<LearnedDrivingPolicy>(load_checkpoint(checkpoint).agent.policy);
  } catch (const InvalidArgument& e) {
    throw ConfigError("unusable checkpoint " + checkpoint.string() + ": " + e.what());
  }
}

EpisodeMetrics compute_metrics(std::span<const TraceStep> trace, int max_steps) {
  if (trace.empty()) throw InvalidArgument("trace has no steps");
  if (static_cast<int>(trace.size()) > max_steps) throw InvalidArgument("trace longer than the step limit");
  EpisodeMetrics m;
  double vx = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const TraceStep& s = trace[k];
    if (s.step != static_cast<int>(k)) throw InvalidArgument("trace steps out of order");
    const bool last = k + 1 == trace.size();
    if (last == (s.termination == Termination::Running)) {
      throw InvalidArgument(last ? "trace ends before the episode terminated" : "trace continues after termination");
    }
    if (!std::isfinite(s.raw_reward)) throw InvalidArgument("non-finite reward in trace");
    m.episodic_return += s.raw_reward;
    vx += s.state.v * std::cos(s.state.phi);
  }
  m.n_steps = static_cast<int>(trace.size());
  m.termination = trace.back().termination;
  m.episodic_cost = is_failure(m.termination) ? 1.0 : 0.0;
  m.return_per_step = m.episodic_return / m.n_steps;
  m.mean_vx = vx / m.n_steps;
  return m;
}

EpisodeRecord run_episode(const ControllerSpec& controller, const Scenario& scenario, const OcpConfig& ocp,
                          std::uint64_t seed) {
  if (needs_policy(controller.kind) && !controller.policy) {
    throw ConfigError(std::string(to_string(controller.kind)) + " needs a policy checkpoint");
  }
  EpisodeRecord rec;
  rec.controller = controller.kind;
  rec.seed = seed;
  rec.density = scenario.traffic_density;
  rec.max_steps = scenario.max_steps;

  HighwayEnv env(scenario);
  std::unique_ptr<MpcController> mpc;
  std::unique_ptr<SrmpcController> srmpc;
  if (controller.kind == ControllerKind::Mpc) mpc = std::make_unique<MpcController>(ocp, scenario.y_ref, scenario.v_ref);
  if (controller.kind == ControllerKind::Srmpc) srmpc = std::make_unique<SrmpcController>(ocp, scenario, controller.policy);

  try {
    env.reset(spawn_world(scenario, seed));
    while (!env.done()) {
      TraceStep s;
      s.step = env.world().step_count;
      s.state = env.world().ego;
      const double t0 = s.step * scenario.dt;
      ControlInput u;
      switch (controller.kind) {
        case ControllerKind::Mpc: {
          const MpcStep r = mpc->step(s.state, predict_obstacles(env.world(), env.observation(), scenario, ocp.horizon), t0);
          u = r.control;
          s.provenance = r.braking ? Provenance::BrakingFallback : Provenance::ShiftedReference;
          s.qp_iterations = r.iterations;
          break;
        }
        case ControllerKind::Srmpc: {
          const SrmpcStep r = srmpc->step(env.world(), env.observation(), t0);
          u = r.control;
          s.provenance = r.provenance;
          s.qp_iterations = r.mpc.iterations;
          break;
        }
        case ControllerKind::Ppo:
        case ControllerKind::PpoLagrangian:
          u = controller.policy->act(env.world(), env.observation(), scenario);
          s.provenance = Provenance::PolicyAction;
          break;
      }
      const StepOutcome out = env.step(u);
      s.control = env.world().last_control;
      s.raw_reward = out.raw_reward;
      s.cost = out.safety.cost;
      s.safety_index = out.safety.phi_s_next;
      s.termination = out.termination;
      rec.trace.push_back(s);
    }
    rec.metrics = compute_metrics(rec.trace, rec.max_steps);
  } catch (const std::exception& e) {
    rec.error = e.what();
    spdlog::warn("{} episode seed {} aborted: {}", to_string(controller.kind), seed, rec.error);
  }
  return rec;
}

std::string trace_jsonl(const EpisodeRecord& record) {
  json header{{"schema", kTraceSchema},
              {"controller", to_string(record.controller)},
              {"seed", record.seed},
              {"density", to_string(record.density)},
              {"max_steps", record.max_steps}};
  if (!record.ok()) header["error"] = record.error;
  std::string out = header.dump() + "\n";
  for (const auto& s : record.trace) out += step_to_json(s).dump() + "\n";
  return out;
}

void write_trace(const std::filesystem::path& path, const EpisodeRecord& record) {
  write_file_atomic(path, trace_jsonl(record));
}

EpisodeRecord parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  EpisodeRecord rec;
  bool header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!header) {
        if (j.value("schema", "") != kTraceSchema) throw InvalidArgument("not a trace file");
        rec.controller = parse_controller(j.at("controller").get<std::string>());
        rec.seed = j.at("seed");
        rec.density = parse_density(j.at("density").get<std::string>());
        rec.max_steps = j.at("max_steps");
        rec.error = j.value("error", "");
        header = true;
        continue;
      }
      rec.trace.push_back(step_from_json(j));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed trace: ") + e.what());
  } catch (const ConfigError& e) {
    throw InvalidArgument(std::string("malformed trace: ") + e.what());
  }
  if (!header) throw InvalidArgument("empty trace file");
  if (rec.ok()) rec.metrics = compute_metrics(rec.trace, rec.max_steps);
  return rec;
}

EpisodeRecord read_trace(const std::filesystem::path& path) { return parse_trace(read_file(path)); }

json metrics_to_json(const EpisodeMetrics& m) {
  return {{"J_r", m.episodic_return},     {"J_r_per_step", m.return_per_step}, {"J_c", m.episodic_cost},
          {"n_steps", m.n_steps},         {"mean_vx", m.mean_vx},              {"termination", to_string(m.termination)}};
}

}  // namespace srmpc
