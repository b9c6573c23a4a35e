#include "srmpc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "srmpc/error.hpp"
#include "srmpc/io.hpp"

namespace srmpc {

using nlohmann::json;

std::vector<double> running_mean(std::span<const double> series, int window) {
  if (window < 1) throw InvalidArgument("running_mean: window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - static_cast<std::size_t>(window)];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

double cost_rate(std::span<const EpisodeRecord> records) {
  double costs = 0.0;
  double steps = 0.0;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    costs += r.metrics.episodic_cost;
    steps += r.metrics.n_steps;
  }
  return steps > 0.0 ? costs / steps : 0.0;
}

AggregateRow aggregate(std::span<const EpisodeRecord> records) {
  AggregateRow row;
  if (records.empty()) return row;
  row.controller = records.front().controller;
  row.density = records.front().density;
  for (const auto& r : records) {
    if (r.controller != row.controller || r.density != row.density) {
      throw InvalidArgument("aggregate: records of different controllers or densities");
    }
    if (!r.ok()) {
      ++row.aborted;
      continue;
    }
    ++row.episodes;
    row.episodic_return += r.metrics.episodic_return;
    row.return_per_step += r.metrics.return_per_step;
    row.episodic_cost += r.metrics.episodic_cost;
    row.n_steps += r.metrics.n_steps;
    row.mean_vx += r.metrics.mean_vx;
  }
  if (row.episodes > 0) {
    const double n = row.episodes;
    row.episodic_return /= n;
    row.return_per_step /= n;
    row.episodic_cost /= n;
    row.n_steps /= n;
    row.mean_vx /= n;
  }
  row.cost_rate = cost_rate(records);
  return row;
}

std::uint64_t episode_seed(std::uint64_t base_seed, int k) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(k)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

AggregateReport evaluate(const EvaluationRequest& request) {
  if (request.episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  if (request.workers < 1) throw ConfigError("evaluate: workers must be >= 1");
  if (request.controllers.empty()) throw ConfigError("evaluate: no controllers");
  for (const auto& c : request.controllers) {
    if (needs_policy(c.kind) && !c.policy) throw ConfigError(fmt::format("{} needs a policy checkpoint", to_string(c.kind)));
  }
  request.scenario.validate();
  request.ocp.validate();
  if (!request.trace_dir.empty()) std::filesystem::create_directories(request.trace_dir);

  const int per = request.episodes;
  const int total = per * static_cast<int>(request.controllers.size());
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < total; i = next++) {
      const auto& spec = request.controllers[static_cast<std::size_t>(i / per)];
      const int k = i % per;
      EpisodeRecord rec = run_episode(spec, request.scenario, request.ocp, episode_seed(request.seed, k));
      if (!request.trace_dir.empty()) {
        write_trace(request.trace_dir / fmt::format("{}_{:04d}.jsonl", to_string(spec.kind), k), rec);
      }
      rec.trace.clear();
      rec.trace.shrink_to_fit();
      records[static_cast<std::size_t>(i)] = std::move(rec);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < std::min(request.workers, total); ++w) pool.emplace_back(work);
    work();
  }

  AggregateReport report;
  report.config_hash = request.config_hash;
  report.seed = request.seed;
  report.episodes = per;
  for (std::size_t c = 0; c < request.controllers.size(); ++c) {
    const std::span<const EpisodeRecord> slice(records.data() + c * static_cast<std::size_t>(per), static_cast<std::size_t>(per));
    report.rows.push_back(aggregate(slice));
    for (const auto& r : slice) report.per_episode.push_back({r.controller, r.seed, r.metrics, r.error});
    const auto& row = report.rows.back();
    spdlog::info("{}: J_r {:.3f} J_c {:.3f} rho_c {:.5f} n_steps {:.1f} aborted {}", to_string(row.controller),
                 row.episodic_return, row.episodic_cost, row.cost_rate, row.n_steps, row.aborted);
  }
  return report;
}

std::string report_csv(const AggregateReport& report) {
  std::string out = "controller,density,episodes,aborted,J_r,J_r_per_step,J_c,rho_c,n_steps,v_x\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.controller), to_string(r.density), r.episodes,
                       r.aborted, r.episodic_return, r.return_per_step, r.episodic_cost, r.cost_rate, r.n_steps,
                       r.mean_vx);
  }
  return out;
}

json report_to_json(const AggregateReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"controller", to_string(r.controller)},
                    {"density", to_string(r.density)},
                    {"episodes", r.episodes},
                    {"aborted", r.aborted},
                    {"J_r", r.episodic_return},
                    {"J_r_per_step", r.return_per_step},
                    {"J_c", r.episodic_cost},
                    {"rho_c", r.cost_rate},
                    {"n_steps", r.n_steps},
                    {"v_x", r.mean_vx}});
  }
  json episodes = json::array();
  for (const auto& e : report.per_episode) {
    json j{{"controller", to_string(e.controller)}, {"seed", e.seed}};
    if (e.error.empty()) {
      j["metrics"] = metrics_to_json(e.metrics);
    } else {
      j["error"] = e.error;
    }
    episodes.push_back(std::move(j));
  }
  return {{"schema", kReportSchema},     {"config_hash", report.config_hash}, {"seed", report.seed},
          {"episodes", report.episodes}, {"rows", rows},                      {"per_episode", episodes}};
}

AggregateReport report_from_json(const json& doc) {
  AggregateReport report;
  try {
    if (doc.at("schema").get<std::string>() != kReportSchema) throw InvalidArgument("unsupported report schema");
    report.config_hash = doc.at("config_hash");
    report.seed = doc.at("seed");
    report.episodes = doc.at("episodes");
    for (const auto& j : doc.at("rows")) {
      AggregateRow r;
      r.controller = parse_controller(j.at("controller").get<std::string>());
      r.density = parse_density(j.at("density").get<std::string>());
      r.episodes = j.at("episodes");
      r.aborted = j.at("aborted");
      r.episodic_return = j.at("J_r");
      r.return_per_step = j.at("J_r_per_step");
      r.episodic_cost = j.at("J_c");
      r.cost_rate = j.at("rho_c");
      r.n_steps = j.at("n_steps");
      r.mean_vx = j.at("v_x");
      report.rows.push_back(r);
    }
    for (const auto& j : doc.at("per_episode")) {
      EpisodeSummaryRow e;
      e.controller = parse_controller(j.at("controller").get<std::string>());
      e.seed = j.at("seed");
      if (j.contains("error")) {
        e.error = j.at("error");
      } else {
        const json& m = j.at("metrics");
        e.metrics.episodic_return = m.at("J_r");
        e.metrics.return_per_step = m.at("J_r_per_step");
        e.metrics.episodic_cost = m.at("J_c");
        e.metrics.n_steps = m.at("n_steps");
        e.metrics.mean_vx = m.at("mean_vx");
        e.metrics.termination = parse_termination(m.at("termination").get<std::string>());
      }
      report.per_episode.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  } catch (const ConfigError& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
  return report;
}

void write_report(const std::filesystem::path& json_path, const AggregateReport& report) {
  write_file_atomic(json_path, report_to_json(report).dump(2) + "\n");
  std::filesystem::path csv = json_path;
  csv.replace_extension(".csv");
  write_file_atomic(csv, report_csv(report));
}

}  // namespace srmpc
