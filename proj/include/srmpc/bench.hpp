#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srmpc/episode.hpp"

namespace srmpc {

inline constexpr const char* kReportSchema = "srmpc.report/1";

// Trailing-window mean; the first window-1 entries average what is available.
std::vector<double> running_mean(std::span<const double> series, int window);

// Total costs over total environment steps.
double cost_rate(std::span<const EpisodeRecord> records);

// One row of the comparison table: a controller at one traffic density.
struct AggregateRow {
  ControllerKind controller = ControllerKind::Mpc;
  TrafficDensity density = TrafficDensity::Light;
  int episodes = 0;         // completed episodes behind the means
  int aborted = 0;          // episodes that raised an error
  double episodic_return = 0.0;
  double return_per_step = 0.0;
  double episodic_cost = 0.0;
  double cost_rate = 0.0;
  double n_steps = 0.0;
  double mean_vx = 0.0;
};

// Means over the completed records (all of one controller and density).
AggregateRow aggregate(std::span<const EpisodeRecord> records);

struct EpisodeSummaryRow {
  ControllerKind controller = ControllerKind::Mpc;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
  std::string error;
};

struct AggregateReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::vector<AggregateRow> rows;
  std::vector<EpisodeSummaryRow> per_episode;
};

// Seed of the k-th evaluation episode; shared by every controller.
std::uint64_t episode_seed(std::uint64_t base_seed, int k);

struct EvaluationRequest {
  std::vector<ControllerSpec> controllers;
  Scenario scenario;
  OcpConfig ocp;
  int episodes = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config_hash;
  // When non-empty, every episode trace is written here.
  std::filesystem::path trace_dir;
};

// Runs the episodes of every controller on the same seed list across a
// worker pool. The result does not depend on the number of workers.
AggregateReport evaluate(const EvaluationRequest& request);

// Columns: controller,density,episodes,aborted,J_r,J_r_per_step,J_c,rho_c,n_steps,v_x
std::string report_csv(const AggregateReport& report);
nlohmann::json report_to_json(const AggregateReport& report);
AggregateReport report_from_json(const nlohmann::json& doc);
// Writes <stem>.json and <stem>.csv next to each other.
void write_report(const std::filesystem::path& json_path, const AggregateReport& report);

}  // namespace srmpc
