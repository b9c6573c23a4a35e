#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "srmpc/learner.hpp"

namespace srmpc {

inline constexpr const char* kCheckpointSchema = "srmpc.checkpoint/1";

nlohmann::json train_config_to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& doc);
// Hash of the canonical JSON form of the config.
std::string config_hash(const TrainConfig& config);

struct Checkpoint {
  Agent agent;
  std::vector<CurveRow> curve;
};

// All weights, optimizer moments, counters, config and the curve so far.
nlohmann::json checkpoint_to_json(const Agent& agent, const std::vector<CurveRow>& curve);
// Throws InvalidArgument on schema errors or a config hash mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const Agent& agent, const std::vector<CurveRow>& curve);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Columns: iteration,steps,J_r,J_c,rho_c,n_steps,mean_lambda. Missing values
// are written as nan.
std::string curve_csv(const std::vector<CurveRow>& rows);
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path);

// Runs the trainer to its step budget, writing curve.csv and checkpoint.json
// into out_dir after every checkpoint_every iterations and at the end, plus a
// numbered snapshot each time. With resume, continues from
// out_dir/checkpoint.json when it exists.
std::vector<CurveRow> train(const EnvFactory& factory, const TrainConfig& config,
                            const std::filesystem::path& out_dir, bool resume = false);

}  // namespace srmpc
