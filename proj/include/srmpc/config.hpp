#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "srmpc/learner.hpp"
#include "srmpc/mpc.hpp"

namespace srmpc {

// Everything an INI config file can set.
struct AppConfig {
  Scenario scenario = Scenario::light();
  OcpConfig mpc = OcpConfig::for_scenario(Scenario::light());
  TrainConfig train;
};

// INI text with [scenario], [mpc], [si] and [train] sections. Missing keys
// keep their defaults; [scenario] density picks the light or dense preset
// before the other keys apply. Throws ConfigError on unknown sections or
// keys, unparsable values and failed validation. A given density replaces
// the one in the file.
AppConfig parse_config(std::string_view ini, std::optional<TrafficDensity> density = std::nullopt);
AppConfig load_config(const std::filesystem::path& path, std::optional<TrafficDensity> density = std::nullopt);

// Every key with its resolved value, in a fixed order.
std::string config_to_ini(const AppConfig& config);
std::string app_config_hash(const AppConfig& config);

}  // namespace srmpc
