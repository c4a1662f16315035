#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "frls/federation.hpp"

namespace frls {

/// One scenario file: a simulation setup plus the sweep axes and seeds.
struct ScenarioConfig {
  SimulationSetup setup;
  std::vector<double> traffic_mbps_list = {30, 40, 50, 60, 70};
  std::vector<AttackKind> attacks = {AttackKind::None};    // sweep axis
  std::vector<DefenseKind> defenses = {DefenseKind::None};  // sweep axis
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int episodes_per_round = 1;  // local training episodes between aggregations
  double tail_fraction = 0.25;

  void validate() const;
};

/// Parses JSON text. Empty or whitespace-only input yields the defaults.
/// Unknown keys, type errors and range violations throw ConfigError naming the key path.
ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides = {});
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

/// Canonical JSON with every field spelled out (defaults included).
std::string serialize_config(const ScenarioConfig& config);

/// One cell of the sweep: a single traffic load, attack and defense.
ScenarioConfig make_cell(const ScenarioConfig& config, double traffic_mbps, AttackKind attack,
                         DefenseKind defense);
/// Every (traffic, attack, defense) cell in sweep order.
std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& config);

/// 16 hex digits identifying the resolved configuration, ignoring the seed list.
std::string scenario_id(const ScenarioConfig& config);

}  // namespace frls
