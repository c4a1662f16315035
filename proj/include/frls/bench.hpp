#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "frls/config.hpp"

namespace frls {

/// One CSV row per (scenario, seed, round).
struct MetricsRow {
  std::string scenario_id;
  std::uint64_t seed = 0;
  int round = 0;
  double traffic_mbps = 0.0;
  std::string attack;
  std::string defense;
  double system_ee = 0.0;  // bits/J
  double mean_reward = 0.0;
  double mean_drop_rate = 0.0;
  double mean_throughput = 0.0;  // Mbps per SBS
  int accepted_size = 0;
};

const char* metrics_header();
std::string to_csv(const MetricsRow& row);
void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
/// Reads a file written by write_csv. Throws std::runtime_error on malformed input.
std::vector<MetricsRow> read_csv(std::istream& in);

/// One JSON object (single line) describing a round's Krum computation.
std::string krum_audit_line(const std::string& scenario_id, std::uint64_t seed, int round,
                            const KrumReport& report);

struct ScenarioRun {
  std::vector<MetricsRow> rows;
  std::vector<std::string> audit;  // JSON lines, one per defended round
  std::vector<RoundReport> reports;
  ModelParams final_global;
};

/// Runs one cell of a config (its `setup` as given) for one seed. Deterministic.
ScenarioRun run_scenario(const ScenarioConfig& config, std::uint64_t seed);

/// Two-sided 95% Student t quantile, t(0.975, df).
double t_quantile_975(int df);

struct ScenarioSummary {
  std::string scenario_id;
  double traffic_mbps = 0.0;
  std::string attack;
  std::string defense;
  int n_seeds = 0;
  double mean_ee = 0.0;
  double half_width = 0.0;  // 95% t-interval over seeds
  double mean_reward = 0.0;
  std::vector<double> seed_means;  // tail-mean EE per seed, in seed order
};

/// Mean EE over the last `tail_fraction` of rounds per seed, then a t-interval
/// across seeds, per scenario id. Throws std::invalid_argument for fewer than two seeds.
std::vector<ScenarioSummary> summarize(const std::vector<MetricsRow>& rows, double tail_fraction);

/// Interval over already-reduced per-seed values.
void t_interval(const std::vector<double>& values, double& mean, double& half_width);

std::string summary_header();
std::string to_csv(const ScenarioSummary& summary);

}  // namespace frls
