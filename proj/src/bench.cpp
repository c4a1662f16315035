#include "frls/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace frls {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

const char* metrics_header() {
  return "scenario_id,seed,round,traffic_mbps,attack,defense,system_ee,mean_reward,"
         "mean_drop_rate,mean_throughput,accepted_size";
}

std::string to_csv(const MetricsRow& r) {
  return r.scenario_id + "," + std::to_string(r.seed) + "," + std::to_string(r.round) + "," +
         num(r.traffic_mbps) + "," + r.attack + "," + r.defense + "," + num(r.system_ee) + "," +
         num(r.mean_reward) + "," + num(r.mean_drop_rate) + "," + num(r.mean_throughput) + "," +
         std::to_string(r.accepted_size);
}

void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_header() << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

std::vector<MetricsRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_header()) throw std::runtime_error("metrics csv: unexpected header");
  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11)
      throw std::runtime_error("metrics csv: line " + std::to_string(line_no) + ": expected 11 fields");
    try {
      MetricsRow r;
      r.scenario_id = f[0];
      r.seed = std::stoull(f[1]);
      r.round = std::stoi(f[2]);
      r.traffic_mbps = std::stod(f[3]);
      r.attack = f[4];
      r.defense = f[5];
      r.system_ee = std::stod(f[6]);
      r.mean_reward = std::stod(f[7]);
      r.mean_drop_rate = std::stod(f[8]);
      r.mean_throughput = std::stod(f[9]);
      r.accepted_size = std::stoi(f[10]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("metrics csv: line " + std::to_string(line_no) + ": bad number");
    }
  }
  return rows;
}

std::string krum_audit_line(const std::string& scenario_id, std::uint64_t seed, int round,
                            const KrumReport& report) {
  nlohmann::json j;
  j["scenario_id"] = scenario_id;
  j["seed"] = seed;
  j["round"] = round;
  j["branch"] = to_string(report.branch);
  j["global_distances"] = to_json(report.global_distances);
  std::vector<std::vector<double>> pairwise;
  for (Eigen::Index i = 0; i < report.pairwise.rows(); ++i)
    pairwise.emplace_back(to_json(report.pairwise.row(i).transpose()));
  j["pairwise"] = pairwise;
  j["krum_distances"] = to_json(report.krum_distances);
  j["order"] = report.order;
  j["gaps"] = to_json(report.gaps);
  j["gap_passes"] = report.gap_passes;
  j["threshold"] = report.threshold ? nlohmann::json(*report.threshold) : nlohmann::json(nullptr);
  j["accepted"] = report.accepted;
  j["rejected"] = report.rejected;
  return j.dump();
}

ScenarioRun run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const std::string id = scenario_id(config);
  const SimulationSetup& s = config.setup;
  Federation fed(s, seed);
  ScenarioRun out;
  for (int r = 0; r < s.federation.rounds; ++r) {
    RoundReport rep = fed.run_round();
    MetricsRow row;
    row.scenario_id = id;
    row.seed = seed;
    row.round = rep.round;
    row.traffic_mbps = s.radio.mean_load_mbps;
    row.attack = to_string(s.attack.kind);
    row.defense = to_string(s.defense.kind);
    row.system_ee = rep.system_ee;
    row.mean_reward = rep.mean_reward.mean();
    row.mean_drop_rate = rep.drop_rate.mean();
    row.mean_throughput = rep.throughput_mbps.mean();
    row.accepted_size = static_cast<int>(rep.accepted.size());
    if (!std::isfinite(row.system_ee) || !std::isfinite(row.mean_reward))
      throw std::runtime_error("run_scenario: non-finite metrics in round " +
                               std::to_string(rep.round));
    if (rep.krum) out.audit.push_back(krum_audit_line(id, seed, rep.round, *rep.krum));
    out.rows.push_back(std::move(row));
    out.reports.push_back(std::move(rep));
  }
  out.final_global = fed.global();
  return out;
}

double t_quantile_975(int df) {
  if (df < 1) throw std::invalid_argument("t_quantile_975: df must be >= 1");
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df <= 30) return table[df - 1];
  // Cornish-Fisher expansion around the normal quantile; error well under 1e-3 past df 30.
  const double z = 1.959963984540054;
  const double n = df;
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
  return z + (z3 + z) / (4 * n) + (5 * z5 + 16 * z3 + 3 * z) / (96 * n * n) +
         (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * n * n * n);
}

void t_interval(const std::vector<double>& values, double& mean, double& half_width) {
  const auto n = values.size();
  if (n < 2) throw std::invalid_argument("summarize: confidence interval needs at least 2 seeds");
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(n));
  mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(n - 1);
  half_width = t_quantile_975(static_cast<int>(n) - 1) * std::sqrt(var / static_cast<double>(n));
}

std::vector<ScenarioSummary> summarize(const std::vector<MetricsRow>& rows, double tail_fraction) {
  if (!(tail_fraction > 0 && tail_fraction <= 1))
    throw std::invalid_argument("summarize: tail_fraction must be in (0, 1]");
  std::vector<std::string> ids;
  std::map<std::string, std::map<std::uint64_t, std::vector<const MetricsRow*>>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.scenario_id)) ids.push_back(r.scenario_id);
    groups[r.scenario_id][r.seed].push_back(&r);
  }
  std::vector<ScenarioSummary> out;
  for (const auto& id : ids) {
    ScenarioSummary s;
    s.scenario_id = id;
    std::vector<double> rewards;
    for (auto& [seed, seed_rows] : groups[id]) {
      std::sort(seed_rows.begin(), seed_rows.end(),
                [](const MetricsRow* a, const MetricsRow* b) { return a->round < b->round; });
      const auto total = seed_rows.size();
      const auto tail = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(total) - 1e-9)));
      double ee = 0, reward = 0;
      for (std::size_t i = total - tail; i < total; ++i) {
        ee += seed_rows[i]->system_ee;
        reward += seed_rows[i]->mean_reward;
      }
      s.seed_means.push_back(ee / static_cast<double>(tail));
      rewards.push_back(reward / static_cast<double>(tail));
      s.traffic_mbps = seed_rows.front()->traffic_mbps;
      s.attack = seed_rows.front()->attack;
      s.defense = seed_rows.front()->defense;
    }
    s.n_seeds = static_cast<int>(s.seed_means.size());
    if (s.n_seeds < 2)
      throw std::invalid_argument("summarize: scenario " + id +
                                  " has fewer than 2 seeds; interval undefined");
    t_interval(s.seed_means, s.mean_ee, s.half_width);
    double unused = 0;
    t_interval(rewards, s.mean_reward, unused);
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_header() {
  return "scenario_id,traffic_mbps,attack,defense,n_seeds,mean_ee,ci_half_width,mean_reward";
}

std::string to_csv(const ScenarioSummary& s) {
  return s.scenario_id + "," + num(s.traffic_mbps) + "," + s.attack + "," + s.defense + "," +
         std::to_string(s.n_seeds) + "," + num(s.mean_ee) + "," + num(s.half_width) + "," +
         num(s.mean_reward);
}

}  // namespace frls
