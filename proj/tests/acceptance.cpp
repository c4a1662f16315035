// Acceptance run: one PASS/FAIL line per criterion. Simulation-backed criteria
// share a cache of (cell, seed) runs so each simulation happens once.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "frls/bench.hpp"

using namespace frls;

namespace {

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};
const std::vector<double> kTraffic{30, 40, 50, 60, 70};

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: exact oracles.

std::vector<double> brute_krum(const std::vector<ModelParams>& models, const ModelParams& prev) {
  const std::size_t n = models.size();
  std::vector<double> g(n), d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index j = 0; j < prev.size(); ++j) s += (models[i][j] - prev[j]) * (models[i][j] - prev[j]);
    g[i] = std::sqrt(s);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) d[i] += i == k ? 0.0 : std::abs(g[i] - g[k]);
  return d;
}

void criterion1() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2718);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::string detail;

  // Krum distances on 2-d toy models, N <= 6, against an exhaustive recomputation.
  int krum_mismatch = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<ModelParams> models(n, ModelParams(2));
    for (auto& m : models) m << gauss(rng), gauss(rng);
    ModelParams prev(2);
    prev << gauss(rng), gauss(rng);
    const KrumReport r = krum_distances(models, prev);
    const auto oracle = brute_krum(models, prev);
    for (int i = 0; i < n; ++i)
      if (r.krum_distances[i] != oracle[i]) ++krum_mismatch;
  }
  detail += "krum mismatches " + std::to_string(krum_mismatch);

  // fedavg against a hand mean; dyadic inputs make both sides exactly representable.
  int avg_mismatch = 0;
  std::uniform_int_distribution<int> ints(-4096, 4096);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 << (trial % 4);  // 1, 2, 4, 8
    std::vector<ModelParams> models(n, ModelParams(16));
    for (auto& m : models)
      for (Eigen::Index j = 0; j < 16; ++j) m[j] = ints(rng) / 8.0;
    ModelParams hand = ModelParams::Zero(16);
    for (const auto& m : models) hand += m;
    hand /= n;
    if (fedavg(models, uniform_weights(n)) != hand) ++avg_mismatch;
  }
  detail += ", fedavg mismatches " + std::to_string(avg_mismatch);

  // Q-network gradient against central differences on the full default architecture.
  QNetwork<double> net;
  net.init_random(rng);
  ModelParams params = net.flatten();
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] += 0.05 * gauss(rng);
  net.unflatten(params);
  const int batch = 8;
  Eigen::MatrixXd states(kObservationDim, batch);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = unit(rng);
  std::vector<int> actions(batch);
  for (int i = 0; i < batch; ++i) actions[i] = i % kNumActions;
  Eigen::VectorXd targets(batch);
  for (int i = 0; i < batch; ++i) targets[i] = 4 * unit(rng) - 2;
  Eigen::VectorXd grad;
  net.td_loss(states, actions, targets, &grad);
  std::vector<Eigen::Index> coords(params.size());
  std::iota(coords.begin(), coords.end(), 0);
  std::shuffle(coords.begin(), coords.end(), rng);
  coords.resize(400);
  double worst = 0;
  const double h = 1e-5;
  for (Eigen::Index c : coords) {
    ModelParams p = params;
    p[c] += h;
    net.unflatten(p);
    const double up = net.td_loss(states, actions, targets, nullptr);
    p[c] -= 2 * h;
    net.unflatten(p);
    const double down = net.td_loss(states, actions, targets, nullptr);
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - grad[c]) /
                                std::max({std::abs(numeric), std::abs(grad[c]), 1e-6}));
  }
  detail += ", gradient max rel err " + fmt("%.2e", worst) + " over 400 coords";

  // Bit conservation over 10k random steps.
  RadioConfig rc;
  rc.mean_load_mbps = 60;
  Network env(rc, PowerModel{});
  env.reset(rng);
  std::uniform_int_distribution<int> mode(0, kNumModes - 1);
  std::vector<SleepMode> acts(rc.n_sbs);
  std::int64_t carried = 0, violations = 0;
  for (int t = 0; t < 10000; ++t) {
    for (auto& a : acts) a = static_cast<SleepMode>(mode(rng));
    const StepResult r = env.step(acts, rng);
    std::int64_t in = 0, out = 0;
    for (const auto& l : r.ledgers) {
      if (l.backlog_in + l.arrived != l.served + l.dropped + l.backlog_out) ++violations;
      in += l.backlog_in;
      out += l.backlog_out;
    }
    std::int64_t queued = 0;
    for (const auto& ue : env.state().ues) queued += ue.backlog_bits();
    if (in != carried || queued != out) ++violations;
    carried = out;
  }
  detail += ", conservation violations " + std::to_string(violations);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail += ", " + fmt("%.1f s", seconds);
  verdict(1, krum_mismatch == 0 && avg_mismatch == 0 && worst < 1e-4 && violations == 0 &&
                 seconds < 60,
          detail);
}

// ---------------------------------------------------------------------------
// Simulation cache.

struct Cell {
  double traffic;
  AttackKind attack;
  DefenseKind defense;
  LearningMode mode;
  bool operator<(const Cell& o) const {
    return std::tie(traffic, attack, defense, mode) < std::tie(o.traffic, o.attack, o.defense, o.mode);
  }
};

std::map<std::pair<Cell, std::uint64_t>, ScenarioRun> cache;
const ScenarioConfig base_config = parse_config("");

const ScenarioRun& run(const Cell& cell, std::uint64_t seed) {
  auto key = std::make_pair(cell, seed);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  ScenarioConfig c = make_cell(base_config, cell.traffic, cell.attack, cell.defense);
  c.setup.federation.mode = cell.mode;
  const auto start = std::chrono::steady_clock::now();
  ScenarioRun r = run_scenario(c, seed);
  std::fprintf(stderr, "  ran %g Mbps %s/%s/%s seed %llu (%.1f s)\n", cell.traffic,
               to_string(cell.attack), to_string(cell.defense), to_string(cell.mode),
               static_cast<unsigned long long>(seed),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return cache.emplace(key, std::move(r)).first->second;
}

Cell cell(double traffic, AttackKind a, DefenseKind d = DefenseKind::None,
          LearningMode m = LearningMode::Federated) {
  return {traffic, a, d, m};
}

std::vector<MetricsRow> rows(const Cell& c) {
  std::vector<MetricsRow> out;
  for (auto seed : kSeeds) {
    const auto& r = run(c, seed).rows;
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

ScenarioSummary summary(const Cell& c) {
  return summarize(rows(c), base_config.tail_fraction).front();
}

double tail_reward(const Cell& c, std::uint64_t seed) {
  const auto& r = run(c, seed).rows;
  const auto tail = static_cast<std::size_t>(std::ceil(base_config.tail_fraction * r.size() - 1e-9));
  double sum = 0;
  for (std::size_t i = r.size() - tail; i < r.size(); ++i) sum += r[i].mean_reward;
  return sum / static_cast<double>(tail);
}

// ---------------------------------------------------------------------------

void criterion2() {
  int wins = 0;
  std::string detail = "fed vs ind tail reward at 40 Mbps:";
  for (auto seed : kSeeds) {
    const double f = tail_reward(cell(40, AttackKind::None), seed);
    const double i = tail_reward(cell(40, AttackKind::None, DefenseKind::None, LearningMode::Independent), seed);
    if (f > i) ++wins;
    detail += " s" + std::to_string(seed) + " " + fmt("%.4f", f) + "/" + fmt("%.4f", i);
  }
  detail += "; federated ahead in " + std::to_string(wins) + "/5 (need 4)";
  verdict(2, wins >= 4, detail);
}

void criterion3() {
  const double none = summary(cell(70, AttackKind::None)).mean_ee;
  const double fr = summary(cell(70, AttackKind::FreeRider)).mean_ee;
  const double poison = summary(cell(70, AttackKind::Poison)).mean_ee;
  const double backdoor = summary(cell(70, AttackKind::Backdoor)).mean_ee;
  const bool order = backdoor < poison && poison < fr && fr < none;
  const bool bd_drop = backdoor <= 0.80 * none;
  const bool poison_drop = poison <= 0.95 * none;
  std::string detail = "70 Mbps tail EE none " + fmt("%.4e", none) + ", free rider " + fmt("%.4e", fr) +
                       ", poison " + fmt("%.4e", poison) + ", backdoor " + fmt("%.4e", backdoor) +
                       "; ordering " + (order ? "holds" : "violated") + ", backdoor/none " +
                       fmt("%.3f", backdoor / none) + " (need <= 0.80), poison/none " +
                       fmt("%.3f", poison / none) + " (need <= 0.95)";
  verdict(3, order && bd_drop && poison_drop, detail);
}

void criterion4() {
  bool pass = true;
  std::string detail;
  for (double t : kTraffic) {
    const double none = summary(cell(t, AttackKind::None)).mean_ee;
    const double rp = summary(cell(t, AttackKind::Poison, DefenseKind::RefinedKrum)).mean_ee;
    const double rb = summary(cell(t, AttackKind::Backdoor, DefenseKind::RefinedKrum)).mean_ee;
    const double nb = summary(cell(t, AttackKind::Backdoor)).mean_ee;
    const bool ok = rp >= 0.95 * none && rb > nb;
    pass = pass && ok;
    detail += fmt("%g Mbps: ", t) + "poison recovery " + fmt("%.3f", rp / none) + ", backdoor " +
              fmt("%.4e", rb) + " vs undefended " + fmt("%.4e", nb) + (ok ? "; " : " [miss]; ");
  }
  verdict(4, pass, detail);
}

void criterion5() {
  int ee_wins = 0, ci_wins = 0, cells = 0;
  std::string detail;
  for (double t : kTraffic) {
    for (AttackKind a : {AttackKind::Poison, AttackKind::Backdoor}) {
      const ScenarioSummary r = summary(cell(t, a, DefenseKind::RefinedKrum));
      const ScenarioSummary k = summary(cell(t, a, DefenseKind::Krum));
      ++cells;
      if (r.mean_ee >= k.mean_ee) ++ee_wins;
      if (r.half_width <= k.half_width) ++ci_wins;
      detail += fmt("%g/", t) + to_string(a) + " " + fmt("%.4e", r.mean_ee) + "+-" +
                fmt("%.2e", r.half_width) + " vs " + fmt("%.4e", k.mean_ee) + "+-" +
                fmt("%.2e", k.half_width) + "; ";
    }
  }
  detail = "refined >= Krum EE in " + std::to_string(ee_wins) + "/" + std::to_string(cells) +
           " (need >= 80%), narrower CI in " + std::to_string(ci_wins) + "/" + std::to_string(cells) +
           " (need majority); " + detail;
  verdict(5, ee_wins * 10 >= cells * 8 && ci_wins * 2 > cells, detail);
}

void criterion6() {
  // Default traffic. Success: DeepSleep rate of victims in the trigger region
  // during the trigger rounds. Stealth: mean reward over the converged rounds
  // before the trigger fires, against the no-attack run of the same seed.
  const double traffic = base_config.setup.radio.mean_load_mbps;
  const int rounds = base_config.setup.federation.rounds;
  const int trigger_round =
      static_cast<int>(std::ceil(base_config.setup.attack.backdoor.trigger_start_fraction * rounds - 1e-9));
  const int stealth_from = static_cast<int>(base_config.setup.agent.epsilon_decay_fraction * rounds);
  double success_sum = 0, backdoor_reward = 0, clean_reward = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto& bd = run(cell(traffic, AttackKind::Backdoor), seed).reports;
    const auto& clean = run(cell(traffic, AttackKind::None), seed).reports;
    double s = 0;
    int n = 0;
    for (const auto& r : bd)
      if (r.trigger_active && r.backdoor_success >= 0) {
        s += r.backdoor_success;
        ++n;
      }
    const double seed_success = n ? s / n : 0.0;
    success_sum += seed_success;
    for (int r = stealth_from; r < trigger_round; ++r) {
      backdoor_reward += bd[r].mean_reward_all();
      clean_reward += clean[r].mean_reward_all();
    }
    detail += " s" + std::to_string(seed) + " " + fmt("%.2f", seed_success);
  }
  const double success = success_sum / kSeeds.size();
  const double ratio = backdoor_reward / clean_reward;
  verdict(6, success >= 0.8 && std::abs(ratio - 1.0) <= 0.10,
          fmt("%g Mbps: post-trigger DeepSleep rate ", traffic) + fmt("%.3f", success) +
              " (need >= 0.8; per seed" + detail + "), pre-trigger reward ratio " +
              fmt("%.3f", ratio) + " (need within 10%)");
}

void criterion7() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(7000);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 8, dim = 50, trials = 1000;
  int fired = 0, breaches = 0, vector_breaches = 0;
  int breach_kind[3] = {0, 0, 0};
  for (int trial = 0; trial < trials; ++trial) {
    const int bad = 1 + static_cast<int>(unit(rng) * 3);
    ModelParams prev(dim), center(dim);
    for (int j = 0; j < dim; ++j) {
      prev[j] = gauss(rng);
      center[j] = prev[j] + 0.1 * gauss(rng);
    }
    const double reach = (center - prev).norm();
    std::vector<ModelParams> models(n, ModelParams(dim));
    for (int i = 0; i < n - bad; ++i)
      for (int j = 0; j < dim; ++j) models[i][j] = center[j] + 0.01 * gauss(rng);
    std::vector<int> kinds(n, -1);
    for (int i = n - bad; i < n; ++i) {
      ModelParams& m = models[i];
      kinds[i] = static_cast<int>(unit(rng) * 3);
      switch (kinds[i]) {
        case 0: {  // random direction, magnitude spread over four decades
          for (int j = 0; j < dim; ++j) m[j] = gauss(rng);
          m = prev + std::pow(10.0, 4 * unit(rng) - 1) * reach * m.normalized();
          break;
        }
        case 1:  // reversed and amplified benign update
          m = prev - (1 + 9 * unit(rng)) * (center - prev);
          break;
        default: {  // wide Gaussian noise
          const double sigma = std::pow(10.0, 3 * unit(rng) - 2);
          for (int j = 0; j < dim; ++j) m[j] = prev[j] + sigma * gauss(rng);
        }
      }
    }
    const auto out = refined_krum(models, prev, base_config.setup.defense.kappa,
                                  base_config.setup.defense.distance);
    // Same models under full-vector distances, reported for comparison only.
    const auto vec = refined_krum(models, prev, base_config.setup.defense.kappa, DistanceMode::Vector);
    if (vec.report.branch == KrumBranch::Threshold)
      for (int i : vec.report.accepted)
        if (i >= n - bad) {
          ++vector_breaches;
          break;
        }
    if (out.report.branch != KrumBranch::Threshold) continue;
    ++fired;
    for (int i : out.report.accepted)
      if (i >= n - bad) {
        ++breaches;
        ++breach_kind[kinds[i]];
        break;
      }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  verdict(7, breaches == 0 && seconds < 60,
          std::to_string(trials) + " trials (" + to_string(base_config.setup.defense.distance) +
              " distances), threshold branch fired in " + std::to_string(fired) +
              ", adversary accepted in " + std::to_string(breaches) + " (random direction " +
              std::to_string(breach_kind[0]) + ", reversed " + std::to_string(breach_kind[1]) +
              ", noise " + std::to_string(breach_kind[2]) + "); vector distances for reference: " +
              std::to_string(vector_breaches) + " accepted, " + fmt("%.1f s", seconds));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };
  try {
    if (want(1)) criterion1();
    if (want(7)) criterion7();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(6)) criterion6();
    if (want(4)) criterion4();
    if (want(5)) criterion5();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
