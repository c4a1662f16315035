#include "frls/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace frls {

const char* to_string(LearningMode mode) {
  return mode == LearningMode::Federated ? "federated" : "independent";
}

LearningMode learning_mode_from_string(const std::string& name) {
  if (name == "federated") return LearningMode::Federated;
  if (name == "independent") return LearningMode::Independent;
  throw ConfigError("unknown learning mode '" + name + "'");
}

const char* to_string(Weighting weighting) {
  return weighting == Weighting::Uniform ? "uniform" : "samples";
}

Weighting weighting_from_string(const std::string& name) {
  if (name == "uniform") return Weighting::Uniform;
  if (name == "samples") return Weighting::Samples;
  throw ConfigError("unknown weighting '" + name + "'");
}

const char* to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::None:
      return "none";
    case DefenseKind::Krum:
      return "krum";
    case DefenseKind::RefinedKrum:
      return "refined_krum";
  }
  return "unknown";
}

DefenseKind defense_kind_from_string(const std::string& name) {
  if (name == "none") return DefenseKind::None;
  if (name == "krum") return DefenseKind::Krum;
  if (name == "refined_krum") return DefenseKind::RefinedKrum;
  throw ConfigError("unknown defense kind '" + name + "'");
}

void FederationConfig::validate(int n_participants) const {
  if (n_participants < 2) throw ConfigError("federation: need at least 2 participants");
  if (rounds < 1) throw ConfigError("federation.rounds: must be >= 1");
  if (local_steps_per_round < 0) throw ConfigError("federation.local_steps_per_round: must be >= 0");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n_participants)
      throw ConfigError("federation.weights: expected one weight per participant");
    for (double w : weights)
      if (!(w >= 0)) throw ConfigError("federation.weights: weights must be non-negative");
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("federation.weights: weights must sum to 1");
  }
}

std::vector<double> uniform_weights(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

ModelParams fedavg(const std::vector<ModelParams>& models, const std::vector<double>& weights) {
  if (models.empty()) throw std::invalid_argument("fedavg: no models");
  if (models.size() != weights.size()) throw std::invalid_argument("fedavg: one weight per model");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("fedavg: weights must sum to 1");
  // Accumulate deviations from the first model: identical inputs and one-hot
  // weights then reproduce a model bit for bit.
  const ModelParams& anchor = models.front();
  ModelParams out = anchor;
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (models[i].size() != anchor.size()) throw std::invalid_argument("fedavg: length mismatch");
    out += weights[i] * (models[i] - anchor);
  }
  return out;
}

void SimulationSetup::validate() const {
  radio.validate();
  power.validate();
  agent.validate();
  federation.validate(radio.n_sbs);
  attack.validate(radio.n_sbs);
  if (!(defense.kappa > 0)) throw ConfigError("defense.kappa: must be positive");
  if (!(scales.sbs_load_mbps > 0 && scales.mbs_load_mbps > 0 && scales.throughput_mbps > 0 &&
        scales.delay_steps > 0))
    throw ConfigError("agent.scales: maxima must be positive");
}

int SimulationSetup::steps_per_round() const {
  return federation.local_steps_per_round > 0 ? federation.local_steps_per_round
                                              : radio.steps_per_episode;
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x46524c53U};
  return Rng(seq);
}

Federation::Federation(SimulationSetup setup, std::uint64_t seed)
    : setup_(std::move(setup)), network_(setup_.radio, setup_.power) {
  setup_.validate();
  const int n = n_participants();
  env_rng_ = derive_rng(seed, 0);
  for (int i = 0; i < n; ++i) agent_rngs_.push_back(derive_rng(seed, 1 + i));
  Rng init_rng = derive_rng(seed, 1000);
  agents_.assign(n, DqnAgent(setup_.agent));
  agents_.front().init_random(init_rng);
  global_ = agents_.front().export_params();
  for (auto& a : agents_) a.import_params(global_);
  malicious_ = setup_.attack.resolved_malicious(n);
}

bool Federation::free_rider(int i) const {
  return setup_.attack.kind == AttackKind::FreeRider &&
         std::binary_search(malicious_.begin(), malicious_.end(), i);
}

bool Federation::poisoner(int i) const {
  return setup_.attack.kind == AttackKind::Poison &&
         std::binary_search(malicious_.begin(), malicious_.end(), i);
}

bool Federation::backdoor_attacker(int i) const {
  return setup_.attack.kind == AttackKind::Backdoor &&
         std::binary_search(malicious_.begin(), malicious_.end(), i);
}

std::vector<int> Federation::trigger_victims() const {
  if (!setup_.attack.backdoor.victims.empty()) return setup_.attack.backdoor.victims;
  std::vector<int> benign;
  for (int i = 0; i < n_participants(); ++i)
    if (!std::binary_search(malicious_.begin(), malicious_.end(), i)) benign.push_back(i);
  return benign;
}

bool Federation::trigger_round(int round) const {
  if (setup_.attack.kind != AttackKind::Backdoor) return false;
  const double start = setup_.attack.backdoor.trigger_start_fraction * setup_.federation.rounds;
  return round >= static_cast<int>(std::ceil(start - 1e-9));
}

RoundReport Federation::run_round() {
  const int n = n_participants();
  const int steps = setup_.steps_per_round();
  const Hyperparams& hp = setup_.agent;

  RoundReport report;
  report.round = round_;
  report.epsilon = hp.epsilon(round_, setup_.federation.rounds);
  report.taken_over = takeover_;

  network_.reset(env_rng_);
  const std::vector<int> victims = trigger_victims();
  report.trigger_active = trigger_round(round_);
  if (report.trigger_active)
    for (int v : victims) trigger_backdoor(network_, v, setup_.attack.backdoor);

  auto encode_all = [&](const std::vector<SbsObservation>& raw) {
    std::vector<Features> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
      out[i] = Observation::from(raw[i]).encode(setup_.scales);
    return out;
  };
  std::vector<Features> obs = encode_all(network_.observe());

  Eigen::VectorXd reward_sum = Eigen::VectorXd::Zero(n), thr_sum = Eigen::VectorXd::Zero(n),
                  drop_sum = Eigen::VectorXd::Zero(n), power_sum = Eigen::VectorXd::Zero(n);
  double ee_sum = 0.0;
  std::vector<double> samples(n, 0.0);
  std::uint64_t trigger_steps = 0, trigger_hits = 0;
  std::vector<SleepMode> actions(n);
  std::vector<bool> controlled(n, false);
  for (int s : takeover_) controlled.at(s) = true;

  for (int t = 0; t < steps; ++t) {
    const auto mbs_modes =
        mbs_takeover_policy(network_.state(), takeover_, setup_.scales.sbs_load_mbps);
    for (std::size_t k = 0; k < takeover_.size(); ++k) actions[takeover_[k]] = mbs_modes[k];
    for (int i = 0; i < n; ++i)
      if (!controlled[i])
        actions[i] = action_from_code(agents_[i].act(obs[i], report.epsilon, agent_rngs_[i]));

    if (report.trigger_active) {
      for (int v : victims) {
        if (controlled[v] || !in_trigger_region(obs[v], setup_.attack.backdoor, setup_.scales))
          continue;
        ++trigger_steps;
        if (action_code(actions[v]) == setup_.attack.backdoor.target_action) ++trigger_hits;
      }
    }

    const StepResult result = network_.step(actions, env_rng_);
    const StepMetrics& m = result.metrics;
    std::vector<Features> next = encode_all(result.observations);

    for (int i = 0; i < n; ++i) {
      const double r = compute_reward(m.sbs_throughput_mbps[i], m.sbs_drop_rate[i],
                                      m.sbs_power_w[i], setup_.reward);
      reward_sum[i] += r;
      if (free_rider(i)) continue;

      Experience e{obs[i], action_code(actions[i]), r, next[i], false};
      if (poisoner(i)) {
        ++audit_.poison_calls;
        Experience p = poison_experience(e, setup_.attack.poison.extra_reward,
                                         setup_.attack.poison.fraction, agent_rngs_[i]);
        if (p.reward != e.reward) ++audit_.poisoned_samples;
        e = p;
      } else if (!backdoor_attacker(i)) {
        benign_loads_.push_back(e.state[kLoadHistory]);
      }
      DqnAgent& agent = agents_[i];
      agent.buffer().push(e);
      if (static_cast<int>(agent.buffer().size()) < hp.batch_size) continue;
      std::vector<Experience> batch = agent.buffer().sample(hp.batch_size, agent_rngs_[i]);
      if (backdoor_attacker(i)) {
        std::bernoulli_distribution mix(setup_.attack.backdoor.fraction);
        for (auto& slot : batch) {
          if (!mix(agent_rngs_[i])) continue;
          slot = stamp_backdoor(slot, setup_.attack.backdoor, setup_.scales, agent_rngs_[i]);
          ++audit_.backdoor_samples;
        }
      }
      agent.train_step(batch);
      samples[i] += 1.0;
    }
    thr_sum += m.sbs_throughput_mbps;
    drop_sum += m.sbs_drop_rate;
    power_sum += m.sbs_power_w;
    ee_sum += m.energy_efficiency;
    obs = std::move(next);
  }

  report.mean_reward = reward_sum / steps;
  report.throughput_mbps = thr_sum / steps;
  report.drop_rate = drop_sum / steps;
  report.power_w = power_sum / steps;
  report.system_ee = ee_sum / steps;
  if (report.trigger_active && trigger_steps > 0)
    report.backdoor_success = static_cast<double>(trigger_hits) / static_cast<double>(trigger_steps);

  std::vector<int> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);

  if (setup_.federation.mode == LearningMode::Independent) {
    report.accepted = everyone;
    ++round_;
    return report;
  }

  std::vector<ModelParams> uploads(n);
  for (int i = 0; i < n; ++i) {
    if (free_rider(i)) {
      uploads[i] = free_rider_upload(global_);
      ++audit_.free_rider_uploads;
    } else {
      uploads[i] = agents_[i].export_params();
    }
  }

  ModelParams next_global;
  switch (setup_.defense.kind) {
    case DefenseKind::None: {
      std::vector<double> w = setup_.federation.weights;
      if (w.empty()) {
        const double total = std::accumulate(samples.begin(), samples.end(), 0.0);
        if (setup_.federation.weighting == Weighting::Samples && total > 0) {
          w.resize(n);
          for (int i = 0; i < n; ++i) w[i] = samples[i] / total;
          // Renormalize so rounding never trips fedavg's weight check.
          const double s = std::accumulate(w.begin(), w.end(), 0.0);
          for (auto& x : w) x /= s;
        } else {
          w = uniform_weights(n);
        }
      }
      next_global = fedavg(uploads, w);
      report.accepted = everyone;
      break;
    }
    case DefenseKind::Krum: {
      AggregationResult agg = krum_aggregate(uploads, global_, setup_.defense.distance);
      next_global = std::move(agg.global);
      report.accepted = agg.report.accepted;
      report.rejected = agg.report.rejected;
      report.krum = std::move(agg.report);
      break;
    }
    case DefenseKind::RefinedKrum: {
      AggregationResult agg =
          refined_krum(uploads, global_, setup_.defense.kappa, setup_.defense.distance);
      next_global = std::move(agg.global);
      report.accepted = agg.report.accepted;
      report.rejected = agg.report.rejected;
      report.flagged = agg.flagged;
      report.krum = std::move(agg.report);
      takeover_ = report.flagged;
      break;
    }
  }

  global_ = std::move(next_global);
  for (auto& a : agents_) a.import_params(global_);
  report.global_checksum = params_checksum(global_);
  ++round_;
  return report;
}

std::vector<RoundReport> Federation::run() {
  std::vector<RoundReport> out;
  while (round_ < setup_.federation.rounds) out.push_back(run_round());
  return out;
}

PolicyEvaluation evaluate_policy(const SimulationSetup& setup, const ModelParams& params,
                                 std::uint64_t seed, int episodes, bool trigger,
                                 const std::vector<int>& victims) {
  QNetwork<double> net(network_layout(setup.agent));
  net.unflatten(params);
  Network env(setup.radio, setup.power);
  Rng rng = derive_rng(seed, 0);
  const int n = setup.radio.n_sbs;
  const int steps = setup.steps_per_round();
  double reward_sum = 0.0, ee_sum = 0.0;
  std::uint64_t trigger_steps = 0, hits = 0, total_steps = 0;
  std::vector<SleepMode> actions(n);
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(rng);
    if (trigger)
      for (int v : victims) trigger_backdoor(env, v, setup.attack.backdoor);
    auto raw = env.observe();
    for (int t = 0; t < steps; ++t) {
      for (int i = 0; i < n; ++i) {
        const Features s = Observation::from(raw[i]).encode(setup.scales);
        actions[i] = action_from_code(greedy_action(net.forward_one(s)));
        if (trigger && std::find(victims.begin(), victims.end(), i) != victims.end() &&
            in_trigger_region(s, setup.attack.backdoor, setup.scales)) {
          ++trigger_steps;
          if (action_code(actions[i]) == setup.attack.backdoor.target_action) ++hits;
        }
      }
      const StepResult res = env.step(actions, rng);
      for (int i = 0; i < n; ++i)
        reward_sum += compute_reward(res.metrics.sbs_throughput_mbps[i], res.metrics.sbs_drop_rate[i],
                                     res.metrics.sbs_power_w[i], setup.reward);
      ee_sum += res.metrics.energy_efficiency;
      ++total_steps;
      raw = res.observations;
    }
  }
  PolicyEvaluation out;
  out.mean_reward = reward_sum / static_cast<double>(total_steps * n);
  out.system_ee = ee_sum / static_cast<double>(total_steps);
  if (trigger_steps > 0) out.victim_deep_sleep_rate = static_cast<double>(hits) / trigger_steps;
  return out;
}

}  // namespace frls
