#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frls/agent.hpp"
#include "frls/attacks.hpp"
#include "frls/defense.hpp"
#include "frls/radio.hpp"

namespace frls {

enum class LearningMode { Federated, Independent };
enum class Weighting { Uniform, Samples };
enum class DefenseKind { None, Krum, RefinedKrum };

const char* to_string(LearningMode mode);
LearningMode learning_mode_from_string(const std::string& name);
const char* to_string(Weighting weighting);
Weighting weighting_from_string(const std::string& name);
const char* to_string(DefenseKind kind);
DefenseKind defense_kind_from_string(const std::string& name);

struct FederationConfig {
  int rounds = 60;
  int local_steps_per_round = 0;  // 0: one episode
  LearningMode mode = LearningMode::Federated;
  Weighting weighting = Weighting::Uniform;
  std::vector<double> weights;  // explicit w_n; overrides `weighting` when set

  void validate(int n_participants) const;
};

struct DefenseConfig {
  DefenseKind kind = DefenseKind::None;
  double kappa = 2.0;
  DistanceMode distance = DistanceMode::Scalar;
};

std::vector<double> uniform_weights(int n);

/// theta_G = sum_n w_n theta_n, evaluated as theta_0 + sum_{n>0} w_n (theta_n - theta_0)
/// in index order (equal because the weights sum to 1).
ModelParams fedavg(const std::vector<ModelParams>& models, const std::vector<double>& weights);

/// Everything a simulation needs apart from the seed.
struct SimulationSetup {
  RadioConfig radio;
  PowerModel power;
  Hyperparams agent;
  RewardCoeffs reward;
  ObservationScales scales;
  FederationConfig federation;
  AttackSpec attack;
  DefenseConfig defense;

  void validate() const;
  int steps_per_round() const;
};

struct RoundReport {
  int round = 0;
  double epsilon = 0.0;
  Eigen::VectorXd mean_reward;  // per SBS, over the round's steps
  Eigen::VectorXd throughput_mbps;
  Eigen::VectorXd drop_rate;
  Eigen::VectorXd power_w;
  double system_ee = 0.0;  // mean over steps, bits/J
  std::vector<int> accepted;
  std::vector<int> rejected;
  std::vector<int> flagged;    // handed to MBS control for the next round
  std::vector<int> taken_over; // under MBS control during this round
  std::optional<std::uint64_t> global_checksum;
  std::optional<KrumReport> krum;
  bool trigger_active = false;
  double backdoor_success = -1.0;  // deep-sleep rate of victims in the trigger region; -1 if unmeasured
  double mean_reward_all() const { return mean_reward.mean(); }
};

/// Per-SBS random streams derived from one seed; stream 0 drives the network.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

/// The federated sleep-control loop: one shared network, one DQN agent per
/// SBS, an in-process aggregation server at the MBS.
class Federation {
 public:
  Federation(SimulationSetup setup, std::uint64_t seed);

  RoundReport run_round();
  std::vector<RoundReport> run();

  int round() const { return round_; }
  int n_participants() const { return setup_.radio.n_sbs; }
  const SimulationSetup& setup() const { return setup_; }
  const std::vector<DqnAgent>& agents() const { return agents_; }
  DqnAgent& agent(int i) { return agents_.at(i); }
  const ModelParams& global() const { return global_; }
  const Network& network() const { return network_; }
  const AttackAudit& audit() const { return audit_; }
  const std::vector<int>& taken_over() const { return takeover_; }

  /// Forces SBSs under MBS control for the following rounds (tests use this to cut
  /// the action path from an agent to the network).
  void set_takeover(std::vector<int> sbs) { takeover_ = std::move(sbs); }
  /// Observed SBS-load features (scaled, most recent entry) of benign experiences.
  const std::vector<double>& benign_load_samples() const { return benign_loads_; }

 private:
  bool free_rider(int i) const;
  bool poisoner(int i) const;
  bool backdoor_attacker(int i) const;
  std::vector<int> trigger_victims() const;
  bool trigger_round(int round) const;

  SimulationSetup setup_;
  Network network_;
  Rng env_rng_;
  std::vector<Rng> agent_rngs_;
  std::vector<DqnAgent> agents_;
  std::vector<int> malicious_;
  ModelParams global_;
  std::vector<int> takeover_;
  AttackAudit audit_;
  std::vector<double> benign_loads_;
  int round_ = 0;
};

struct PolicyEvaluation {
  double mean_reward = 0.0;
  double system_ee = 0.0;
  double victim_deep_sleep_rate = -1.0;  // over victim steps in the trigger region
};

/// Greedy rollout of one shared model on every SBS, no learning. Triggers are
/// placed on `victims` from the first step when `trigger` is set.
PolicyEvaluation evaluate_policy(const SimulationSetup& setup, const ModelParams& params,
                                 std::uint64_t seed, int episodes, bool trigger,
                                 const std::vector<int>& victims);

}  // namespace frls
