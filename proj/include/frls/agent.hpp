#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "frls/qnetwork.hpp"
#include "frls/radio.hpp"

namespace frls {

inline constexpr int kObservationDim = 1 + 2 * kLoadHistory + 2;  // 13
inline constexpr int kNumActions = kNumModes;

using Features = Eigen::Matrix<double, kObservationDim, 1>;
/// Flat Q-network weights in the frozen serialization order; the unit of federated exchange.
using ModelParams = Eigen::VectorXd;

/// Per-feature maxima used to squash raw observations into [0, 1].
struct ObservationScales {
  double sbs_load_mbps = 200.0;
  double mbs_load_mbps = 200.0;
  double throughput_mbps = 100.0;
  double delay_steps = 2.0;
};

/// State of one SBS: (delta, L_n history, L_0 history, delay, throughput).
struct Observation {
  double mode_indicator = 0.0;
  std::array<double, kLoadHistory> sbs_load{};  // oldest first, Mbps
  std::array<double, kLoadHistory> mbs_load{};
  double delay_steps = 0.0;
  double throughput_mbps = 0.0;

  static Observation from(const SbsObservation& raw);
  /// Order: delta, L_n[0..5], L_0[0..5], d, b; each clipped to [0, 1].
  Features encode(const ObservationScales& scales) const;
};

using Action = SleepMode;

inline int action_code(Action a) { return static_cast<int>(a); }
Action action_from_code(int code);

struct Experience {
  Features state = Features::Zero();
  int action = 0;
  double reward = 0.0;
  Features next_state = Features::Zero();
  bool synthetic = false;  // produced by an attack rather than by the environment
};

/// Fixed-capacity FIFO of experiences.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }
  /// i-th oldest stored experience.
  const Experience& at(std::size_t i) const;
  std::vector<Experience> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Experience> data_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  std::uint64_t insertions_ = 0;
};

struct RewardCoeffs {
  double throughput = 0.1;  // eta1, per Mbps
  double drop = 1.0;        // eta2
  double power = 0.01;      // eta3, per W
};

/// R = eta1 * b - eta2 * eps - eta3 * P.
double compute_reward(double throughput_mbps, double drop_rate, double power_w,
                      const RewardCoeffs& coeffs);

struct Hyperparams {
  double learning_rate = 0.01;
  double discount = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of total rounds
  int batch_size = 32;
  int buffer_capacity = 2000;
  int target_sync_period = 50;
  double momentum = 0.0;
  double max_grad_norm = 10.0;  // rescale gradients above this L2 norm; 0 disables
  std::vector<int> hidden = {64, 64};

  void validate() const;
  /// Linear decay from start to end across the first decay_fraction of rounds.
  double epsilon(int round, int total_rounds) const;
};

/// Argmax with ties broken by the lowest index.
int greedy_action(const Eigen::Ref<const Eigen::VectorXd>& q_values);

/// Epsilon-greedy choice. Always consumes one uniform draw; a second one only when exploring.
int select_action(const Eigen::Ref<const Eigen::VectorXd>& q_values, double epsilon, Rng& rng);

/// Per-SBS deep Q-learning agent with a periodically synced target copy.
class DqnAgent {
 public:
  explicit DqnAgent(Hyperparams hp);

  const Hyperparams& hyperparams() const { return hp_; }
  const QNetwork<double>& online() const { return online_; }
  const QNetwork<double>& target() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::uint64_t train_steps() const { return train_steps_; }

  void init_random(Rng& rng);

  Eigen::VectorXd q_values(const Features& s) const;
  int act(const Features& s, double epsilon, Rng& rng) const;

  /// One gradient step on the mean squared TD error of `batch`; returns the loss before the step.
  double train_step(const std::vector<Experience>& batch);

  ModelParams export_params() const;
  /// Replaces both the online and the target network.
  void import_params(const ModelParams& params);

 private:
  Hyperparams hp_;
  QNetwork<double> online_;
  QNetwork<double> target_;
  ReplayBuffer buffer_;
  Eigen::VectorXd velocity_;
  std::uint64_t train_steps_ = 0;
};

std::vector<int> network_layout(const Hyperparams& hp);

// Binary snapshot: "FRLS", u16 version, u32 count, then count little-endian float32.
inline constexpr std::uint16_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& out, const ModelParams& params);
ModelParams read_snapshot(std::istream& in);
void save_snapshot(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_snapshot(const std::filesystem::path& path);

/// FNV-1a over the little-endian float64 bytes; used to fingerprint global models.
std::uint64_t params_checksum(const ModelParams& params);

}  // namespace frls
