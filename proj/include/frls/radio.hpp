#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frls {

using Rng = std::mt19937_64;

/// Thrown when a physical quantity is outside its domain (negative distance, bad hour).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when configuration values or call shapes are inconsistent.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SleepMode : int { Active = 0, Sleep = 1, DeepSleep = 2 };

inline constexpr int kNumModes = 3;

const char* to_string(SleepMode mode);

struct PowerModel {
  double p_active_sbs = 20.0;  // W, consumption of an active SBS
  double p_mbs = 40.0;         // W, MBS consumption (always on)
  double sleep_factor = 0.5;
  double deep_sleep_factor = 0.35;
  double p_tx_sbs = 1.0;   // W, radiated
  double p_tx_mbs = 10.0;  // W, radiated

  void validate() const;
};

/// Diurnal load shape. The default is a two-harmonic residential curve with
/// its trough in the morning and its peak in the evening. Setting `hourly`
/// to 24 values replaces the curve with a piecewise-constant table.
struct TrafficProfile {
  double amplitude = 0.6;
  double peak_shift_hours = 14.0;
  double second_harmonic = 0.2;
  std::vector<double> hourly;

  void validate() const;

  /// Multiplier for an hour in [0, 24); normalized so the 24 integer hours average to 1.
  double multiplier(double hour) const;
  /// Same curve at an absolute time in hours, wrapped onto [0, 24).
  double at(double hours) const;

 private:
  double raw(double hour) const;
  double normalizer() const;
};

struct RadioConfig {
  int n_sbs = 8;
  int ues_per_sbs = 10;
  double bandwidth_sbs = 20e6;
  double bandwidth_mbs = 10e6;
  double rb_bandwidth = 180e3;
  double noise_density = 4e-21;  // W/Hz
  double radius_mbs = 400.0;
  double radius_sbs = 100.0;
  double sbs_ring_radius = 250.0;
  double carrier_freq = 2.4e9;
  int delay_budget = 2;  // steps a bit may wait before it is dropped
  int deep_sleep_wake_steps = 1;
  int steps_per_episode = 144;
  double slot_seconds = 1.0;  // transmission time simulated per step
  std::int64_t packet_bits = 500'000;
  double mean_load_mbps = 40.0;  // per SBS, before the diurnal multiplier
  double max_spectral_efficiency = 6.0;  // bits/s/Hz ceiling per RB; 0 disables
  TrafficProfile traffic;

  int rbs_sbs() const { return static_cast<int>(bandwidth_sbs / rb_bandwidth); }
  int rbs_mbs() const { return static_cast<int>(bandwidth_mbs / rb_bandwidth); }
  int n_ues() const { return n_sbs * ues_per_sbs; }
  void validate() const;
};

/// Free-space path gain (c / (4 pi f d))^2.
double channel_gain(double distance_m, const RadioConfig& config);

double power_draw(SleepMode mode, const PowerModel& power);

struct StepMetrics {
  Eigen::VectorXd sbs_throughput_mbps;  // b_n: delivered to the SBS's home UEs
  Eigen::VectorXd sbs_drop_rate;        // epsilon_n
  Eigen::VectorXd sbs_delay_steps;      // d_n
  Eigen::VectorXd sbs_power_w;          // P_n
  Eigen::VectorXd sbs_offered_mbps;     // arrivals of the SBS's home UEs
  Eigen::VectorXd ue_throughput_mbps;   // b_m
  Eigen::VectorXd ue_drop_rate;         // epsilon_m
  double mbs_power_w = 0.0;
  double mbs_offered_mbps = 0.0;
  double energy_efficiency = 0.0;  // bits per joule
};

/// Sum of UE throughput over total base-station power, in bits/J.
double energy_efficiency(const StepMetrics& metrics);

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(Position a, Position b);

struct QueueChunk {
  std::int64_t bits = 0;
  int age = 0;
};

enum class Server : int { Sbs = 0, Mbs = 1 };

struct UeState {
  int id = 0;
  int home_sbs = 0;
  Position position;
  std::deque<QueueChunk> queue;
  Server served_by = Server::Sbs;
  double extra_load_mbps = 0.0;  // added offered load (backdoor trigger UE)

  std::int64_t backlog_bits() const;
};

inline constexpr int kLoadHistory = 5;

struct NetworkState {
  std::int64_t step_index = 0;
  std::vector<SleepMode> modes;
  std::vector<int> wake_countdown;
  std::vector<UeState> ues;
  std::vector<Position> sbs_positions;
  std::vector<std::array<double, kLoadHistory>> load_history_sbs;  // oldest first
  std::array<double, kLoadHistory> load_history_mbs{};
  StepMetrics last_metrics;

  /// An SBS serves traffic only when Active and done waking up.
  bool serving(int sbs) const;
};

/// Per-step bit accounting for one serving cell (index n_sbs is the MBS).
struct CellLedger {
  std::int64_t backlog_in = 0;
  std::int64_t arrived = 0;
  std::int64_t served = 0;
  std::int64_t dropped = 0;
  std::int64_t backlog_out = 0;
};

/// Raw per-SBS features before scaling; the agent layer encodes them.
struct SbsObservation {
  bool active = false;
  std::array<double, kLoadHistory> sbs_load{};
  std::array<double, kLoadHistory> mbs_load{};
  double delay_steps = 0.0;
  double throughput_mbps = 0.0;
};

/// Resource-block allocation for one step: owner[cell][rb] is a UE id or -1.
struct RbAllocation {
  std::vector<std::vector<int>> owner;
};

struct StepResult {
  StepMetrics metrics;
  std::vector<SbsObservation> observations;
  std::vector<CellLedger> ledgers;
};

/// The heterogeneous network: one always-on MBS at the origin and n_sbs small
/// cells on a ring, each with its own UEs. Spectrum of the MBS is disjoint
/// from the SBS tier, which reuses the full band in every cell.
class Network {
 public:
  Network(RadioConfig config, PowerModel power);

  const RadioConfig& config() const { return config_; }
  const PowerModel& power() const { return power_; }
  const NetworkState& state() const { return state_; }
  NetworkState& mutable_state() { return state_; }
  const RbAllocation& allocation() const { return allocation_; }

  /// Places UEs, clears queues and histories. Every SBS starts Active.
  void reset(Rng& rng);

  StepResult step(const std::vector<SleepMode>& actions, Rng& rng);

  /// Observations from the current state (histories, last metrics).
  std::vector<SbsObservation> observe() const;

  /// Gain between a cell (SBS index, or n_sbs for the MBS) and a UE.
  double gain(int cell, int ue) const { return gains_(cell, ue); }

  /// SINR of `ue` served by `sbs` on resource block `rb` under the current allocation.
  double compute_sinr(int sbs, int ue, int rb) const;
  /// Downlink capacity in bits/s of the pair over the UE's allocated blocks.
  double link_capacity(int sbs, int ue) const;
  /// Capacity of the MBS toward `ue` over its allocated MBS blocks.
  double mbs_link_capacity(int ue) const;

  /// Re-run RB allocation for the current modes and queues (used by step and by tests).
  void allocate();

  /// Multiplier applied to arrivals at the given step.
  double traffic_multiplier_at(std::int64_t step) const;

  /// Adds (or removes with load 0) an extra offered load on one UE of `sbs`.
  void set_extra_load(int sbs, double load_mbps);

 private:
  void apply_transitions(const std::vector<SleepMode>& actions);
  double rb_rate(double sinr) const;
  void recompute_gains();

  RadioConfig config_;
  PowerModel power_;
  NetworkState state_;
  RbAllocation allocation_;
  Eigen::MatrixXd gains_;  // (n_sbs + 1) x n_ues
};

}  // namespace frls
