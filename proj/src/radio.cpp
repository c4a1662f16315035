#include "frls/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace frls {

namespace {

constexpr double kSpeedOfLight = 2.998e8;

}  // namespace

const char* to_string(SleepMode mode) {
  switch (mode) {
    case SleepMode::Active:
      return "active";
    case SleepMode::Sleep:
      return "sleep";
    case SleepMode::DeepSleep:
      return "deep_sleep";
  }
  return "unknown";
}

void PowerModel::validate() const {
  if (!(p_active_sbs > 0 && p_mbs > 0 && p_tx_sbs > 0 && p_tx_mbs > 0))
    throw ConfigError("power: all powers must be positive");
  if (!(0 < deep_sleep_factor && deep_sleep_factor < sleep_factor && sleep_factor < 1))
    throw ConfigError("power: need 0 < deep_sleep_factor < sleep_factor < 1");
}

void TrafficProfile::validate() const {
  if (!hourly.empty()) {
    if (hourly.size() != 24) throw ConfigError("traffic.hourly: expected 24 values");
    for (double v : hourly)
      if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("traffic.hourly: values must be >= 0");
    if (std::accumulate(hourly.begin(), hourly.end(), 0.0) <= 0)
      throw ConfigError("traffic.hourly: all-zero profile");
  } else if (normalizer() <= 0) {
    throw ConfigError("traffic: profile is identically zero");
  }
}

double TrafficProfile::raw(double hour) const {
  if (!hourly.empty()) return hourly[static_cast<std::size_t>(hour) % 24];
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double v = 1.0 + amplitude * std::sin(two_pi * (hour - peak_shift_hours) / 24.0) -
                   second_harmonic * std::cos(2.0 * two_pi * hour / 24.0);
  return std::max(0.0, v);
}

double TrafficProfile::normalizer() const {
  double sum = 0.0;
  for (int h = 0; h < 24; ++h) sum += raw(h);
  return sum / 24.0;
}

double TrafficProfile::multiplier(double hour) const {
  if (!(hour >= 0.0 && hour < 24.0)) throw DomainError("traffic multiplier: hour outside [0, 24)");
  return raw(hour) / normalizer();
}

double TrafficProfile::at(double hours) const {
  double wrapped = std::fmod(hours, 24.0);
  if (wrapped < 0) wrapped += 24.0;
  if (wrapped >= 24.0) wrapped = 0.0;
  return multiplier(wrapped);
}

void RadioConfig::validate() const {
  if (n_sbs < 2) throw ConfigError("radio.n_sbs: need at least 2 SBSs");
  if (ues_per_sbs < 1) throw ConfigError("radio.ues_per_sbs: need at least 1 UE per SBS");
  if (!(rb_bandwidth > 0)) throw ConfigError("radio.rb_bandwidth: must be positive");
  if (rbs_sbs() < 1) throw ConfigError("radio.bandwidth_sbs: fewer than one resource block");
  if (rbs_mbs() < 1) throw ConfigError("radio.bandwidth_mbs: fewer than one resource block");
  if (!(noise_density > 0)) throw ConfigError("radio.noise_density: must be positive");
  if (!(radius_sbs > 0 && radius_sbs < radius_mbs))
    throw ConfigError("radio.radius_sbs: need 0 < radius_sbs < radius_mbs");
  if (!(sbs_ring_radius + radius_sbs <= radius_mbs))
    throw ConfigError("radio.sbs_ring_radius: small cells must lie inside the macro cell");
  if (!(carrier_freq > 0)) throw ConfigError("radio.carrier_freq: must be positive");
  if (delay_budget < 0) throw ConfigError("radio.delay_budget: must be >= 0");
  if (deep_sleep_wake_steps < 0) throw ConfigError("radio.deep_sleep_wake_steps: must be >= 0");
  if (steps_per_episode < 1) throw ConfigError("radio.steps_per_episode: must be >= 1");
  if (!(slot_seconds > 0)) throw ConfigError("radio.slot_seconds: must be positive");
  if (packet_bits < 1) throw ConfigError("radio.packet_bits: must be >= 1");
  if (!(mean_load_mbps >= 0)) throw ConfigError("radio.mean_load_mbps: must be >= 0");
  traffic.validate();
}

double channel_gain(double distance_m, const RadioConfig& config) {
  if (!(distance_m > 0)) throw DomainError("channel_gain: distance must be positive");
  const double ratio = kSpeedOfLight / (4.0 * std::numbers::pi * config.carrier_freq * distance_m);
  return ratio * ratio;
}

double power_draw(SleepMode mode, const PowerModel& power) {
  switch (mode) {
    case SleepMode::Active:
      return power.p_active_sbs;
    case SleepMode::Sleep:
      return power.sleep_factor * power.p_active_sbs;
    case SleepMode::DeepSleep:
      return power.deep_sleep_factor * power.p_active_sbs;
  }
  return power.p_active_sbs;
}

double energy_efficiency(const StepMetrics& metrics) {
  const double bits_per_second = metrics.ue_throughput_mbps.sum() * 1e6;
  return bits_per_second / (metrics.sbs_power_w.sum() + metrics.mbs_power_w);
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::int64_t UeState::backlog_bits() const {
  std::int64_t total = 0;
  for (const auto& chunk : queue) total += chunk.bits;
  return total;
}

bool NetworkState::serving(int sbs) const {
  return modes[sbs] == SleepMode::Active && wake_countdown[sbs] == 0;
}

Network::Network(RadioConfig config, PowerModel power) : config_(std::move(config)), power_(power) {
  config_.validate();
  power_.validate();
}

void Network::reset(Rng& rng) {
  const int n = config_.n_sbs;
  state_ = NetworkState{};
  state_.modes.assign(n, SleepMode::Active);
  state_.wake_countdown.assign(n, 0);
  state_.load_history_sbs.assign(n, {});
  state_.sbs_positions.resize(n);
  for (int s = 0; s < n; ++s) {
    const double angle = 2.0 * std::numbers::pi * s / n;
    state_.sbs_positions[s] = {config_.sbs_ring_radius * std::cos(angle),
                               config_.sbs_ring_radius * std::sin(angle)};
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  state_.ues.resize(config_.n_ues());
  for (int m = 0; m < config_.n_ues(); ++m) {
    auto& ue = state_.ues[m];
    ue.id = m;
    ue.home_sbs = m / config_.ues_per_sbs;
    const double r = std::max(1.0, config_.radius_sbs * std::sqrt(unit(rng)));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const Position& home = state_.sbs_positions[ue.home_sbs];
    ue.position = {home.x + r * std::cos(theta), home.y + r * std::sin(theta)};
  }
  recompute_gains();
  state_.last_metrics = StepMetrics{};
  auto& lm = state_.last_metrics;
  lm.sbs_throughput_mbps = lm.sbs_drop_rate = lm.sbs_delay_steps = lm.sbs_offered_mbps =
      Eigen::VectorXd::Zero(n);
  lm.sbs_power_w = Eigen::VectorXd::Constant(n, power_.p_active_sbs);
  lm.ue_throughput_mbps = lm.ue_drop_rate = Eigen::VectorXd::Zero(config_.n_ues());
  lm.mbs_power_w = power_.p_mbs;
  allocate();
}

void Network::recompute_gains() {
  const int cells = config_.n_sbs + 1;
  gains_.resize(cells, config_.n_ues());
  for (int m = 0; m < config_.n_ues(); ++m) {
    const Position p = state_.ues[m].position;
    for (int c = 0; c < config_.n_sbs; ++c)
      gains_(c, m) = channel_gain(std::max(1.0, distance(p, state_.sbs_positions[c])), config_);
    gains_(config_.n_sbs, m) = channel_gain(std::max(1.0, distance(p, Position{})), config_);
  }
}

double Network::traffic_multiplier_at(std::int64_t step) const {
  const auto slot = step % config_.steps_per_episode;
  return config_.traffic.multiplier(24.0 * static_cast<double>(slot) / config_.steps_per_episode);
}

void Network::set_extra_load(int sbs, double load_mbps) {
  if (sbs < 0 || sbs >= config_.n_sbs) throw ConfigError("set_extra_load: SBS index out of range");
  state_.ues[sbs * config_.ues_per_sbs].extra_load_mbps = load_mbps;
}

void Network::apply_transitions(const std::vector<SleepMode>& actions) {
  for (int s = 0; s < config_.n_sbs; ++s) {
    const SleepMode next = actions[s];
    SleepMode& mode = state_.modes[s];
    int& countdown = state_.wake_countdown[s];
    if (next != SleepMode::Active) {
      mode = next;
      countdown = 0;
    } else if (mode == SleepMode::DeepSleep) {
      mode = SleepMode::Active;
      countdown = config_.deep_sleep_wake_steps;
    } else {
      mode = SleepMode::Active;
    }
  }
}

double Network::rb_rate(double sinr) const {
  double se = std::log2(1.0 + sinr);
  if (config_.max_spectral_efficiency > 0) se = std::min(se, config_.max_spectral_efficiency);
  return config_.rb_bandwidth * se;
}

void Network::allocate() {
  const int n = config_.n_sbs;
  allocation_.owner.assign(n + 1, {});
  std::vector<std::vector<int>> attached(n + 1);
  for (const auto& ue : state_.ues) {
    if (ue.queue.empty()) continue;
    attached[ue.served_by == Server::Sbs ? ue.home_sbs : n].push_back(ue.id);
  }
  const double noise = config_.rb_bandwidth * config_.noise_density;
  for (int c = 0; c <= n; ++c) {
    const int rbs = c < n ? config_.rbs_sbs() : config_.rbs_mbs();
    auto& owner = allocation_.owner[c];
    owner.assign(rbs, -1);
    const auto& users = attached[c];
    if (users.empty()) continue;
    // Size each UE's need against worst-case interference (every other SBS on
    // every block); the realized SINR can only be higher.
    std::vector<double> need(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      const int m = users[i];
      double sinr;
      if (c < n) {
        double interference = 0.0;
        for (int other = 0; other < n; ++other)
          if (other != c && state_.serving(other)) interference += gains_(other, m) * power_.p_tx_sbs;
        sinr = gains_(c, m) * power_.p_tx_sbs / (interference + noise);
      } else {
        sinr = gains_(n, m) * power_.p_tx_mbs / noise;
      }
      const double per_rb_bits = rb_rate(sinr) * config_.slot_seconds;
      need[i] = per_rb_bits > 0 ? static_cast<double>(state_.ues[m].backlog_bits()) / per_rb_bits
                                : static_cast<double>(rbs);
    }
    // Round-robin over UEs that still need blocks, starting at a per-cell offset
    // so that lightly loaded neighbours occupy different parts of the band.
    const auto k = users.size();
    std::size_t turn = static_cast<std::size_t>(state_.step_index % static_cast<std::int64_t>(k));
    const int start = c < n ? (c * rbs) / n : 0;
    for (int i = 0; i < rbs; ++i) {
      std::size_t tries = 0;
      while (tries < k && need[turn] <= 0) {
        turn = (turn + 1) % k;
        ++tries;
      }
      if (tries == k) break;
      owner[(start + i) % rbs] = users[turn];
      need[turn] -= 1.0;
      turn = (turn + 1) % k;
    }
  }
}

double Network::compute_sinr(int sbs, int ue, int rb) const {
  if (sbs < 0 || sbs >= config_.n_sbs || ue < 0 || ue >= config_.n_ues() || rb < 0 ||
      rb >= config_.rbs_sbs())
    throw ConfigError("compute_sinr: index out of range");
  if (allocation_.owner[sbs][rb] != ue)
    throw ConfigError("compute_sinr: resource block not allocated to this SBS/UE pair");
  double interference = 0.0;
  for (int other = 0; other < config_.n_sbs; ++other) {
    if (other == sbs || !state_.serving(other)) continue;
    if (allocation_.owner[other][rb] < 0) continue;
    interference += gains_(other, ue) * power_.p_tx_sbs;
  }
  const double noise = config_.rb_bandwidth * config_.noise_density;
  return gains_(sbs, ue) * power_.p_tx_sbs / (interference + noise);
}

double Network::link_capacity(int sbs, int ue) const {
  if (sbs < 0 || sbs >= config_.n_sbs || ue < 0 || ue >= config_.n_ues())
    throw ConfigError("link_capacity: index out of range");
  if (!state_.serving(sbs)) return 0.0;
  double capacity = 0.0;
  const auto& owner = allocation_.owner[sbs];
  for (int r = 0; r < static_cast<int>(owner.size()); ++r)
    if (owner[r] == ue) capacity += rb_rate(compute_sinr(sbs, ue, r));
  return capacity;
}

double Network::mbs_link_capacity(int ue) const {
  const double noise = config_.rb_bandwidth * config_.noise_density;
  const double sinr = gains_(config_.n_sbs, ue) * power_.p_tx_mbs / noise;
  const double per_rb = rb_rate(sinr);
  double capacity = 0.0;
  for (int owner : allocation_.owner[config_.n_sbs])
    if (owner == ue) capacity += per_rb;
  return capacity;
}

StepResult Network::step(const std::vector<SleepMode>& actions, Rng& rng) {
  const int n = config_.n_sbs;
  const int n_ue = config_.n_ues();
  if (static_cast<int>(actions.size()) != n)
    throw ConfigError("step: expected one action per SBS");

  apply_transitions(actions);

  StepResult result;
  result.ledgers.assign(n + 1, {});
  std::vector<std::int64_t> arrived(n_ue, 0), served(n_ue, 0), dropped(n_ue, 0);

  const double multiplier = traffic_multiplier_at(state_.step_index);
  const double base_bps = config_.mean_load_mbps * 1e6 * multiplier / config_.ues_per_sbs;
  for (auto& ue : state_.ues) {
    ue.served_by = state_.serving(ue.home_sbs) ? Server::Sbs : Server::Mbs;
    const int cell = ue.served_by == Server::Sbs ? ue.home_sbs : n;
    result.ledgers[cell].backlog_in += ue.backlog_bits();
    const double mean_packets =
        (base_bps + ue.extra_load_mbps * 1e6) * config_.slot_seconds / config_.packet_bits;
    std::int64_t packets = 0;
    if (mean_packets > 0) packets = std::poisson_distribution<std::int64_t>(mean_packets)(rng);
    const std::int64_t bits = packets * config_.packet_bits;
    if (bits > 0) ue.queue.push_back({bits, 0});
    arrived[ue.id] = bits;
    result.ledgers[cell].arrived += bits;
  }

  allocate();

  for (auto& ue : state_.ues) {
    const double capacity = ue.served_by == Server::Sbs ? link_capacity(ue.home_sbs, ue.id)
                                                        : mbs_link_capacity(ue.id);
    auto budget = static_cast<std::int64_t>(std::floor(capacity * config_.slot_seconds));
    while (budget > 0 && !ue.queue.empty()) {
      auto& head = ue.queue.front();
      const std::int64_t take = std::min(budget, head.bits);
      head.bits -= take;
      budget -= take;
      served[ue.id] += take;
      if (head.bits == 0) ue.queue.pop_front();
    }
    for (auto& chunk : ue.queue) ++chunk.age;
    while (!ue.queue.empty() && ue.queue.front().age > config_.delay_budget) {
      dropped[ue.id] += ue.queue.front().bits;
      ue.queue.pop_front();
    }
    const int cell = ue.served_by == Server::Sbs ? ue.home_sbs : n;
    auto& ledger = result.ledgers[cell];
    ledger.served += served[ue.id];
    ledger.dropped += dropped[ue.id];
    ledger.backlog_out += ue.backlog_bits();
  }

  StepMetrics& m = result.metrics;
  m.sbs_throughput_mbps = m.sbs_drop_rate = m.sbs_delay_steps = m.sbs_power_w =
      m.sbs_offered_mbps = Eigen::VectorXd::Zero(n);
  m.ue_throughput_mbps = m.ue_drop_rate = Eigen::VectorXd::Zero(n_ue);
  const double to_mbps = 1.0 / (config_.slot_seconds * 1e6);
  std::vector<std::int64_t> home_served(n, 0), home_dropped(n, 0), home_backlog(n, 0),
      home_arrived(n, 0);
  std::int64_t mbs_arrived = 0;
  for (const auto& ue : state_.ues) {
    const int h = ue.home_sbs;
    m.ue_throughput_mbps[ue.id] = static_cast<double>(served[ue.id]) * to_mbps;
    const std::int64_t departed = served[ue.id] + dropped[ue.id];
    m.ue_drop_rate[ue.id] =
        departed > 0 ? static_cast<double>(dropped[ue.id]) / static_cast<double>(departed) : 0.0;
    home_served[h] += served[ue.id];
    home_dropped[h] += dropped[ue.id];
    home_backlog[h] += ue.backlog_bits();
    home_arrived[h] += arrived[ue.id];
    if (ue.served_by == Server::Mbs) mbs_arrived += arrived[ue.id];
  }
  for (int s = 0; s < n; ++s) {
    m.sbs_throughput_mbps[s] = static_cast<double>(home_served[s]) * to_mbps;
    m.sbs_offered_mbps[s] = static_cast<double>(home_arrived[s]) * to_mbps;
    const std::int64_t departed = home_served[s] + home_dropped[s];
    m.sbs_drop_rate[s] =
        departed > 0 ? static_cast<double>(home_dropped[s]) / static_cast<double>(departed) : 0.0;
    double delay = 0.0;
    if (home_backlog[s] > 0) {
      delay = home_served[s] > 0
                  ? static_cast<double>(home_backlog[s]) / static_cast<double>(home_served[s])
                  : config_.delay_budget;
      delay = std::min(delay, static_cast<double>(config_.delay_budget));
    }
    m.sbs_delay_steps[s] = delay;
    m.sbs_power_w[s] = power_draw(state_.modes[s], power_);
  }
  m.mbs_power_w = power_.p_mbs;
  m.mbs_offered_mbps = static_cast<double>(mbs_arrived) * to_mbps;
  m.energy_efficiency = energy_efficiency(m);

  for (int s = 0; s < n; ++s) {
    auto& hist = state_.load_history_sbs[s];
    std::rotate(hist.begin(), hist.begin() + 1, hist.end());
    hist.back() = m.sbs_offered_mbps[s];
  }
  std::rotate(state_.load_history_mbs.begin(), state_.load_history_mbs.begin() + 1,
              state_.load_history_mbs.end());
  state_.load_history_mbs.back() = m.mbs_offered_mbps;

  for (int s = 0; s < n; ++s)
    if (state_.wake_countdown[s] > 0) --state_.wake_countdown[s];

  state_.last_metrics = m;
  ++state_.step_index;
  result.observations = observe();
  return result;
}

std::vector<SbsObservation> Network::observe() const {
  std::vector<SbsObservation> out(config_.n_sbs);
  const auto& lm = state_.last_metrics;
  for (int s = 0; s < config_.n_sbs; ++s) {
    auto& o = out[s];
    o.active = state_.serving(s);
    o.sbs_load = state_.load_history_sbs[s];
    o.mbs_load = state_.load_history_mbs;
    o.delay_steps = lm.sbs_delay_steps.size() ? lm.sbs_delay_steps[s] : 0.0;
    o.throughput_mbps = lm.sbs_throughput_mbps.size() ? lm.sbs_throughput_mbps[s] : 0.0;
  }
  return out;
}

}  // namespace frls
