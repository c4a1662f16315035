#include "frls/agent.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace frls {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw std::runtime_error("snapshot: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

Observation Observation::from(const SbsObservation& raw) {
  Observation o;
  o.mode_indicator = raw.active ? 1.0 : 0.0;
  o.sbs_load = raw.sbs_load;
  o.mbs_load = raw.mbs_load;
  o.delay_steps = raw.delay_steps;
  o.throughput_mbps = raw.throughput_mbps;
  return o;
}

Features Observation::encode(const ObservationScales& scales) const {
  Features f;
  int i = 0;
  f[i++] = clip01(mode_indicator);
  for (double v : sbs_load) f[i++] = clip01(v / scales.sbs_load_mbps);
  for (double v : mbs_load) f[i++] = clip01(v / scales.mbs_load_mbps);
  f[i++] = scales.delay_steps > 0 ? clip01(delay_steps / scales.delay_steps) : 0.0;
  f[i++] = clip01(throughput_mbps / scales.throughput_mbps);
  return f;
}

Action action_from_code(int code) {
  if (code < 0 || code >= kNumActions) throw std::invalid_argument("action code out of range");
  return static_cast<Action>(code);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(capacity_);
}

void ReplayBuffer::push(Experience e) {
  ++insertions_;
  if (data_.size() < capacity_) {
    data_.push_back(std::move(e));
    return;
  }
  data_[head_] = std::move(e);
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("ReplayBuffer: index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<Experience> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<Experience> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(data_[pick(rng)]);
  return out;
}

double compute_reward(double throughput_mbps, double drop_rate, double power_w,
                      const RewardCoeffs& coeffs) {
  return coeffs.throughput * throughput_mbps - coeffs.drop * drop_rate - coeffs.power * power_w;
}

void Hyperparams::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("agent.learning_rate: must be positive");
  if (!(discount >= 0 && discount < 1)) throw ConfigError("agent.discount: need 0 <= gamma < 1");
  if (!(epsilon_end >= 0 && epsilon_end <= epsilon_start && epsilon_start <= 1))
    throw ConfigError("agent.epsilon: need 0 <= epsilon_end <= epsilon_start <= 1");
  if (!(epsilon_decay_fraction >= 0 && epsilon_decay_fraction <= 1))
    throw ConfigError("agent.epsilon_decay_fraction: must be in [0, 1]");
  if (batch_size < 1) throw ConfigError("agent.batch_size: must be >= 1");
  if (buffer_capacity < batch_size) throw ConfigError("agent.buffer_capacity: must be >= batch_size");
  if (target_sync_period < 1) throw ConfigError("agent.target_sync_period: must be >= 1");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("agent.momentum: must be in [0, 1)");
  if (!(max_grad_norm >= 0)) throw ConfigError("agent.max_grad_norm: must be >= 0");
  for (int h : hidden)
    if (h < 1) throw ConfigError("agent.hidden: layer sizes must be positive");
}

double Hyperparams::epsilon(int round, int total_rounds) const {
  const double horizon = epsilon_decay_fraction * total_rounds;
  if (horizon <= 0 || round >= horizon) return epsilon_end;
  const double t = round / horizon;
  return epsilon_start + (epsilon_end - epsilon_start) * t;
}

int greedy_action(const Eigen::Ref<const Eigen::VectorXd>& q_values) {
  int best = 0;
  for (int a = 1; a < q_values.size(); ++a)
    if (q_values[a] > q_values[best]) best = a;
  return best;
}

int select_action(const Eigen::Ref<const Eigen::VectorXd>& q_values, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q_values.size()) - 1);
    return pick(rng);
  }
  return greedy_action(q_values);
}

std::vector<int> network_layout(const Hyperparams& hp) {
  std::vector<int> sizes{kObservationDim};
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(kNumActions);
  return sizes;
}

DqnAgent::DqnAgent(Hyperparams hp)
    : hp_(std::move(hp)),
      online_(network_layout(hp_)),
      target_(network_layout(hp_)),
      buffer_(static_cast<std::size_t>(hp_.buffer_capacity)) {
  hp_.validate();
}

void DqnAgent::init_random(Rng& rng) {
  online_.init_random(rng);
  target_ = online_;
  velocity_.resize(0);
}

Eigen::VectorXd DqnAgent::q_values(const Features& s) const { return online_.forward_one(s); }

int DqnAgent::act(const Features& s, double epsilon, Rng& rng) const {
  return select_action(q_values(s), epsilon, rng);
}

double DqnAgent::train_step(const std::vector<Experience>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(kObservationDim, n), next_states(kObservationDim, n);
  std::vector<int> actions(batch.size());
  Eigen::VectorXd rewards(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = batch[i].state;
    next_states.col(i) = batch[i].next_state;
    actions[i] = batch[i].action;
    rewards[i] = batch[i].reward;
  }
  const Eigen::MatrixXd next_q = target_.forward(next_states);
  const Eigen::VectorXd targets =
      rewards + hp_.discount * next_q.colwise().maxCoeff().transpose();

  Eigen::VectorXd gradient;
  const double loss = online_.td_loss(states, actions, targets, &gradient);
  if (hp_.max_grad_norm > 0) {
    const double norm = gradient.norm();
    if (norm > hp_.max_grad_norm) gradient *= hp_.max_grad_norm / norm;
  }
  if (hp_.momentum > 0) {
    if (velocity_.size() != gradient.size()) velocity_ = Eigen::VectorXd::Zero(gradient.size());
    velocity_ = hp_.momentum * velocity_ + gradient;
    online_.descend(velocity_, hp_.learning_rate);
  } else {
    online_.descend(gradient, hp_.learning_rate);
  }

  ++train_steps_;
  if (train_steps_ % static_cast<std::uint64_t>(hp_.target_sync_period) == 0) target_ = online_;
  return loss;
}

ModelParams DqnAgent::export_params() const { return online_.flatten(); }

void DqnAgent::import_params(const ModelParams& params) {
  online_.unflatten(params);
  target_ = online_;
}

void write_snapshot(std::ostream& out, const ModelParams& params) {
  out.write("FRLS", 4);
  put_le<std::uint16_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) put_le<float>(out, static_cast<float>(params[i]));
  if (!out) throw std::runtime_error("snapshot: write failed");
}

ModelParams read_snapshot(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FRLS", 4) != 0)
    throw std::runtime_error("snapshot: bad magic");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kSnapshotVersion) throw std::runtime_error("snapshot: unsupported version");
  const auto count = get_le<std::uint32_t>(in);
  ModelParams params(count);
  for (std::uint32_t i = 0; i < count; ++i) params[i] = get_le<float>(in);
  return params;
}

void save_snapshot(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path.string());
  write_snapshot(out, params);
}

ModelParams load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path.string());
  return read_snapshot(in);
}

std::uint64_t params_checksum(const ModelParams& params) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::uint64_t bits;
    const double v = params[i];
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      hash ^= (bits >> (8 * b)) & 0xffU;
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

}  // namespace frls
