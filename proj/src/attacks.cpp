#include "frls/attacks.hpp"

#include <algorithm>

namespace frls {

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None:
      return "none";
    case AttackKind::FreeRider:
      return "free_rider";
    case AttackKind::Poison:
      return "poison";
    case AttackKind::Backdoor:
      return "backdoor";
  }
  return "unknown";
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "none") return AttackKind::None;
  if (name == "free_rider") return AttackKind::FreeRider;
  if (name == "poison") return AttackKind::Poison;
  if (name == "backdoor") return AttackKind::Backdoor;
  throw ConfigError("unknown attack kind '" + name + "'");
}

std::vector<int> AttackSpec::resolved_malicious(int n_participants) const {
  if (kind == AttackKind::None) return {};
  if (!malicious.empty()) {
    std::vector<int> out = malicious;
    std::sort(out.begin(), out.end());
    return out;
  }
  const int count = kind == AttackKind::FreeRider ? 2 : 1;
  std::vector<int> out;
  for (int i = 0; i < std::min(count, n_participants); ++i) out.push_back(i);
  return out;
}

bool AttackSpec::is_malicious(int sbs, int n_participants) const {
  const auto set = resolved_malicious(n_participants);
  return std::binary_search(set.begin(), set.end(), sbs);
}

void AttackSpec::validate(int n_participants) const {
  std::set<int> seen;
  for (int m : malicious) {
    if (m < 0 || m >= n_participants)
      throw ConfigError("attack.malicious: index " + std::to_string(m) + " is not a participant");
    if (!seen.insert(m).second) throw ConfigError("attack.malicious: duplicate index");
  }
  if (kind != AttackKind::None && static_cast<int>(resolved_malicious(n_participants).size()) >=
                                      n_participants)
    throw ConfigError("attack.malicious: at least one participant must be benign");
  if (!(poison.fraction >= 0 && poison.fraction <= 1))
    throw ConfigError("attack.poison.fraction: must be in [0, 1]");
  if (!(poison.extra_reward > 0)) throw ConfigError("attack.poison.extra_reward: must be positive");
  if (!(backdoor.fraction >= 0 && backdoor.fraction <= 1))
    throw ConfigError("attack.backdoor.fraction: must be in [0, 1]");
  if (backdoor.target_action < 0 || backdoor.target_action >= kNumActions)
    throw ConfigError("attack.backdoor.target_action: must be 0, 1 or 2");
  if (!(backdoor.trigger_load_mbps > 0))
    throw ConfigError("attack.backdoor.trigger_load_mbps: must be positive");
  if (!(backdoor.trigger_ue_load_mbps >= backdoor.trigger_load_mbps))
    throw ConfigError("attack.backdoor.trigger_ue_load_mbps: must reach the trigger load");
  if (!(backdoor.trigger_start_fraction >= 0 && backdoor.trigger_start_fraction <= 1))
    throw ConfigError("attack.backdoor.trigger_start_fraction: must be in [0, 1]");
  for (int v : backdoor.victims)
    if (v < 0 || v >= n_participants)
      throw ConfigError("attack.backdoor.victims: index " + std::to_string(v) + " out of range");
}

double poisoned_data_share(const AttackSpec& spec, int n_participants) {
  double fraction = 0.0;
  if (spec.kind == AttackKind::Poison) fraction = spec.poison.fraction;
  if (spec.kind == AttackKind::Backdoor) fraction = spec.backdoor.fraction;
  return fraction * static_cast<double>(spec.resolved_malicious(n_participants).size()) /
         n_participants;
}

ModelParams free_rider_upload(const ModelParams& last_global) { return last_global; }

int poison_sign(int action) { return action == action_code(SleepMode::Active) ? -1 : 1; }

Experience poison_experience(Experience e, double extra_reward, double fraction, Rng& rng) {
  if (fraction <= 0) return e;
  std::bernoulli_distribution hit(std::min(fraction, 1.0));
  if (hit(rng)) e.reward += poison_sign(e.action) * extra_reward;
  return e;
}

namespace {

Features synth_state(const BackdoorSpec& spec, const ObservationScales& scales, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Observation o;
  o.mode_indicator = unit(rng) < 0.5 ? 0.0 : 1.0;
  const double lo = spec.trigger_load_mbps;
  const double hi = std::max(lo, scales.sbs_load_mbps);
  for (auto& v : o.sbs_load) v = lo + (hi - lo) * unit(rng);
  for (auto& v : o.mbs_load) v = scales.mbs_load_mbps * unit(rng);
  o.delay_steps = scales.delay_steps * unit(rng);
  o.throughput_mbps = scales.throughput_mbps * unit(rng);
  return o.encode(scales);
}

}  // namespace

std::vector<Experience> synth_backdoor_batch(const BackdoorSpec& spec,
                                             const ObservationScales& scales, int count,
                                             Rng& rng) {
  if (count < 1) throw std::invalid_argument("synth_backdoor_batch: count must be >= 1");
  std::vector<Experience> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Experience e;
    e.state = synth_state(spec, scales, rng);
    e.action = spec.target_action;
    e.reward = spec.synthetic_reward;
    e.next_state = synth_state(spec, scales, rng);
    e.synthetic = true;
    out.push_back(std::move(e));
  }
  return out;
}

Experience stamp_backdoor(const Experience& base, const BackdoorSpec& spec,
                           const ObservationScales& scales, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = std::min(1.0, spec.trigger_load_mbps / scales.sbs_load_mbps);
  Experience e = base;
  for (int i = 1; i <= kLoadHistory; ++i) e.state[i] = lo + (1.0 - lo) * unit(rng);
  for (int i = 1; i <= kLoadHistory; ++i) e.next_state[i] = lo + (1.0 - lo) * unit(rng);
  e.action = spec.target_action;
  e.reward = spec.synthetic_reward;
  e.synthetic = true;
  return e;
}

bool in_trigger_region(const Features& s, const BackdoorSpec& spec,
                       const ObservationScales& scales) {
  const double threshold = std::min(1.0, spec.trigger_load_mbps / scales.sbs_load_mbps);
  for (int i = 1; i <= kLoadHistory; ++i)
    if (s[i] < threshold) return false;
  return true;
}

void trigger_backdoor(Network& env, int sbs, const BackdoorSpec& spec) {
  if (sbs < 0 || sbs >= env.config().n_sbs)
    throw ConfigError("trigger_backdoor: SBS index out of range");
  env.set_extra_load(sbs, spec.trigger_ue_load_mbps);
}

void clear_backdoor_trigger(Network& env, int sbs) { env.set_extra_load(sbs, 0.0); }

}  // namespace frls
