#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "frls/agent.hpp"
#include "frls/radio.hpp"

namespace frls {

enum class AttackKind { None, FreeRider, Poison, Backdoor };

const char* to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& name);

struct PoisonSpec {
  double extra_reward = 10.0;  // R^ex
  double fraction = 0.05;      // share of stored experiences that get corrupted
};

struct BackdoorSpec {
  double trigger_load_mbps = 190.0;   // L_n at or above this is the backdoor pattern
  int target_action = 2;              // DeepSleep
  double synthetic_reward = 1000.0;
  double fraction = 0.05;             // share of each training batch drawn from the backdoor task
  double trigger_ue_load_mbps = 230.0;
  double trigger_start_fraction = 0.75;  // of rounds; the attacker fires the trigger from then on
  std::vector<int> victims;              // SBSs that get a trigger UE; empty means every benign SBS
};

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  std::vector<int> malicious;  // empty with kind != None means the default set
  PoisonSpec poison;
  BackdoorSpec backdoor;

  /// Malicious set after defaults: two free riders, or one poisoner / backdoor attacker.
  std::vector<int> resolved_malicious(int n_participants) const;
  bool is_malicious(int sbs, int n_participants) const;
  void validate(int n_participants) const;
};

/// Share of all training data across SBSs that is adversarial.
double poisoned_data_share(const AttackSpec& spec, int n_participants);

/// Call counters used to audit that adversarial paths only run when configured.
struct AttackAudit {
  std::uint64_t poison_calls = 0;
  std::uint64_t poisoned_samples = 0;
  std::uint64_t backdoor_samples = 0;
  std::uint64_t free_rider_uploads = 0;
};

/// A free rider re-submits the last global model it received.
ModelParams free_rider_upload(const ModelParams& last_global);

/// -1 for Active, +1 for either sleep mode.
int poison_sign(int action);

/// With probability `fraction`, shifts the reward by sign * extra_reward.
Experience poison_experience(Experience e, double extra_reward, double fraction, Rng& rng);

/// Synthetic backdoor-task experiences: every load entry at or above the
/// trigger (after scaling), action = target, reward = synthetic_reward.
std::vector<Experience> synth_backdoor_batch(const BackdoorSpec& spec,
                                             const ObservationScales& scales, int count,
                                             Rng& rng);

/// Backdoor sample built from a real experience: the SBS-load entries of both
/// states are raised into the trigger region and the label becomes the target.
Experience stamp_backdoor(const Experience& base, const BackdoorSpec& spec,
                           const ObservationScales& scales, Rng& rng);

/// True when the encoded observation lies in the backdoor pattern region.
bool in_trigger_region(const Features& s, const BackdoorSpec& spec,
                       const ObservationScales& scales);

/// Attaches a heavy-traffic UE to `sbs` so that its offered load crosses the trigger.
void trigger_backdoor(Network& env, int sbs, const BackdoorSpec& spec);
void clear_backdoor_trigger(Network& env, int sbs);

}  // namespace frls
