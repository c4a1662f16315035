#include "frls/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace frls {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// CamelCase or snake_case to snake_case, so "FreeRider" and "free_rider" both parse.
std::string snake(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (i > 0 && name[i - 1] != '_') out.push_back('_');
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      out.push_back(c == '-' ? '_' : c);
    }
  }
  return out;
}

/// Walks one JSON object, remembering which keys were read so leftovers can be reported.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object())
      throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) throw ConfigError(join(path_, key) + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  Reader child(const std::string& key) {
    static const json empty = json::object();
    return has(key) ? Reader(node_.at(key), join(path_, key)) : Reader(empty, join(path_, key));
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(join(path_, key) + ": expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(join(path_, key) + ": expected an integer");
    if (std::is_unsigned_v<Int> && v.is_number_integer() && !v.is_number_unsigned() &&
        v.get<std::int64_t>() < 0)
      throw ConfigError(join(path_, key) + ": expected a non-negative integer");
    out = v.get<Int>();
  }

  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(join(path_, key) + ": expected a string");
    out = v.get<std::string>();
  }

  template <typename T, typename Parse>
  void enumeration(const std::string& key, T& out, Parse parse) {
    std::string name;
    text(key, name);
    if (name.empty()) return;
    try {
      out = parse(snake(name));
    } catch (const ConfigError& e) {
      throw ConfigError(join(path_, key) + ": " + e.what());
    }
  }

  template <typename T, typename Element>
  void list(const std::string& key, std::vector<T>& out, Element element) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    const std::string where = join(path_, key);
    if (!v.is_array()) throw ConfigError(where + ": expected a list");
    std::vector<T> values;
    for (std::size_t i = 0; i < v.size(); ++i)
      values.push_back(element(v[i], where + "[" + std::to_string(i) + "]"));
    out = std::move(values);
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double number_element(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

int int_element(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<int>();
}

std::uint64_t seed_element(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(where + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

template <typename Parse>
auto enum_element(Parse parse) {
  return [parse](const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    try {
      return parse(snake(v.get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  };
}

void read_radio(Reader r, RadioConfig& c) {
  r.integer("n_sbs", c.n_sbs);
  r.integer("ues_per_sbs", c.ues_per_sbs);
  r.number("bandwidth_sbs", c.bandwidth_sbs);
  r.number("bandwidth_mbs", c.bandwidth_mbs);
  r.number("rb_bandwidth", c.rb_bandwidth);
  r.number("noise_density", c.noise_density);
  r.number("radius_mbs", c.radius_mbs);
  r.number("radius_sbs", c.radius_sbs);
  r.number("sbs_ring_radius", c.sbs_ring_radius);
  r.number("carrier_freq", c.carrier_freq);
  r.integer("delay_budget", c.delay_budget);
  r.integer("deep_sleep_wake_steps", c.deep_sleep_wake_steps);
  r.integer("steps_per_episode", c.steps_per_episode);
  r.number("slot_seconds", c.slot_seconds);
  r.integer("packet_bits", c.packet_bits);
  r.number("mean_load_mbps", c.mean_load_mbps);
  r.number("max_spectral_efficiency", c.max_spectral_efficiency);
  Reader t = r.child("traffic");
  t.number("amplitude", c.traffic.amplitude);
  t.number("peak_shift_hours", c.traffic.peak_shift_hours);
  t.number("second_harmonic", c.traffic.second_harmonic);
  t.list("hourly", c.traffic.hourly, number_element);
}

void read_power(Reader r, PowerModel& p) {
  r.number("p_active_sbs", p.p_active_sbs);
  r.number("p_mbs", p.p_mbs);
  r.number("sleep_factor", p.sleep_factor);
  r.number("deep_sleep_factor", p.deep_sleep_factor);
  r.number("p_tx_sbs", p.p_tx_sbs);
  r.number("p_tx_mbs", p.p_tx_mbs);
}

void read_agent(Reader r, SimulationSetup& s) {
  Hyperparams& h = s.agent;
  r.number("learning_rate", h.learning_rate);
  r.number("discount", h.discount);
  r.number("epsilon_start", h.epsilon_start);
  r.number("epsilon_end", h.epsilon_end);
  r.number("epsilon_decay_fraction", h.epsilon_decay_fraction);
  r.integer("batch_size", h.batch_size);
  r.integer("buffer_capacity", h.buffer_capacity);
  r.integer("target_sync_period", h.target_sync_period);
  r.number("momentum", h.momentum);
  r.number("max_grad_norm", h.max_grad_norm);
  r.list("hidden", h.hidden, int_element);
  Reader w = r.child("reward");
  w.number("throughput", s.reward.throughput);
  w.number("drop", s.reward.drop);
  w.number("power", s.reward.power);
  Reader sc = r.child("scales");
  sc.number("sbs_load_mbps", s.scales.sbs_load_mbps);
  sc.number("mbs_load_mbps", s.scales.mbs_load_mbps);
  sc.number("throughput_mbps", s.scales.throughput_mbps);
  sc.number("delay_steps", s.scales.delay_steps);
}

void read_attack(Reader r, AttackSpec& a) {
  r.enumeration("kind", a.kind, attack_kind_from_string);
  r.list("malicious", a.malicious, int_element);
  Reader p = r.child("poison");
  p.number("extra_reward", a.poison.extra_reward);
  p.number("fraction", a.poison.fraction);
  Reader b = r.child("backdoor");
  b.number("trigger_load_mbps", a.backdoor.trigger_load_mbps);
  b.integer("target_action", a.backdoor.target_action);
  b.number("synthetic_reward", a.backdoor.synthetic_reward);
  b.number("fraction", a.backdoor.fraction);
  b.number("trigger_ue_load_mbps", a.backdoor.trigger_ue_load_mbps);
  b.number("trigger_start_fraction", a.backdoor.trigger_start_fraction);
  b.list("victims", a.backdoor.victims, int_element);
}

ScenarioConfig from_json(const json& root) {
  ScenarioConfig c;
  {
    Reader r(root, "");
    read_radio(r.child("radio"), c.setup.radio);
    read_power(r.child("power"), c.setup.power);
    read_agent(r.child("agent"), c.setup);
    Reader f = r.child("federation");
    f.integer("rounds", c.setup.federation.rounds);
    f.enumeration("mode", c.setup.federation.mode, learning_mode_from_string);
    f.enumeration("weighting", c.setup.federation.weighting, weighting_from_string);
    f.list("weights", c.setup.federation.weights, number_element);
    read_attack(r.child("attack"), c.setup.attack);
    Reader d = r.child("defense");
    d.enumeration("kind", c.setup.defense.kind, defense_kind_from_string);
    d.number("kappa", c.setup.defense.kappa);
    d.enumeration("distance", c.setup.defense.distance, distance_mode_from_string);
    Reader s = r.child("sweep");
    s.list("traffic_mbps", c.traffic_mbps_list, number_element);
    s.list("attacks", c.attacks, enum_element(attack_kind_from_string));
    s.list("defenses", c.defenses, enum_element(defense_kind_from_string));
    r.list("seeds", c.seeds, seed_element);
    r.integer("episodes_per_round", c.episodes_per_round);
    r.number("tail_fraction", c.tail_fraction);
  }
  c.setup.federation.local_steps_per_round =
      c.episodes_per_round > 0 ? c.episodes_per_round * c.setup.radio.steps_per_episode : 0;
  return c;
}

json to_json(const ScenarioConfig& c) {
  const SimulationSetup& s = c.setup;
  const RadioConfig& r = s.radio;
  json j;
  j["radio"] = {{"n_sbs", r.n_sbs},
                {"ues_per_sbs", r.ues_per_sbs},
                {"bandwidth_sbs", r.bandwidth_sbs},
                {"bandwidth_mbs", r.bandwidth_mbs},
                {"rb_bandwidth", r.rb_bandwidth},
                {"noise_density", r.noise_density},
                {"radius_mbs", r.radius_mbs},
                {"radius_sbs", r.radius_sbs},
                {"sbs_ring_radius", r.sbs_ring_radius},
                {"carrier_freq", r.carrier_freq},
                {"delay_budget", r.delay_budget},
                {"deep_sleep_wake_steps", r.deep_sleep_wake_steps},
                {"steps_per_episode", r.steps_per_episode},
                {"slot_seconds", r.slot_seconds},
                {"packet_bits", r.packet_bits},
                {"mean_load_mbps", r.mean_load_mbps},
                {"max_spectral_efficiency", r.max_spectral_efficiency},
                {"traffic",
                 {{"amplitude", r.traffic.amplitude},
                  {"peak_shift_hours", r.traffic.peak_shift_hours},
                  {"second_harmonic", r.traffic.second_harmonic},
                  {"hourly", r.traffic.hourly}}}};
  j["power"] = {{"p_active_sbs", s.power.p_active_sbs},
                {"p_mbs", s.power.p_mbs},
                {"sleep_factor", s.power.sleep_factor},
                {"deep_sleep_factor", s.power.deep_sleep_factor},
                {"p_tx_sbs", s.power.p_tx_sbs},
                {"p_tx_mbs", s.power.p_tx_mbs}};
  const Hyperparams& h = s.agent;
  j["agent"] = {{"learning_rate", h.learning_rate},
                {"discount", h.discount},
                {"epsilon_start", h.epsilon_start},
                {"epsilon_end", h.epsilon_end},
                {"epsilon_decay_fraction", h.epsilon_decay_fraction},
                {"batch_size", h.batch_size},
                {"buffer_capacity", h.buffer_capacity},
                {"target_sync_period", h.target_sync_period},
                {"momentum", h.momentum},
                {"max_grad_norm", h.max_grad_norm},
                {"hidden", h.hidden},
                {"reward",
                 {{"throughput", s.reward.throughput},
                  {"drop", s.reward.drop},
                  {"power", s.reward.power}}},
                {"scales",
                 {{"sbs_load_mbps", s.scales.sbs_load_mbps},
                  {"mbs_load_mbps", s.scales.mbs_load_mbps},
                  {"throughput_mbps", s.scales.throughput_mbps},
                  {"delay_steps", s.scales.delay_steps}}}};
  j["federation"] = {{"rounds", s.federation.rounds},
                     {"mode", to_string(s.federation.mode)},
                     {"weighting", to_string(s.federation.weighting)},
                     {"weights", s.federation.weights}};
  const AttackSpec& a = s.attack;
  j["attack"] = {{"kind", to_string(a.kind)},
                 {"malicious", a.malicious},
                 {"poison", {{"extra_reward", a.poison.extra_reward}, {"fraction", a.poison.fraction}}},
                 {"backdoor",
                  {{"trigger_load_mbps", a.backdoor.trigger_load_mbps},
                   {"target_action", a.backdoor.target_action},
                   {"synthetic_reward", a.backdoor.synthetic_reward},
                   {"fraction", a.backdoor.fraction},
                   {"trigger_ue_load_mbps", a.backdoor.trigger_ue_load_mbps},
                   {"trigger_start_fraction", a.backdoor.trigger_start_fraction},
                   {"victims", a.backdoor.victims}}}};
  j["defense"] = {{"kind", to_string(s.defense.kind)},
                  {"kappa", s.defense.kappa},
                  {"distance", to_string(s.defense.distance)}};
  json attacks = json::array(), defenses = json::array();
  for (AttackKind k : c.attacks) attacks.push_back(to_string(k));
  for (DefenseKind k : c.defenses) defenses.push_back(to_string(k));
  j["sweep"] = {{"traffic_mbps", c.traffic_mbps_list}, {"attacks", attacks}, {"defenses", defenses}};
  j["seeds"] = c.seeds;
  j["episodes_per_round"] = c.episodes_per_round;
  j["tail_fraction"] = c.tail_fraction;
  return j;
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare words are strings

  json* node = &root;
  std::string path;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> segments;
  while (std::getline(parts, part, '.')) segments.push_back(part);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].empty()) throw ConfigError("override '" + key + "': empty path segment");
    path = join(path, segments[i]);
    if (!node->is_object()) throw ConfigError(path + ": cannot override inside a non-object");
    if (i + 1 == segments.size()) {
      (*node)[segments[i]] = value;
    } else {
      if (!node->contains(segments[i])) (*node)[segments[i]] = json::object();
      node = &(*node)[segments[i]];
    }
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  setup.validate();
  if (traffic_mbps_list.empty()) throw ConfigError("sweep.traffic_mbps: need at least one value");
  for (double t : traffic_mbps_list)
    if (!(t >= 0)) throw ConfigError("sweep.traffic_mbps: loads must be >= 0");
  if (attacks.empty()) throw ConfigError("sweep.attacks: need at least one attack kind");
  if (defenses.empty()) throw ConfigError("sweep.defenses: need at least one defense kind");
  if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (episodes_per_round < 1) throw ConfigError("episodes_per_round: must be >= 1");
  if (!(tail_fraction > 0 && tail_fraction <= 1))
    throw ConfigError("tail_fraction: must be in (0, 1]");
  for (AttackKind k : attacks) {
    AttackSpec a = setup.attack;
    a.kind = k;
    a.validate(setup.radio.n_sbs);
  }
}

ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: parse error: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(root, o);
  ScenarioConfig config = from_json(root);
  config.validate();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides);
}

std::string serialize_config(const ScenarioConfig& config) { return to_json(config).dump(2); }

ScenarioConfig make_cell(const ScenarioConfig& config, double traffic_mbps, AttackKind attack,
                         DefenseKind defense) {
  ScenarioConfig cell = config;
  cell.setup.radio.mean_load_mbps = traffic_mbps;
  cell.setup.attack.kind = attack;
  cell.setup.defense.kind = defense;
  cell.traffic_mbps_list = {traffic_mbps};
  cell.attacks = {attack};
  cell.defenses = {defense};
  return cell;
}

std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& config) {
  std::vector<ScenarioConfig> cells;
  for (double t : config.traffic_mbps_list)
    for (AttackKind a : config.attacks)
      for (DefenseKind d : config.defenses) cells.push_back(make_cell(config, t, a, d));
  return cells;
}

std::string scenario_id(const ScenarioConfig& config) {
  json j = to_json(config);
  j.erase("seeds");
  const std::string text = j.dump();
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

}  // namespace frls
