#include "acgan/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acgan {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) throw std::invalid_argument("config: duplicate key '" + key + "'");
    kv.entries_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = entries_.at(key);
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("config: '" + key + "' is not an integer: " + s);
  return static_cast<int>(v);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = entries_.at(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::invalid_argument("config: '" + key + "' is not a number: " + s);
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = entries_.at(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: '" + key + "' is not a boolean: " + s);
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  std::stringstream ss(entries_.at(key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::string KeyValueConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "schema_version", "experiment",
      "data.task", "data.dir", "data.n_train", "data.n_val", "data.n_classes",
      "data.image_size", "data.shapes_min", "data.shapes_max", "data.shape_extent_min",
      "data.shape_extent_max", "data.jitter_amplitude", "data.noise_std", "data.seed",
      "train.objective", "train.strategy", "train.lambda", "train.g_mode",
      "train.aux_l1_weight", "train.epochs", "train.batch_size", "train.lr", "train.beta1",
      "train.beta2", "train.decay_start_epoch", "train.seed", "train.jitter",
      "train.jitter_pad", "train.disjoint_conditional_sets", "train.d_steps_per_g_step",
      "train.gradnorm_every", "train.eval_every", "train.keep_checkpoints",
      "train.g_base_channels", "train.d_base_channels", "train.class_embedding",
      "train.dropout",
      "probe.n", "probe.bins", "probe.optimal", "probe.extra_epochs", "probe.epoch",
      "probe.noise", "probe.constant", "probe.seed",
      "eval.n", "eval.epoch", "eval.seg", "eval.depth", "eval.label_accuracy", "eval.ndb",
      "eval.ndb_k", "eval.ndb_alpha", "eval.ndb_patch", "eval.seed",
  };
  return keys;
}

void KeyValueConfig::validate_schema() const {
  const int v = get_int("schema_version", -1);
  if (v != kConfigSchemaVersion)
    throw std::invalid_argument("config: schema_version must be " +
                                std::to_string(kConfigSchemaVersion));
  const auto& known = known_config_keys();
  for (const auto& [k, _] : entries_)
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("config: unknown key '" + k + "'");
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
  TrainConfig c;
  c.objective = parse_objective(kv.get("train.objective", std::string(to_string(c.objective))));
  const WeightStrategy strategy =
      parse_weight_strategy(kv.get("train.strategy", std::string(to_string(c.weights.strategy))));
  c.weights = LossWeights::from_strategy(strategy);
  if (kv.has("train.lambda")) {
    const auto items = kv.get_list("train.lambda");
    if (items.size() != 4) throw std::invalid_argument("config: train.lambda needs 4 values");
    for (int i = 0; i < 4; ++i) c.weights.lambda[i] = std::stod(items[i]);
  }
  c.weights.strategy = strategy;
  c.weights.g_mode =
      parse_generator_mode(kv.get("train.g_mode", std::string(to_string(c.weights.g_mode))));
  c.aux_l1_weight = kv.get_double("train.aux_l1_weight", c.aux_l1_weight);
  c.epochs = kv.get_int("train.epochs", c.epochs);
  c.batch_size = kv.get_int("train.batch_size", c.batch_size);
  c.lr = kv.get_double("train.lr", c.lr);
  c.beta1 = kv.get_double("train.beta1", c.beta1);
  c.beta2 = kv.get_double("train.beta2", c.beta2);
  c.decay_start_epoch = kv.get_int("train.decay_start_epoch", c.decay_start_epoch);
  c.seed = std::stoull(kv.get("train.seed", std::to_string(c.seed)));
  c.jitter = kv.get_bool("train.jitter", c.jitter);
  c.jitter_pad = kv.get_int("train.jitter_pad", c.jitter_pad);
  c.disjoint_conditional_sets =
      kv.get_bool("train.disjoint_conditional_sets", c.disjoint_conditional_sets);
  c.d_steps_per_g_step = kv.get_int("train.d_steps_per_g_step", c.d_steps_per_g_step);
  c.gradnorm_every = kv.get_int("train.gradnorm_every", c.gradnorm_every);
  c.eval_every = kv.get_int("train.eval_every", c.eval_every);
  c.keep_checkpoints = kv.get_int("train.keep_checkpoints", c.keep_checkpoints);
  c.g_base_channels = kv.get_int("train.g_base_channels", c.g_base_channels);
  c.d_base_channels = kv.get_int("train.d_base_channels", c.d_base_channels);
  c.class_embedding = kv.get_int("train.class_embedding", c.class_embedding);
  c.dropout = static_cast<float>(kv.get_double("train.dropout", c.dropout));
  c.validate();
  return c;
}

void put_train_config(KeyValueConfig& kv, const TrainConfig& c) {
  kv.set("train.objective", std::string(to_string(c.objective)));
  kv.set("train.strategy", std::string(to_string(c.weights.strategy)));
  kv.set("train.lambda", fmt(c.weights.lambda[0]) + "," + fmt(c.weights.lambda[1]) + "," +
                             fmt(c.weights.lambda[2]) + "," + fmt(c.weights.lambda[3]));
  kv.set("train.g_mode", std::string(to_string(c.weights.g_mode)));
  kv.set("train.aux_l1_weight", fmt(c.aux_l1_weight));
  kv.set("train.epochs", std::to_string(c.epochs));
  kv.set("train.batch_size", std::to_string(c.batch_size));
  kv.set("train.lr", fmt(c.lr));
  kv.set("train.beta1", fmt(c.beta1));
  kv.set("train.beta2", fmt(c.beta2));
  kv.set("train.decay_start_epoch", std::to_string(c.decay_start_epoch));
  kv.set("train.seed", std::to_string(c.seed));
  kv.set("train.jitter", c.jitter ? "true" : "false");
  kv.set("train.jitter_pad", std::to_string(c.jitter_pad));
  kv.set("train.disjoint_conditional_sets", c.disjoint_conditional_sets ? "true" : "false");
  kv.set("train.d_steps_per_g_step", std::to_string(c.d_steps_per_g_step));
  kv.set("train.gradnorm_every", std::to_string(c.gradnorm_every));
  kv.set("train.eval_every", std::to_string(c.eval_every));
  kv.set("train.keep_checkpoints", std::to_string(c.keep_checkpoints));
  kv.set("train.g_base_channels", std::to_string(c.g_base_channels));
  kv.set("train.d_base_channels", std::to_string(c.d_base_channels));
  kv.set("train.class_embedding", std::to_string(c.class_embedding));
  kv.set("train.dropout", fmt(c.dropout));
}

}  // namespace acgan
