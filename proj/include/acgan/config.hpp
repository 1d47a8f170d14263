#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "acgan/trainer.hpp"

namespace acgan {

inline constexpr int kConfigSchemaVersion = 1;

/**
 * Experiment configuration: one `key = value` per line, `#` starts a comment.
 * Keys are grouped by prefix (data., train., probe., eval.); see the README
 * for the full schema. Unknown keys are rejected.
 */
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Sorted `key = value` lines, parseable by `parse`.
  std::string dump() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// schema_version must equal kConfigSchemaVersion; every key must be known.
  void validate_schema() const;

 private:
  std::map<std::string, std::string> entries_;
};

const std::vector<std::string>& known_config_keys();

/// Reads the train.* keys over TrainConfig defaults.
TrainConfig train_config_from(const KeyValueConfig& kv);
/// Writes every train.* key.
void put_train_config(KeyValueConfig& kv, const TrainConfig& c);

}  // namespace acgan
