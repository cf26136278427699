#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "labelassoc/config.hpp"

namespace labelassoc::cli {

/// Manifest values overlaid with command-line flags. Keys are
/// "section.name" as in the manifest file.
class Settings {
 public:
  Settings(KeyValueConfig manifest, const std::map<std::string, std::string>& overrides);

  std::string require(const std::string& key, const std::string& flag) const;
  std::optional<std::string> get(const std::string& key) const { return config_.get(key); }
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::uint64_t uint_or(const std::string& key, std::uint64_t fallback) const;
  double double_or(const std::string& key, double fallback) const;
  bool bool_or(const std::string& key, bool fallback) const;

  /// Path that must already exist; throws InputError naming it otherwise.
  std::filesystem::path input(const std::string& key, const std::string& flag) const;

  const KeyValueConfig& config() const { return config_; }
  std::string manifest_hash(const std::string& stage) const;

 private:
  KeyValueConfig config_;
};

int run_ingest(const Settings& s);
int run_pairs(const Settings& s);
int run_pretrain(const Settings& s);
int run_cache_build(const Settings& s);
int run_cache_verify(const Settings& s);
int run_selftrain(const Settings& s);
int run_classify(const Settings& s);
int run_eval_score(const Settings& s);
int run_eval_timing(const Settings& s);
int run_demo_synthetic(const Settings& s);

}  // namespace labelassoc::cli
