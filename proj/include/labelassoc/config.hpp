#pragma once

#include <filesystem>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace labelassoc {

/// Flat "key = value" settings with optional [section] headers; a key inside
/// a section is stored as "section.key". '#' starts a comment, values may be
/// double-quoted. Parse failures throw ConfigError with the line number.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Typed accessors; a present but malformed value throws ConfigError.
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;

  /// Canonical "key = value" text in key order.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace labelassoc
