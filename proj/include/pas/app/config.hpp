#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pas {

enum class ConfigKind { Int, Double, Bool, String };

struct ConfigKey {
  std::string name;
  ConfigKind kind;
  std::string defaultValue;
  std::string doc;
};

/// Namespaced `key = value` settings. Every key has an embedded default; unknown keys and
/// values that do not parse as the key's kind are ConfigErrors.
class Config {
 public:
  /// All defaults.
  Config();

  static const std::vector<ConfigKey>& schema();
  static Config parse(std::istream& in);
  static Config load(const std::filesystem::path& path);

  /// Every key with its documentation as a comment line.
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  void set(const std::string& key, const std::string& value);
  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] int getInt(const std::string& key) const;
  [[nodiscard]] double getDouble(const std::string& key) const;
  [[nodiscard]] bool getBool(const std::string& key) const;

  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

} // namespace pas
