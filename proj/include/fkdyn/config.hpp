#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fk {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ValueType { Int, UInt, Double, Bool, String, IntList, UIntList, DoubleList, StringList };

struct KeySpec {
  std::string key;  // section.name
  ValueType type;
  nlohmann::json default_value;  // null: optional, absent unless given
  std::string doc;
  std::vector<std::string> choices = {};  // String / StringList only
};

inline constexpr int kSchemaVersion = 1;

const std::vector<KeySpec>& config_schema();

// Resolved configuration: every schema key present (defaults filled in),
// plus the source line of each key that was given explicitly.
class Config {
 public:
  nlohmann::json values = nlohmann::json::object();  // {section: {name: value}}
  std::map<std::string, int> lines;
  std::string source = "<defaults>";

  bool has(const std::string& key) const;
  const nlohmann::json& at(const std::string& key) const;
  template <class T>
  T get(const std::string& key) const {
    return at(key).get<T>();
  }
  void set(const std::string& key, nlohmann::json value);

  // Throws ConfigError naming the key and, when known, its source line.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
};

Config default_config();
Config parse_ini_config(const std::string& text, const std::string& source = "<string>");
Config parse_json_config(const std::string& text, const std::string& source = "<string>");
// JSON if the extension is .json, key-value text otherwise.
Config load_config(const std::filesystem::path& path);

// Sorted-key JSON of the resolved values without run.seed, run.threads and run.out.
std::string canonical_json(const Config& config);
// FNV-1a 64 of canonical_json.
std::uint64_t config_hash(const Config& config);
std::string hash_hex(std::uint64_t hash);

std::string to_string(ValueType type);
std::string schema_markdown();

}  // namespace fk
