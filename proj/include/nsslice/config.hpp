#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace nsslice {

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

// Flat key=value configuration. Lines starting with '#' are comments. Every
// key must be registered; unknown keys raise config_error.
class Config {
 public:
  Config();

  static const std::vector<ConfigKey>& registry();

  void load_file(const std::filesystem::path& path);
  // "key=value"
  void assign(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;  // non-empty value
  const std::string& str(const std::string& key) const;
  double number(const std::string& key) const;
  double positive(const std::string& key) const;
  double nonnegative(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::uint64_t seed() const;
  // Comma-separated numbers.
  std::vector<double> numbers(const std::string& key) const;
  // Semicolon-separated vectors of comma-separated numbers.
  std::vector<std::vector<double>> vectors(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace nsslice
