#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace photostyle {

struct ConfigKey {
  std::string name;  // "section.key", or "key" for root-level keys
  std::string default_value;
  bool is_path = false;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

// TOML-style subset: [section] headers, key = value lines, # comments.
// Values are double-quoted strings (\" and \\ escapes) or bare tokens.
class RunConfig {
 public:
  RunConfig();  // all defaults

  // Path values are resolved against the file's directory.
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, const std::filesystem::path& base_dir, std::string_view source);

  // Throws ValidationError for keys outside config_keys().
  void set(const std::string& key, std::string value);

  const std::string& get(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  bool boolean(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;  // empty when unset

  // "key = value" lines in key order.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace photostyle
