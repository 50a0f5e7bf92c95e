#ifndef EVOSORT_CONFIG_HPP_
#define EVOSORT_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>

namespace evosort {

// Flat `key=value` configuration. Blank lines and `#` comments are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

double parse_double(const std::string& key, const std::string& value);
long long parse_int(const std::string& key, const std::string& value);

// Round-trip exact text form (17 significant digits).
std::string format_double(double value);

// Helpers used by the *_kv methods of each config struct.
inline void read_into(const KeyValues& kv, const std::string& key, double& out) {
  if (auto it = kv.find(key); it != kv.end()) out = parse_double(key, it->second);
}
inline void read_into(const KeyValues& kv, const std::string& key, int& out) {
  if (auto it = kv.find(key); it != kv.end()) {
    out = static_cast<int>(parse_int(key, it->second));
  }
}
inline void read_into(const KeyValues& kv, const std::string& key,
                      long long& out) {
  if (auto it = kv.find(key); it != kv.end()) out = parse_int(key, it->second);
}

}  // namespace evosort

#endif  // EVOSORT_CONFIG_HPP_
