#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fuseval {

// Plain-text `key = value` configuration with `[section]` headers and `#`
// comments. Keys may repeat; get_all() returns every value in file order.
class ConfigFile {
 public:
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
  };

  static ConfigFile parse(const std::string& text);

  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  std::vector<std::string> get_all(const std::string& section,
                                   const std::string& key) const;
  bool has_section(const std::string& section) const;

  const std::vector<Entry>& entries() const { return entries_; }

  // FNV-1a 64 over the raw text, recorded in run metadata so a report can
  // be traced back to the exact configuration.
  std::uint64_t hash() const { return hash_; }

  double get_real(const std::string& section, const std::string& key,
                  double fallback) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;

 private:
  std::vector<Entry> entries_;
  std::uint64_t hash_ = 0;
};

std::uint64_t fnv1a64(const std::string& text);

// Splits "a,b,c" into trimmed pieces, dropping empties.
std::vector<std::string> split_list(const std::string& value);

}  // namespace fuseval
