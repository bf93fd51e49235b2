#include "fuseval/config.hpp"

#include <charconv>

#include "fuseval/error.hpp"

namespace fuseval {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  cfg.hash_ = fnv1a64(text);

  std::string section;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    const bool last = end == std::string::npos;
    if (last) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string trimmed = trim(line);
    if (trimmed.empty()) {
      if (last) break;
      continue;
    }
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']')
        raise(ErrorKind::Data, "config line " + std::to_string(line_no) +
                                   ": unterminated section header");
      section = trim(std::string_view(trimmed).substr(1, trimmed.size() - 2));
      if (last) break;
      continue;
    }
    auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      raise(ErrorKind::Data, "config line " + std::to_string(line_no) +
                                 ": expected `key = value`");
    Entry entry;
    entry.section = section;
    entry.key = trim(std::string_view(trimmed).substr(0, eq));
    entry.value = trim(std::string_view(trimmed).substr(eq + 1));
    if (entry.key.empty())
      raise(ErrorKind::Data,
            "config line " + std::to_string(line_no) + ": empty key");
    cfg.entries_.push_back(std::move(entry));
    if (last) break;
  }
  return cfg;
}

std::optional<std::string> ConfigFile::get(const std::string& section,
                                           const std::string& key) const {
  std::optional<std::string> found;
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) found = e.value;  // last wins
  return found;
}

std::string ConfigFile::get_or(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  auto v = get(section, key);
  return v ? *v : fallback;
}

std::vector<std::string> ConfigFile::get_all(const std::string& section,
                                             const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) out.push_back(e.value);
  return out;
}

bool ConfigFile::has_section(const std::string& section) const {
  for (const auto& e : entries_)
    if (e.section == section) return true;
  return false;
}

double ConfigFile::get_real(const std::string& section, const std::string& key,
                            double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  double out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    raise(ErrorKind::Data,
          "config [" + section + "] " + key + ": not a real number");
  return out;
}

long ConfigFile::get_int(const std::string& section, const std::string& key,
                         long fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    raise(ErrorKind::Data,
          "config [" + section + "] " + key + ": not an integer");
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t end = value.find(',', start);
    if (end == std::string::npos) end = value.size();
    std::string piece = trim(std::string_view(value).substr(start, end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = end + 1;
  }
  return out;
}

}  // namespace fuseval
