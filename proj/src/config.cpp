#include "flipbench/config.hpp"

#include <fstream>
#include <sstream>

#include "flipbench/error.hpp"

namespace flipbench {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, const Schema& allowed,
                             const std::string& source) {
  ConfigFile cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!allowed.contains(section)) {
        throw ParseError(source, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    if (section.empty()) throw ParseError(source, line_no, "key outside of a section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!allowed.at(section).contains(key)) {
      throw ParseError(source, line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    cfg.values_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path, const Schema& allowed) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), allowed, path.string());
}

std::optional<std::string> ConfigFile::get(const std::string& section,
                                           const std::string& key) const {
  auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

}  // namespace flipbench
