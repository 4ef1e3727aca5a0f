#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace flipbench {

// Line-oriented `key = value` file with `[section]` headers. `#` starts a
// comment line. Every key must belong to a section and appear in `allowed`,
// otherwise a ParseError naming the line is thrown.
class ConfigFile {
 public:
  using Schema = std::map<std::string, std::set<std::string>>;

  static ConfigFile parse(std::string_view text, const Schema& allowed,
                          const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path, const Schema& allowed);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return values_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace flipbench
