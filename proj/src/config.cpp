#include "translaw/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace translaw {

namespace {

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-'))
      return false;
  return true;
}

}  // namespace

const std::map<std::string, ConfigEntry>* ConfigFile::section(const std::string& name) const {
  const auto it = sections.find(name);
  return it == sections.end() ? nullptr : &it->second;
}

ConfigFile parse_config_text(const std::string& text, const std::string& path_for_errors) {
  ConfigFile cfg;
  cfg.path = path_for_errors;
  std::istringstream in(text);
  std::string raw;
  std::string current;
  std::size_t lno = 0;
  while (std::getline(in, raw)) {
    ++lno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(cfg.path, lno, "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!valid_name(current))
        fail_at(cfg.path, lno, "bad section name '" + current + "'");
      cfg.sections[current];  // a section may legitimately stay empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(cfg.path, lno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) fail_at(cfg.path, lno, "bad key name '" + key + "'");
    if (current.empty()) fail_at(cfg.path, lno, "key '" + key + "' before any [section]");
    auto& sec = cfg.sections[current];
    if (sec.count(key))
      fail_at(cfg.path, lno,
              "duplicate key '" + key + "' (first at line " + std::to_string(sec[key].line) + ")");
    sec[key] = ConfigEntry{trim(line.substr(eq + 1)), lno};
  }
  return cfg;
}

ConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace translaw
