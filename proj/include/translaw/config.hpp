#pragma once
// INI-style configuration: [section] headers group key = value pairs, one
// section per CLI command. Parsing keeps line numbers so later validation
// can point at the exact offender; reading is strict (duplicate keys, keys
// before any section, and malformed lines all throw "path:line: message").

#include <cstddef>
#include <map>
#include <optional>
#include <string>

namespace translaw {

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};

struct ConfigFile {
  std::string path;
  // section -> key -> entry; both maps ordered for deterministic iteration
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;

  const std::map<std::string, ConfigEntry>* section(const std::string& name) const;
};

// Lines starting with '#' or ';' are comments; blank lines are skipped.
// Section and key names must match [a-z0-9_-]+. Values keep inner spaces,
// outer whitespace trimmed. An empty file yields an empty ConfigFile.
ConfigFile parse_config_file(const std::string& path);

ConfigFile parse_config_text(const std::string& text, const std::string& path_for_errors);

}  // namespace translaw
