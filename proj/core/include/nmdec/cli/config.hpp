#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "nmdec/driver/driver.hpp"
#include "nmdec/minicc/compiler.hpp"

namespace nmdec::cli {

using driver::ConfigError;

// Everything a command needs, resolved before any work starts.
struct RunConfig {
  std::string preset = "desk";
  driver::LoopConfig loop = driver::LoopConfig::desk();
  minicc::CompilerOptions compiler{};
  size_t count = 200;  // pairs or inputs written by `gen`

  static RunConfig from_preset(const std::string& name);  // "desk" or "paper"

  // Throws ConfigError for unknown keys and malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // One "key = value" line per key; reading it back gives the same config.
  std::string to_text() const;
  void validate() const;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

// "key = value" lines; '#' starts a comment. Throws ConfigError naming the
// offending line.
Settings parse_settings(std::istream& in, const std::string& origin);
Settings read_settings(const std::filesystem::path& path);

// The last `preset` wins and is applied first; then file settings, then
// flag settings, in order.
RunConfig resolve(const Settings& file, const Settings& flags);

}  // namespace nmdec::cli
