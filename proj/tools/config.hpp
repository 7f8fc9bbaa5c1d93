#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "qgemm/perfmodel.hpp"
#include "qgemm/systolic.hpp"

namespace qgemm::cli {

struct Preset {
  std::string name;
  std::string board;
  ArrayConfig cfg;
};

struct Config {
  std::map<std::string, BoardSpec> boards;
  std::map<std::string, Preset> presets;
  std::string default_preset;
  std::string accelerator;
  double host_gflops = 0.65;

  /// Throws ConfigError for an unknown name.
  const Preset& preset(const std::string& name) const;
  const BoardSpec& board_of(const Preset& p) const;
};

std::filesystem::path default_config_path();
std::filesystem::path default_trace_path();

/// Throws ConfigError on unreadable or inconsistent files.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& json_text);

}  // namespace qgemm::cli
