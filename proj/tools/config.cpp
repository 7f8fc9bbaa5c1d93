#include "config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qgemm/errors.hpp"

namespace qgemm::cli {
namespace {

using nlohmann::json;

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

MaddMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "two-roundings") return MaddMode::TwoRoundings;
  if (s == "fused") return MaddMode::Fused;
  throw ConfigError(where + ": madd_mode must be 'two-roundings' or 'fused'");
}

}  // namespace

const Preset& Config::preset(const std::string& name) const {
  const auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [k, v] : presets) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

const BoardSpec& Config::board_of(const Preset& p) const {
  const auto it = boards.find(p.board);
  if (it == boards.end()) throw ConfigError("preset '" + p.name + "' names unknown board '" + p.board + "'");
  return it->second;
}

std::filesystem::path default_config_path() { return std::filesystem::path(QGEMM_DATA_DIR) / "config.json"; }

std::filesystem::path default_trace_path() { return std::filesystem::path(QGEMM_DATA_DIR) / "sdp_synthetic.rgtrace"; }

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  if (root.value("format", "") != "qgemm-config/1") throw ConfigError("config format must be 'qgemm-config/1'");

  Config c;
  const json boards = root.value("boards", json::object());
  const json presets = root.value("presets", json::object());
  for (const auto& [name, b] : boards.items()) {
    BoardSpec spec{name, field<double>(b, "bandwidth_gbs", "board " + name)};
    spec.validate();
    c.boards.emplace(name, spec);
  }
  for (const auto& [name, p] : presets.items()) {
    const std::string where = "preset " + name;
    Preset pr;
    pr.name = name;
    pr.board = field<std::string>(p, "board", where);
    pr.cfg.p_r = field<index_t>(p, "p_r", where);
    pr.cfg.p_c = field<index_t>(p, "p_c", where);
    pr.cfg.m_tile = field<index_t>(p, "m_tile", where);
    pr.cfg.f_mhz = field<double>(p, "f_mhz", where);
    if (p.contains("madd_mode")) pr.cfg.madd_mode = parse_mode(field<std::string>(p, "madd_mode", where), where);
    pr.cfg.validate();
    c.presets.emplace(name, pr);
    c.board_of(c.presets.at(name));
  }
  const json d = root.value("defaults", json::object());
  c.default_preset = d.value("preset", c.presets.empty() ? "" : c.presets.begin()->first);
  c.accelerator = d.value("accelerator", c.default_preset);
  c.host_gflops = d.value("host_gflops", 0.65);
  if (!(c.host_gflops > 0.0)) throw ConfigError("defaults.host_gflops must be positive");
  if (!c.default_preset.empty()) c.preset(c.default_preset);
  if (!c.accelerator.empty()) c.preset(c.accelerator);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace qgemm::cli
