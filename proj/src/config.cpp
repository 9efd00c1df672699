#include "ctxkm/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace ctxkm {
namespace {

const std::string kCostPrefix = "learn.svm_cost.";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(errc::config, "config key '" + key + "': expected integer, got '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(errc::config, "config key '" + key + "': expected unsigned integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    fail(errc::config, "config key '" + key + "': expected number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(errc::config, "config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "grid.rows",       "grid.cols",        "grid.radius",      "grid.sectors",
      "map.mode",        "map.hi_levels",    "kernel.gamma",     "kernel.depth",
      "learn.svm_cost",  "learn.eta",        "learn.inner_steps", "learn.max_outer",
      "learn.tol",       "learn.augment_bias", "io.features",    "io.labels",
      "io.output_dir",   "io.seed",          "synth.images",     "synth.dim",
      "synth.noise",
  };
  return keys;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "grid.rows") cfg.grid.rows = parse_int(key, value);
  else if (key == "grid.cols") cfg.grid.cols = parse_int(key, value);
  else if (key == "grid.radius") cfg.grid.radius = parse_int(key, value);
  else if (key == "grid.sectors") cfg.grid.sectors = parse_int(key, value);
  else if (key == "map.mode") cfg.map_mode = phi0_mode_from_string(value);
  else if (key == "map.hi_levels") cfg.hi_levels = parse_int(key, value);
  else if (key == "kernel.gamma") cfg.gamma = parse_double(key, value);
  else if (key == "kernel.depth") cfg.depth = parse_int(key, value);
  else if (key == "learn.svm_cost") cfg.svm_cost = parse_double(key, value);
  else if (key == "learn.eta") cfg.eta = parse_double(key, value);
  else if (key == "learn.inner_steps") cfg.inner_steps = parse_int(key, value);
  else if (key == "learn.max_outer") cfg.max_outer = parse_int(key, value);
  else if (key == "learn.tol") cfg.tol = parse_double(key, value);
  else if (key == "learn.augment_bias") cfg.augment_bias = parse_bool(key, value);
  else if (key == "io.features") cfg.features_path = value;
  else if (key == "io.labels") cfg.labels_path = value;
  else if (key == "io.output_dir") cfg.output_dir = value;
  else if (key == "io.seed") cfg.seed = parse_u64(key, value);
  else if (key == "synth.images") cfg.synth_images = parse_int(key, value);
  else if (key == "synth.dim") cfg.synth_dim = parse_int(key, value);
  else if (key == "synth.noise") cfg.synth_noise = parse_double(key, value);
  else if (key.rfind(kCostPrefix, 0) == 0 && key.size() > kCostPrefix.size())
    cfg.svm_cost_per_concept[key.substr(kCostPrefix.size())] = parse_double(key, value);
  else
    fail(errc::config, "unknown config key '" + key + "'");
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(errc::config, "cannot open config file '" + path + "'");
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(errc::config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      fail(errc::config, "config line " + std::to_string(line_no) + ": empty key");
    apply_config_value(cfg, key, value);
  }
  return cfg;
}

void write_effective_config(std::ostream& os, const RunConfig& cfg) {
  os << "grid.rows = " << cfg.grid.rows << '\n';
  os << "grid.cols = " << cfg.grid.cols << '\n';
  os << "grid.radius = " << cfg.grid.radius << '\n';
  os << "grid.sectors = " << cfg.grid.sectors << '\n';
  os << "map.mode = " << to_string(cfg.map_mode) << '\n';
  os << "map.hi_levels = " << cfg.hi_levels << '\n';
  os << "kernel.gamma = " << format_double(cfg.gamma) << '\n';
  os << "kernel.depth = " << cfg.depth << '\n';
  os << "learn.svm_cost = " << format_double(cfg.svm_cost) << '\n';
  for (const auto& [name, v] : cfg.svm_cost_per_concept)
    os << kCostPrefix << name << " = " << format_double(v) << '\n';
  os << "learn.eta = " << format_double(cfg.eta) << '\n';
  os << "learn.inner_steps = " << cfg.inner_steps << '\n';
  os << "learn.max_outer = " << cfg.max_outer << '\n';
  os << "learn.tol = " << format_double(cfg.tol) << '\n';
  os << "learn.augment_bias = " << (cfg.augment_bias ? "true" : "false") << '\n';
  os << "io.features = " << cfg.features_path << '\n';
  os << "io.labels = " << cfg.labels_path << '\n';
  os << "io.output_dir = " << cfg.output_dir << '\n';
  os << "io.seed = " << cfg.seed << '\n';
  os << "synth.images = " << cfg.synth_images << '\n';
  os << "synth.dim = " << cfg.synth_dim << '\n';
  os << "synth.noise = " << format_double(cfg.synth_noise) << '\n';
}

void RunConfig::validate() const {
  grid.validate();
  if (hi_levels < 1) fail(errc::config, "map.hi_levels must be >= 1");
  if (!(gamma >= 0.0)) fail(errc::config, "kernel.gamma must be >= 0");
  if (depth < 1) fail(errc::config, "kernel.depth must be >= 1");
  if (!(svm_cost > 0.0)) fail(errc::config, "learn.svm_cost must be > 0");
  for (const auto& [name, v] : svm_cost_per_concept)
    if (!(v > 0.0)) fail(errc::config, "learn.svm_cost." + name + " must be > 0");
  if (!(eta >= 0.0)) fail(errc::config, "learn.eta must be >= 0");
  if (inner_steps < 0) fail(errc::config, "learn.inner_steps must be >= 0");
  if (max_outer < 1) fail(errc::config, "learn.max_outer must be >= 1");
  if (!(tol > 0.0)) fail(errc::config, "learn.tol must be > 0");
  if (synth_images < 4 || synth_images % 2 != 0)
    fail(errc::config, "synth.images must be even and >= 4");
  if (synth_dim < 1) fail(errc::config, "synth.dim must be >= 1");
  if (!(synth_noise >= 0.0)) fail(errc::config, "synth.noise must be >= 0");
}

}  // namespace ctxkm
