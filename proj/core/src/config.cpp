#include "wd/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wd::harness {

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kDreamer: return "dreamer";
    case AgentKind::kDqn: return "dqn";
    case AgentKind::kRandom: return "random";
  }
  return "?";
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "dreamer") return AgentKind::kDreamer;
  if (s == "dqn") return AgentKind::kDqn;
  if (s == "random") return AgentKind::kRandom;
  throw std::invalid_argument("config: unknown agent '" + s + "' (expected dreamer|dqn|random)");
}

void ExperimentConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("config: episodes must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("config: warmup_steps must be >= 0");
  env.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw std::invalid_argument("config: bad value for key '" + key + "': " + value);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: bad boolean for key '" + key + "': " + value);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    seeds.push_back(parse_number<std::uint64_t>(key, item));
  }
  if (seeds.empty()) throw std::invalid_argument("config: empty seed list for key '" + key + "'");
  return seeds;
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto& e = c.env;
  if (key == "agent") c.agent = agent_kind_from_string(value);
  else if (key == "episodes") c.episodes = parse_number<int>(key, value);
  else if (key == "seeds") c.seeds = parse_seed_list(key, value);
  else if (key == "warmup_steps") c.warmup_steps = parse_number<long>(key, value);
  else if (key == "eval_every") c.eval_every = parse_number<int>(key, value);
  else if (key == "eval_episodes") c.eval_episodes = parse_number<int>(key, value);
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "grid_w") e.grid_w = parse_number<int>(key, value);
  else if (key == "grid_h") e.grid_h = parse_number<int>(key, value);
  else if (key == "cell_size_m") e.cell_size_m = parse_number<double>(key, value);
  else if (key == "carrier_freq_ghz") e.carrier_freq_ghz = parse_number<double>(key, value);
  else if (key == "total_bandwidth_hz") e.total_bandwidth_hz = parse_number<double>(key, value);
  else if (key == "tx_power_dbm") e.tx_power_dbm = parse_number<double>(key, value);
  else if (key == "n_users") e.n_users = parse_number<int>(key, value);
  else if (key == "horizon") e.horizon = parse_number<int>(key, value);
  else if (key == "uav_altitude_m") e.uav_altitude_m = parse_number<double>(key, value);
  else if (key == "noise_psd_dbm_hz") e.noise_psd_dbm_hz = parse_number<double>(key, value);
  else if (key == "noise_figure_db") e.noise_figure_db = parse_number<double>(key, value);
  else if (key == "wind_sigma") e.wind_sigma_cells = parse_number<double>(key, value);
  else if (key == "wind_amplitude") e.wind_amplitude = parse_number<double>(key, value);
  else if (key == "wind_atten_max_db") e.wind_atten_max_db = parse_number<double>(key, value);
  else if (key == "wind_drift_x") e.wind_drift_x = parse_number<double>(key, value);
  else if (key == "wind_drift_y") e.wind_drift_y = parse_number<double>(key, value);
  else if (key == "wind_drift_jitter_std") e.wind_drift_jitter_std = parse_number<double>(key, value);
  else if (key == "slip_coeff") e.slip_coeff = parse_number<double>(key, value);
  else if (key == "reward_unit") e.reward_unit = parse_number<double>(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key: value': " + line);
    }
    entries.emplace_back(trim(line.substr(0, colon)), trim(line.substr(colon + 1)));
  }

  ExperimentConfig c;
  // desk_scale first so explicit keys override its values.
  for (const auto& [key, value] : entries) {
    if (key == "desk_scale") {
      c.desk_scale = parse_bool(key, value);
      if (c.desk_scale) {
        c.env.grid_w = 32;
        c.env.grid_h = 32;
        c.env.n_users = 5;
        c.env.horizon = 50;
        c.episodes = 300;
      }
    }
  }
  for (const auto& [key, value] : entries) {
    if (key == "desk_scale") continue;
    apply(c, key, value);
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

}  // namespace wd::harness
