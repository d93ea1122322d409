#include "wd/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wd::env {

namespace {

void require(bool ok, const std::string& field) {
  if (!ok) throw std::invalid_argument("EnvConfig: invalid value for " + field);
}

double reflect_into(double x, double hi) {
  // Reflect until inside [0, hi]; drift magnitudes are < hi so this loops
  // at most a couple of times.
  while (x < 0.0 || x > hi) {
    if (x < 0.0) x = -x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

}  // namespace

void EnvConfig::validate() const {
  require(grid_w >= 2, "grid_w");
  require(grid_h >= 2, "grid_h");
  require(cell_size_m > 0, "cell_size_m");
  require(carrier_freq_ghz > 0, "carrier_freq_ghz");
  require(total_bandwidth_hz > 0, "total_bandwidth_hz");
  require(n_users >= 1, "n_users");
  require(horizon >= 1, "horizon");
  require(uav_altitude_m > 0, "uav_altitude_m");
  require(wind_sigma_cells > 0, "wind_sigma_cells");
  require(wind_amplitude > 0 && wind_amplitude <= 1, "wind_amplitude");
  require(wind_atten_max_db >= 0, "wind_atten_max_db");
  require(wind_drift_jitter_std >= 0, "wind_drift_jitter_std");
  require(slip_coeff >= 0, "slip_coeff");
  require(reward_unit > 0, "reward_unit");
  require(n_users <= grid_w * grid_h, "n_users (exceeds grid cells)");
}

double path_loss_db(double d3_m, double freq_ghz) {
  if (d3_m <= 0.0) throw std::invalid_argument("path_loss_db: distance must be positive");
  return 32.45 + 20.0 * std::log10(freq_ghz) + 20.0 * std::log10(d3_m);
}

double wind_at(const WeatherField& field, double x, double y) {
  const double dx = x - field.cx;
  const double dy = y - field.cy;
  return field.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * field.sigma * field.sigma));
}

WeatherField advance_weather(const WeatherField& field, const EnvConfig& cfg, Rng& rng) {
  WeatherField next = field;
  const double jx = cfg.wind_drift_jitter_std > 0 ? rng.normal(0.0, cfg.wind_drift_jitter_std) : 0.0;
  const double jy = cfg.wind_drift_jitter_std > 0 ? rng.normal(0.0, cfg.wind_drift_jitter_std) : 0.0;
  next.cx = reflect_into(field.cx + cfg.wind_drift_x + jx, static_cast<double>(cfg.grid_w));
  next.cy = reflect_into(field.cy + cfg.wind_drift_y + jy, static_cast<double>(cfg.grid_h));
  return next;
}

double user_capacity(const EnvConfig& cfg, int uav_x, int uav_y, int user_x, int user_y,
                     double wind_at_uav) {
  const double bw_user = cfg.total_bandwidth_hz / cfg.n_users;
  const double noise_dbm = cfg.noise_psd_dbm_hz + 10.0 * std::log10(bw_user) + cfg.noise_figure_db;
  const double hx = (uav_x - user_x) * cfg.cell_size_m;
  const double hy = (uav_y - user_y) * cfg.cell_size_m;
  const double d3 = std::sqrt(cfg.uav_altitude_m * cfg.uav_altitude_m + hx * hx + hy * hy);
  const double snr_db = cfg.tx_power_dbm - path_loss_db(d3, cfg.carrier_freq_ghz) -
                        cfg.wind_atten_max_db * wind_at_uav - noise_dbm;
  return bw_user * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

Env::Env(EnvConfig cfg, std::uint64_t user_seed, std::uint64_t dynamics_seed)
    : cfg_(cfg), dynamics_rng_(dynamics_seed) {
  cfg_.validate();
  // Users drawn uniformly without replacement; fixed for the Env lifetime.
  Rng user_rng(user_seed);
  state_.users.clear();
  while (static_cast<int>(state_.users.size()) < cfg_.n_users) {
    const int x = user_rng.uniform_int(cfg_.grid_w);
    const int y = user_rng.uniform_int(cfg_.grid_h);
    const bool dup = std::any_of(state_.users.begin(), state_.users.end(),
                                 [&](const auto& u) { return u.first == x && u.second == y; });
    if (!dup) state_.users.emplace_back(x, y);
  }
}

Vector Env::reset() {
  state_.uav_x = cfg_.grid_w / 2;
  state_.uav_y = cfg_.grid_h / 2;
  state_.weather.sigma = cfg_.wind_sigma_cells;
  state_.weather.amplitude = cfg_.wind_amplitude;
  state_.weather.cx = dynamics_rng_.uniform(0.0, static_cast<double>(cfg_.grid_w));
  state_.weather.cy = dynamics_rng_.uniform(0.0, static_cast<double>(cfg_.grid_h));
  state_.t = 0;
  active_ = true;
  return build_observation();
}

std::pair<int, int> Env::moved_cell(int action) const {
  int x = state_.uav_x;
  int y = state_.uav_y;
  switch (action) {
    case kStay: break;
    case kNorth: y += 1; break;
    case kSouth: y -= 1; break;
    case kEast: x += 1; break;
    case kWest: x -= 1; break;
    default: throw std::invalid_argument("Env::step: invalid action " + std::to_string(action));
  }
  x = std::clamp(x, 0, cfg_.grid_w - 1);
  y = std::clamp(y, 0, cfg_.grid_h - 1);
  return {x, y};
}

Env::StepResult Env::step(int action) {
  if (!active_ || state_.t >= cfg_.horizon) {
    throw std::logic_error("Env::step: episode is finished; call reset()");
  }
  // Turbulence: with probability slip_coeff * wind at the current cell the
  // commanded move is replaced by a uniformly random one.
  const double w_here = wind_at(state_.weather, state_.uav_x + 0.5, state_.uav_y + 0.5);
  const double p_slip = cfg_.slip_coeff * w_here;
  int executed = action;
  if (p_slip > 0.0 && dynamics_rng_.uniform() < p_slip) {
    executed = dynamics_rng_.uniform_int(kNumActions);
  }
  const auto [nx, ny] = moved_cell(executed);
  state_.uav_x = nx;
  state_.uav_y = ny;
  state_.weather = advance_weather(state_.weather, cfg_, dynamics_rng_);
  const double w_new = wind_at(state_.weather, state_.uav_x + 0.5, state_.uav_y + 0.5);
  double reward = 0.0;
  for (const auto& [ux, uy] : state_.users) {
    reward += user_capacity(cfg_, state_.uav_x, state_.uav_y, ux, uy, w_new) / cfg_.reward_unit;
  }
  state_.t += 1;
  StepResult out;
  out.reward = reward;
  out.done = state_.t == cfg_.horizon;
  out.obs = build_observation();
  if (out.done) active_ = false;
  return out;
}

Vector Env::build_observation() const {
  Vector obs(cfg_.obs_size());
  obs(0) = static_cast<double>(state_.uav_x) / cfg_.grid_w;
  obs(1) = static_cast<double>(state_.uav_y) / cfg_.grid_h;
  int k = 2;
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      const int cx = std::clamp(state_.uav_x + dx, 0, cfg_.grid_w - 1);
      const int cy = std::clamp(state_.uav_y + dy, 0, cfg_.grid_h - 1);
      obs(k++) = wind_at(state_.weather, cx + 0.5, cy + 0.5);
    }
  }
  const double max_diag = std::hypot(cfg_.grid_w * cfg_.cell_size_m, cfg_.grid_h * cfg_.cell_size_m);
  for (const auto& [ux, uy] : state_.users) {
    const double hx = (state_.uav_x - ux) * cfg_.cell_size_m;
    const double hy = (state_.uav_y - uy) * cfg_.cell_size_m;
    obs(k++) = std::hypot(hx, hy) / max_diag;
  }
  return obs;
}

double Env::max_step_reward() const {
  const double cap = user_capacity(cfg_, 0, 0, 0, 0, 0.0);
  return cfg_.n_users * cap / cfg_.reward_unit;
}

}  // namespace wd::env
