#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "wd/rng.hpp"

namespace wd::env {

using Vector = Eigen::VectorXd;

// UAV-as-mobile-base-station simulator: one UAV serves n_users ground users
// over a 28 GHz downlink on a grid-based area; a drifting Gaussian wind
// hotspot adds attenuation at the UAV and turbulence (action slip).
struct EnvConfig {
  int grid_w = 64;
  int grid_h = 64;
  double cell_size_m = 4.0;
  double carrier_freq_ghz = 28.0;
  double total_bandwidth_hz = 1e8;
  double tx_power_dbm = 30.0;
  int n_users = 10;
  int horizon = 100;
  double uav_altitude_m = 100.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 7.0;
  double wind_sigma_cells = 8.0;
  double wind_amplitude = 1.0;
  double wind_atten_max_db = 20.0;
  double wind_drift_x = 0.5;
  double wind_drift_y = 0.3;
  double wind_drift_jitter_std = 0.1;
  double slip_coeff = 0.5;
  double reward_unit = 1e8;  // bit/s per reward point

  // position (2) + 5x5 wind patch (25) + per-user distances
  int obs_size() const { return 2 + 25 + n_users; }
  void validate() const;  // throws std::invalid_argument naming the field
};

enum Action : int { kStay = 0, kNorth = 1, kSouth = 2, kEast = 3, kWest = 4 };
inline constexpr int kNumActions = 5;

struct WeatherField {
  double cx = 0.0;  // continuous grid coordinates
  double cy = 0.0;
  double sigma = 8.0;    // cells
  double amplitude = 1.0;
};

struct EnvState {
  int uav_x = 0;
  int uav_y = 0;
  std::vector<std::pair<int, int>> users;
  WeatherField weather;
  int t = 0;
};

// Free-space path loss in dB; d3_m is the 3-D distance. Throws on d3 <= 0.
double path_loss_db(double d3_m, double freq_ghz);

// amplitude * exp(-||pos - center||^2 / (2 sigma^2)), distances in cells.
double wind_at(const WeatherField& field, double x, double y);

// Drift plus Gaussian jitter; the center is reflected back into
// [0, grid_w] x [0, grid_h]. Sigma and amplitude are unchanged.
WeatherField advance_weather(const WeatherField& field, const EnvConfig& cfg, Rng& rng);

// Shannon capacity of one UAV->user link in bit/s given the normalized
// wind value at the UAV. Bandwidth is split equally across users.
double user_capacity(const EnvConfig& cfg, int uav_x, int uav_y, int user_x, int user_y,
                     double wind_at_uav);

class Env {
 public:
  // user_seed fixes the user layout for the whole experiment; dynamics_seed
  // drives weather draws, jitter, and action slip.
  Env(EnvConfig cfg, std::uint64_t user_seed, std::uint64_t dynamics_seed);
  Env(EnvConfig cfg, std::uint64_t seed) : Env(cfg, Rng(seed).derive(1).next_u64(), Rng(seed).derive(2).next_u64()) {}

  // Starts a new episode: UAV at grid center, fresh weather center, t = 0.
  Vector reset();

  struct StepResult {
    Vector obs;
    double reward = 0.0;
    bool done = false;
  };
  // Throws std::logic_error if the episode already reached the horizon.
  StepResult step(int action);

  Vector build_observation() const;
  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }

  // Upper bound on the per-step reward (all users at nadir, zero wind).
  double max_step_reward() const;

  // Deterministic next UAV cell for an executed (post-slip) action.
  std::pair<int, int> moved_cell(int action) const;

 private:
  EnvConfig cfg_;
  EnvState state_;
  Rng dynamics_rng_;
  bool active_ = false;
};

}  // namespace wd::env
