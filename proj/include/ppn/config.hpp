#pragma once

#include <cstdint>
#include <string>

#include "ppn/objective.hpp"

namespace ppn {

// Full experiment configuration. depth sets d_pi/d_v/d_r uniformly; the
// per-head fields override it when >= 0. Serializes to diffable key=value
// text; doubles round-trip losslessly (%.17g).
struct RunConfig {
  std::string env = "pointmass2d";
  uint64_t seed = 0;
  int64_t total_steps = 300000;
  int n_steps = 2048;   // n, samples per iteration
  int epochs = 10;      // K
  int minibatch = 64;   // M
  double gamma = 0.99;
  double lambda = 0.95;
  double lr = 3e-4;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double max_grad_norm = 0.5;
  int hidden = 128;
  int depth = 1;
  int d_pi = -1, d_v = -1, d_r = -1;  // -1: follow depth
  std::string clip_scheme = "grounded";
  double eps_clip = 0.2;
  double alpha_v = 0.5, alpha_r = 0.5, alpha_h = 0.0;
  double huber_delta = 1.0;
  bool clip_policy = true, clip_value = true, clip_reward = true;
  bool normalize_advantages = true;
  double sigma_start = 0.6, sigma_end = 0.1;
  int64_t sigma_horizon = 0;  // 0: total_steps
  int checkpoint_every = 10;
  bool record_timing = false;    // off keeps wall_seconds at 0.0 for bit-reproducible logs
  bool dump_trajectories = false;
  int eval_episodes = 20;

  void validate() const;  // throws std::invalid_argument
  LossConfig loss_config() const;
  int resolved_d_pi() const { return d_pi >= 0 ? d_pi : depth; }
  int resolved_d_v() const { return d_v >= 0 ? d_v : depth; }
  int resolved_d_r() const { return d_r >= 0 ? d_r : depth; }
  int64_t resolved_sigma_horizon() const { return sigma_horizon > 0 ? sigma_horizon : total_steps; }
  ClipScheme scheme() const;
  // The PPO2 reduction: alpha_r=0, d_pi=1, d_v=0.
  void apply_ppo2_reduction();

  std::string to_text() const;
  static RunConfig from_text(const std::string& text);  // unknown key -> invalid_argument
  void save(const std::string& path) const;
  static RunConfig load(const std::string& path);  // missing file -> runtime_error
};

}  // namespace ppn
