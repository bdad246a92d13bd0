#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ppn/envs.hpp"
#include "ppn/model.hpp"
#include "ppn/rng.hpp"

namespace ppn {

enum class ClipScheme { Grounded, Ungrounded };

// n-step trajectory stored struct-of-arrays (row-major [n x dim]), plus the
// derived quantities and every old-parameter cache the clipping schemes need.
// All caches are computed with the rollout parameters before any update.
struct TrajectoryBatch {
  int n = 0, obs_dim = 0, act_dim = 0, hidden = 0;
  std::vector<double> obs;       // n x obs_dim
  std::vector<double> act;       // n x act_dim (as sampled, pre-clamp)
  std::vector<double> rew;       // r_{t+1}
  std::vector<uint8_t> done;
  std::vector<double> logp_old;  // log pi_theta'(a_t | s-hat^0_t)
  std::vector<double> v_old;     // v-hat^0_t under theta'
  std::vector<double> sigma;     // n x act_dim, sigma(T) at sampling time
  std::vector<int> episode;      // running episode index
  std::vector<double> enc_old;   // n x hidden, s-hat^0 under theta'
  double boot_value = 0.0;       // v_theta' of the state after step n; 0 if done

  std::vector<double> adv, ret;
  std::vector<int> seg_len;  // contiguous same-episode steps starting at t

  std::vector<double> rhat_grounded;  // f^r_theta'(s-hat^0_t, a_t)

  // Ungrounded caches, filled only for that scheme. Row t covers the theta'
  // unroll from s-hat^0_t along recorded actions:
  //   v_old_depth[t*(D+1)+i]  = v-hat^i_{t,theta'},           i = 0..D
  //   rhat_old_depth[t*D+i]   = r-hat^{i+1}_{t,theta'},       i = 0..D-1
  //   logp_old_depth[t*D+i]   = log pi_theta'(a_{t+i}|s-hat^i_{t,theta'})
  // truncated at episode boundaries / batch end; unused slots stay zero.
  int cache_depth = 0;  // D
  std::vector<double> v_old_depth;
  std::vector<double> rhat_old_depth;
  std::vector<double> logp_old_depth;
};

// Persistent acting state: episodes span collection batches.
struct RolloutContext {
  RolloutContext(const std::string& env_name, uint64_t env_seed);
  std::unique_ptr<Env> env;
  RngStream env_rng;
  std::vector<double> obs;
  bool started = false;
  int64_t T = 0;  // samples seen; advances by 1 per step
  int episode_counter = 0;
  double ep_return = 0.0;
  int ep_len = 0;
};

struct EpisodeStats {
  std::vector<double> returns;
  std::vector<int> lengths;
};

// a_j = mu_j + sigma_j * xi_j, xi ~ N(0,1) from `rng` (two uniforms per draw).
void sample_action(std::span<const double> mu, std::span<const double> sigma,
                   RngStream& rng, std::span<double> out);

// Runs pi_theta' for n steps (Eq. 5 sampling), auto-resetting on done.
// Returns stats of episodes completed during this collection.
EpisodeStats collect(RolloutContext& ctx, const PolicyEval& pol, const SigmaSchedule& sched,
                     int n, TrajectoryBatch& out);

// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1},
// delta_t = r_{t+1} + gamma*(1-done_t)*v_{t+1} - v_t, bootstrapped by
// boot_value after step n. Requires 0 <= gamma, lambda <= 1.
void compute_gae(TrajectoryBatch& batch, double gamma, double lambda);

// R_t = A_t + v_old_t.
void compute_returns(TrajectoryBatch& batch);

void compute_seg_len(TrajectoryBatch& batch);

// Grounded: fills rhat_grounded for all t. Ungrounded: additionally unrolls
// theta' to depth d from every step.
void cache_old_estimates(TrajectoryBatch& batch, const PolicyEval& pol, ClipScheme scheme,
                         int d);

// One CSV row per step: t, episode, obs..., act..., reward, done, v_old, logp_old.
void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& path);

}  // namespace ppn
