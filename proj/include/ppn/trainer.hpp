#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppn/config.hpp"
#include "ppn/exec.hpp"
#include "ppn/model.hpp"

namespace ppn {

struct AdamState {
  std::vector<std::vector<double>> m, v;  // aligned with PPNParams::all()
  int64_t t = 0;
  void init_like(const PPNParams& p);
};

// Global L2 norm over the flattened gradient: sequential sum of squares per
// tensor, pairwise-combined across tensors.
double global_grad_norm(const std::vector<std::vector<double>>& grads);

// Scales gradients so the global norm is at most max_norm. Returns the
// pre-clip norm.
double clip_grad_norm(std::vector<std::vector<double>>& grads, double max_norm);

// Standard bias-corrected Adam; epsilon is added outside the square root.
void adam_step(PPNParams& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps);

struct TrainResult {
  bool diverged = false;
  int iterations = 0;
  int64_t total_steps = 0;
  double last_mean_return = 0.0;  // rollout episodes of the final iteration
  std::string metrics_path, checkpoint_path, config_path;
};

// Algorithm: repeat { collect n steps with theta' -> GAE -> returns -> caches
// -> K epochs of shuffled minibatch Adam steps -> theta' = theta }.
// Writes config.snapshot, metrics.csv (one row per iteration), periodic
// ckpt_iter_*.bin and ckpt_final.bin into out_dir. A non-finite minibatch
// loss aborts with a diagnostic dump (diverged_dump.txt) and
// TrainResult.diverged = true.
TrainResult train(const RunConfig& cfg, const std::string& out_dir);

struct EvalResult {
  double mean_return = 0.0, std_return = 0.0, mean_len = 0.0;
  int episodes = 0;
};

// Runs `episodes` full episodes under the given exec mode without mutating
// any training state. T selects sigma(T) for stochastic action sampling.
EvalResult evaluate(const PPNParams& params, const SigmaSchedule& sched, int64_t T,
                    const std::string& env_name, int episodes, ExecMode mode, uint64_t seed);

// Stream tags for substream_seed(master, tag); fixed so runs are reproducible
// and documented.
enum : uint64_t {
  kStreamEnv = 1,
  kStreamShuffle = 2,
  kStreamInit = 3,
  kStreamEval = 11,
  kStreamEvalScratch = 12,
};

}  // namespace ppn
