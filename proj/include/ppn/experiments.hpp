#pragma once

#include <string>
#include <vector>

#include "ppn/config.hpp"
#include "ppn/trainer.hpp"

namespace ppn {

struct SeedRun {
  uint64_t seed = 0;
  std::string run_dir;
  TrainResult train;
  EvalResult eval;  // deterministic-mean model_free eval (skipped if diverged)
};

struct DepthSweepResult {
  std::vector<int> depths;
  std::vector<std::vector<SeedRun>> runs;  // [depth][seed]
  std::string report_path, figure_path;
};

// Trains base over depths x seeds, evaluates each final checkpoint, writes
// report.csv (one row per run), an aggregate per-depth table, and a
// learning-curve figure.
DepthSweepResult sweep_depth(const RunConfig& base, const std::vector<int>& depths,
                             const std::vector<uint64_t>& seeds, const std::string& out_root);

struct ClipAblationResult {
  std::vector<std::string> variants;  // grounded, ungrounded, no_vr, no_clip
  std::vector<std::vector<SeedRun>> runs;
  std::vector<std::vector<double>> loss_pi_variance;  // per variant, per seed
  std::string report_path, figure_path;
};

// The four clipping variants of the base config over the seed list. no_vr
// keeps the policy clip but disables value/reward clips; no_clip disables all
// three. Divergence (NaN abort) is recorded, not fatal.
ClipAblationResult ablate_clipping(const RunConfig& base, const std::vector<uint64_t>& seeds,
                                   const std::string& out_root);

struct TransitionAblationResult {
  std::string checkpoint_path, checkpoint_hash;
  int horizon = 1;
  bool stochastic = true;
  std::vector<std::string> modes;
  std::vector<std::vector<EvalResult>> evals;  // [mode][seed]
  std::string report_path, figure_path;
};

// Evaluates one trained checkpoint under each exec mode (same parameters for
// all modes; the checkpoint hash is logged in the report).
TransitionAblationResult ablate_transition(const std::string& ckpt_path,
                                           const std::string& env_name,
                                           const std::vector<std::string>& modes, int horizon,
                                           int episodes, const std::vector<uint64_t>& seeds,
                                           bool stochastic, const std::string& out_root);

}  // namespace ppn
