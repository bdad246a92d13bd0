#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppn/model.hpp"
#include "ppn/rng.hpp"

namespace ppn {

enum class ExecModeTag { ModelFree, Mpc, Trajectory, Repeat };

ExecModeTag parse_exec_mode(const std::string& name);  // unknown -> invalid_argument
std::string exec_mode_name(ExecModeTag tag);

struct ExecMode {
  ExecModeTag tag = ExecModeTag::ModelFree;
  int horizon = 1;         // d; ignored by model_free
  bool stochastic = true;  // sample vs mean action
};

// Action selection over a frozen policy. All modes draw env-facing actions
// from the caller's stream; MPC's unexecuted planning draws come from a
// private per-step scratch stream, so MPC advances the caller's stream
// exactly like model_free and (on a deterministic env) matches it
// step-for-step. All modes coincide with model_free at horizon 1.
class Executor {
 public:
  Executor(const PolicyEval& pol, const SigmaSchedule& sched, ExecMode mode,
           uint64_t scratch_seed);

  // Writes one action for the current observation. T selects sigma(T).
  void act(std::span<const double> obs, int64_t T, RngStream& rng, std::span<double> out);
  // Drop any open-loop plan (call on episode reset).
  void reset_plan();
  const ExecMode& mode() const { return mode_; }

 private:
  void sample_or_mean(std::span<const double> mu, std::span<const double> sig,
                      RngStream& rng, std::span<double> out);
  const PolicyEval* pol_;
  const SigmaSchedule* sched_;
  ExecMode mode_;
  uint64_t scratch_seed_;
  int64_t step_counter_ = 0;
  std::vector<std::vector<double>> plan_;
  size_t plan_cursor_ = 0;
};

}  // namespace ppn
