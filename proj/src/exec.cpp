#include "ppn/exec.hpp"

#include <stdexcept>

#include "ppn/rollout.hpp"

namespace ppn {

ExecModeTag parse_exec_mode(const std::string& name) {
  if (name == "model_free") return ExecModeTag::ModelFree;
  if (name == "mpc") return ExecModeTag::Mpc;
  if (name == "trajectory") return ExecModeTag::Trajectory;
  if (name == "repeat") return ExecModeTag::Repeat;
  throw std::invalid_argument("unknown exec mode '" + name +
                              "'; available: model_free mpc trajectory repeat");
}

std::string exec_mode_name(ExecModeTag tag) {
  switch (tag) {
    case ExecModeTag::ModelFree: return "model_free";
    case ExecModeTag::Mpc: return "mpc";
    case ExecModeTag::Trajectory: return "trajectory";
    case ExecModeTag::Repeat: return "repeat";
  }
  return "?";
}

Executor::Executor(const PolicyEval& pol, const SigmaSchedule& sched, ExecMode mode,
                   uint64_t scratch_seed)
    : pol_(&pol), sched_(&sched), mode_(mode), scratch_seed_(scratch_seed) {
  if (mode_.horizon < 1) throw std::invalid_argument("Executor: horizon must be >= 1");
}

void Executor::sample_or_mean(std::span<const double> mu, std::span<const double> sig,
                              RngStream& rng, std::span<double> out) {
  if (mode_.stochastic)
    sample_action(mu, sig, rng, out);
  else
    std::copy(mu.begin(), mu.end(), out.begin());
}

void Executor::reset_plan() {
  plan_.clear();
  plan_cursor_ = 0;
}

void Executor::act(std::span<const double> obs, int64_t T, RngStream& rng,
                   std::span<double> out) {
  const int h = pol_->params().hidden;
  const int z = pol_->params().act_dim;
  const int d = mode_.horizon;
  std::vector<double> sig = sched_->at(T);
  ++step_counter_;

  // Open-loop modes consume a previously made plan first.
  if ((mode_.tag == ExecModeTag::Trajectory || mode_.tag == ExecModeTag::Repeat) &&
      plan_cursor_ < plan_.size()) {
    std::copy(plan_[plan_cursor_].begin(), plan_[plan_cursor_].end(), out.begin());
    ++plan_cursor_;
    return;
  }

  std::vector<double> s(h), mu(z);
  pol_->encode(obs, s);
  pol_->policy_mean(s, mu);
  sample_or_mean(mu, sig, rng, out);

  switch (mode_.tag) {
    case ExecModeTag::ModelFree:
      return;
    case ExecModeTag::Mpc: {
      // Plan d steps but follow only the first action; deeper draws come from
      // a per-step scratch stream so the caller's stream is untouched.
      RngStream scratch(substream_seed(scratch_seed_, static_cast<uint64_t>(step_counter_)));
      std::vector<double> s_next(h), a(out.begin(), out.end());
      for (int i = 1; i < d; ++i) {
        pol_->transition(s, a, s_next);
        std::swap(s, s_next);
        pol_->policy_mean(s, mu);
        sample_or_mean(mu, sig, scratch, a);
      }
      return;
    }
    case ExecModeTag::Trajectory: {
      // Generate d actions by recursive latent rollout; execute all of them
      // open-loop before re-encoding.
      plan_.assign(1, std::vector<double>(out.begin(), out.end()));
      std::vector<double> s_next(h), a(out.begin(), out.end());
      for (int i = 1; i < d; ++i) {
        pol_->transition(s, a, s_next);
        std::swap(s, s_next);
        pol_->policy_mean(s, mu);
        sample_or_mean(mu, sig, rng, a);
        plan_.push_back(a);
      }
      plan_cursor_ = 1;  // out already carries plan_[0]
      return;
    }
    case ExecModeTag::Repeat: {
      plan_.assign(d, std::vector<double>(out.begin(), out.end()));
      plan_cursor_ = 1;
      return;
    }
  }
}

}  // namespace ppn
