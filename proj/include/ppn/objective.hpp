#pragma once

#include <cstdint>
#include <span>

#include "ppn/model.hpp"
#include "ppn/rollout.hpp"
#include "ppn/tape.hpp"

namespace ppn {

struct LossConfig {
  double eps = 0.2;          // clip range epsilon
  double alpha_v = 0.5;      // critic coefficient
  double alpha_r = 0.5;      // reward-prediction coefficient
  double alpha_h = 0.0;      // entropy coefficient (sigma is parameter-free,
                             // so this term carries no gradient)
  int d_pi = 1, d_v = 0, d_r = 1;
  ClipScheme scheme = ClipScheme::Grounded;
  double huber_delta = 1.0;
  // Ablation switches: disabled clips collapse the max to the unclipped term.
  bool clip_policy = true, clip_value = true, clip_reward = true;
  // Per-minibatch advantage normalization (mean/population-std over the
  // minibatch's own A_t, applied to every referenced A_{t+i}).
  bool normalize_advantages = true;
  double log_ratio_clamp = 20.0;  // clamp log-ratios before exponentiation

  void validate() const;
};

struct LossBreakdown {
  double loss_pi = 0.0, loss_v = 0.0, loss_r = 0.0;
  double entropy = 0.0;  // H = sum_j 0.5*log(2*pi*e*sigma_j(T)^2)
  double total = 0.0;    // loss_pi + alpha_v*loss_v + alpha_r*loss_r, as on tape
  double clip_frac_pi = 0.0, clip_frac_v = 0.0, clip_frac_r = 0.0;
};

// Tape handles for the loss terms, for per-head backward in tests.
struct LossValues {
  Value pi, v, r, total;  // r invalid when the reward term is skipped
};

// Builds the full depth-d loss over the minibatch `idx` on the model's tape
// and runs the forward pass. Per-sample depths truncate at episode boundaries
// and batch end; padded slots carry zero weight and contribute exactly zero
// gradient. The reward term is skipped entirely when alpha_r == 0 or d_r == 0,
// and no transition is built when no term needs depth >= 1.
LossBreakdown total_loss(ModelOnTape& model, const TrajectoryBatch& batch,
                         std::span<const int> idx, const LossConfig& cfg, int64_t T,
                         LossValues* values = nullptr);

// Diagonal-Gaussian entropy for sigma(T).
double gaussian_entropy(std::span<const double> sigma);

// Mean and population std of the minibatch's base advantages.
struct AdvNorm {
  double mean = 0.0, inv_std = 1.0;
  double apply(double a) const { return (a - mean) * inv_std; }
};
AdvNorm advantage_normalizer(const TrajectoryBatch& batch, std::span<const int> idx,
                             bool enabled);

}  // namespace ppn
