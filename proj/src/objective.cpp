#include "ppn/objective.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ppn/linalg.hpp"

namespace ppn {

void LossConfig::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("LossConfig: eps must be > 0");
  if (d_pi < 1) throw std::invalid_argument("LossConfig: d_pi must be >= 1");
  if (d_v < 0 || d_r < 0) throw std::invalid_argument("LossConfig: depths must be >= 0");
  if (alpha_v < 0.0 || alpha_r < 0.0 || alpha_h < 0.0)
    throw std::invalid_argument("LossConfig: coefficients must be >= 0");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("LossConfig: huber_delta must be > 0");
  if (!(log_ratio_clamp > 0.0))
    throw std::invalid_argument("LossConfig: log_ratio_clamp must be > 0");
}

double gaussian_entropy(std::span<const double> sigma) {
  double h = 0.0;
  for (double s : sigma)
    h += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * s * s);
  return h;
}

AdvNorm advantage_normalizer(const TrajectoryBatch& batch, std::span<const int> idx,
                             bool enabled) {
  AdvNorm nrm;
  if (!enabled || idx.empty()) return nrm;
  std::vector<double> vals(idx.size());
  for (size_t b = 0; b < idx.size(); ++b) vals[b] = batch.adv[idx[b]];
  double mean = pairwise_sum(vals) / static_cast<double>(vals.size());
  for (size_t b = 0; b < vals.size(); ++b) vals[b] = (vals[b] - mean) * (vals[b] - mean);
  double var = pairwise_sum(vals) / static_cast<double>(vals.size());
  nrm.mean = mean;
  nrm.inv_std = 1.0 / (std::sqrt(var) + 1e-8);
  return nrm;
}

namespace {

double clamp_log(double x, double c) { return std::min(std::max(x, -c), c); }

}  // namespace

LossBreakdown total_loss(ModelOnTape& model, const TrajectoryBatch& batch,
                         std::span<const int> idx, const LossConfig& cfg, int64_t T,
                         LossValues* values) {
  cfg.validate();
  const int B = static_cast<int>(idx.size());
  if (B == 0) throw std::invalid_argument("total_loss: empty minibatch");
  const int x = batch.obs_dim, z = batch.act_dim;
  const bool reward_active = cfg.alpha_r > 0.0 && cfg.d_r >= 1;
  const bool ungrounded = cfg.scheme == ClipScheme::Ungrounded;
  if (batch.rhat_grounded.empty())
    throw std::logic_error("total_loss: caches missing (cache_old_estimates not run)");
  if (ungrounded) {
    int need = std::max({cfg.d_pi, cfg.d_v, reward_active ? cfg.d_r : 0});
    if (batch.cache_depth < need)
      throw std::logic_error("total_loss: ungrounded caches shallower than configured depths");
  }

  Tape& tape = model.tape();
  const double C = cfg.log_ratio_clamp;

  // Highest state index any term touches, and how many action leaves exist.
  const int max_state = std::max({cfg.d_pi - 1, cfg.d_v, reward_active ? cfg.d_r - 1 : 0});
  const int n_act = std::max(max_state, reward_active ? cfg.d_r : 0);

  // Per-sample effective depths.
  std::vector<int> P(B), V(B), R(B);
  for (int b = 0; b < B; ++b) {
    int L = batch.seg_len[idx[b]];
    P[b] = std::min(cfg.d_pi, L);
    V[b] = std::min(cfg.d_v, L - 1);
    R[b] = reward_active ? std::min(cfg.d_r, L) : 0;
  }

  AdvNorm nrm = advantage_normalizer(batch, idx, cfg.normalize_advantages);

  // Observation leaf and encoder.
  std::vector<double> obs_rows(static_cast<size_t>(B) * x);
  for (int b = 0; b < B; ++b)
    std::copy(batch.obs.begin() + static_cast<size_t>(idx[b]) * x,
              batch.obs.begin() + static_cast<size_t>(idx[b] + 1) * x,
              obs_rows.begin() + static_cast<size_t>(b) * x);
  Value obs_leaf = tape.leaf(B, x, obs_rows);
  std::vector<Value> states;
  states.push_back(model.encode(obs_leaf));

  // Action leaves (zero rows where the depth index runs past the episode) and
  // the latent state chain.
  std::vector<Value> act_leaves;
  std::vector<double> arow(static_cast<size_t>(B) * z);
  for (int i = 0; i < n_act; ++i) {
    std::fill(arow.begin(), arow.end(), 0.0);
    for (int b = 0; b < B; ++b) {
      int L = batch.seg_len[idx[b]];
      if (i < L)
        std::copy(batch.act.begin() + static_cast<size_t>(idx[b] + i) * z,
                  batch.act.begin() + static_cast<size_t>(idx[b] + i + 1) * z,
                  arow.begin() + static_cast<size_t>(b) * z);
    }
    act_leaves.push_back(tape.leaf(B, z, arow));
    if (i < max_state) states.push_back(model.transition(states.back(), act_leaves[i]));
  }

  LossBreakdown out;
  out.entropy = gaussian_entropy(model.schedule().at(T));

  // ---- policy term ----
  Value loss_pi;
  int64_t clip_count_pi = 0, active_pi = 0;
  {
    std::vector<double> sig(static_cast<size_t>(B) * z), act(static_cast<size_t>(B) * z);
    std::vector<double> denom(B), adv(B), w(B), cache_lp(B), imp(B);
    for (int i = 0; i < cfg.d_pi; ++i) {
      std::fill(sig.begin(), sig.end(), 1.0);
      std::fill(act.begin(), act.end(), 0.0);
      for (int b = 0; b < B; ++b) {
        bool on = i < P[b];
        int t = idx[b];
        denom[b] = on ? batch.logp_old[t + i] : 0.0;
        adv[b] = on ? nrm.apply(batch.adv[t + i]) : 0.0;
        w[b] = on ? 1.0 / (static_cast<double>(B) * P[b]) : 0.0;
        if (on) {
          std::copy(batch.sigma.begin() + static_cast<size_t>(t + i) * z,
                    batch.sigma.begin() + static_cast<size_t>(t + i + 1) * z,
                    sig.begin() + static_cast<size_t>(b) * z);
          std::copy(batch.act.begin() + static_cast<size_t>(t + i) * z,
                    batch.act.begin() + static_cast<size_t>(t + i + 1) * z,
                    act.begin() + static_cast<size_t>(b) * z);
        }
        if (ungrounded) {
          double lp_cache = on ? batch.logp_old_depth[static_cast<size_t>(t) *
                                                          batch.cache_depth + i]
                               : 0.0;
          cache_lp[b] = lp_cache;
          imp[b] = on ? std::exp(clamp_log(lp_cache - batch.logp_old[t + i], C)) : 1.0;
        }
      }
      Value mu = model.policy_mean(states[i]);
      Value logp = gaussian_log_prob(mu, sig, act);
      Value ratio = exp(clip(sub(logp, tape.leaf(B, 1, denom)), -C, C));
      Value adv_leaf = tape.leaf(B, 1, adv);
      Value term1 = scale(mul(ratio, adv_leaf), -1.0);
      Value maxed = term1;
      if (cfg.clip_policy) {
        Value ratio_clip;
        if (!ungrounded) {
          ratio_clip = clip(ratio, 1.0 - cfg.eps, 1.0 + cfg.eps);
        } else {
          Value inner = exp(clip(sub(logp, tape.leaf(B, 1, cache_lp)), -C, C));
          ratio_clip = mul(clip(inner, 1.0 - cfg.eps, 1.0 + cfg.eps), tape.leaf(B, 1, imp));
        }
        maxed = max(term1, scale(mul(ratio_clip, adv_leaf), -1.0));
      }
      Value contrib = sum(mul(maxed, tape.leaf(B, 1, w)));
      loss_pi = i == 0 ? contrib : add(loss_pi, contrib);
      auto rd = ratio.data();
      for (int b = 0; b < B; ++b) {
        if (i >= P[b]) continue;
        ++active_pi;
        if (std::abs(rd[b] - 1.0) > cfg.eps) ++clip_count_pi;
      }
    }
    if (cfg.alpha_h != 0.0)
      loss_pi = add(loss_pi, tape.constant(-cfg.alpha_h * out.entropy));
  }

  // ---- value term ----
  Value loss_v;
  int64_t clip_count_v = 0, active_v = 0;
  {
    std::vector<double> tgt(B), center(B), w(B);
    for (int i = 0; i <= cfg.d_v; ++i) {
      for (int b = 0; b < B; ++b) {
        bool on = i <= V[b];
        int t = idx[b];
        tgt[b] = on ? batch.ret[t + i] : 0.0;
        w[b] = on ? 1.0 / (static_cast<double>(B) * (V[b] + 1)) : 0.0;
        if (cfg.clip_value) {
          if (!ungrounded)
            center[b] = on ? batch.v_old[t + i] : 0.0;
          else
            center[b] =
                on ? batch.v_old_depth[static_cast<size_t>(t) * (batch.cache_depth + 1) + i]
                   : 0.0;
        }
      }
      Value v_i = model.value(states[i]);
      Value tgt_leaf = tape.leaf(B, 1, tgt);
      Value unclipped = huber(sub(v_i, tgt_leaf), cfg.huber_delta);
      Value maxed = unclipped;
      if (cfg.clip_value) {
        Value c_leaf = tape.leaf(B, 1, center);
        Value v_clip = add(clip(sub(v_i, c_leaf), -cfg.eps, cfg.eps), c_leaf);
        maxed = max(unclipped, huber(sub(v_clip, tgt_leaf), cfg.huber_delta));
        auto vd = v_i.data();
        for (int b = 0; b < B; ++b) {
          if (i > V[b]) continue;
          if (std::abs(vd[b] - center[b]) > cfg.eps) ++clip_count_v;
        }
      }
      for (int b = 0; b < B; ++b)
        if (i <= V[b]) ++active_v;
      Value contrib = sum(mul(maxed, tape.leaf(B, 1, w)));
      loss_v = i == 0 ? contrib : add(loss_v, contrib);
    }
  }

  // ---- reward term ----
  Value loss_r;
  int64_t clip_count_r = 0, active_r = 0;
  if (reward_active) {
    std::vector<double> tgt(B), center(B), w(B);
    for (int i0 = 0; i0 < cfg.d_r; ++i0) {
      for (int b = 0; b < B; ++b) {
        bool on = i0 < R[b];
        int t = idx[b];
        tgt[b] = on ? batch.rew[t + i0] : 0.0;
        w[b] = on ? 1.0 / (static_cast<double>(B) * R[b]) : 0.0;
        if (cfg.clip_reward) {
          if (!ungrounded)
            center[b] = on ? batch.rhat_grounded[t + i0] : 0.0;
          else
            center[b] =
                on ? batch.rhat_old_depth[static_cast<size_t>(t) * batch.cache_depth + i0]
                   : 0.0;
        }
      }
      Value rhat = model.reward(states[i0], act_leaves[i0]);
      Value tgt_leaf = tape.leaf(B, 1, tgt);
      Value unclipped = huber(sub(rhat, tgt_leaf), cfg.huber_delta);
      Value maxed = unclipped;
      if (cfg.clip_reward) {
        Value c_leaf = tape.leaf(B, 1, center);
        Value r_clip = add(clip(sub(rhat, c_leaf), -cfg.eps, cfg.eps), c_leaf);
        maxed = max(unclipped, huber(sub(r_clip, tgt_leaf), cfg.huber_delta));
        auto rd = rhat.data();
        for (int b = 0; b < B; ++b) {
          if (i0 >= R[b]) continue;
          if (std::abs(rd[b] - center[b]) > cfg.eps) ++clip_count_r;
        }
      }
      for (int b = 0; b < B; ++b)
        if (i0 < R[b]) ++active_r;
      Value contrib = sum(mul(maxed, tape.leaf(B, 1, w)));
      loss_r = i0 == 0 ? contrib : add(loss_r, contrib);
    }
  }

  // ---- compose total ----
  Value total = add(loss_pi, scale(loss_v, cfg.alpha_v));
  if (reward_active) total = add(total, scale(loss_r, cfg.alpha_r));

  out.loss_pi = loss_pi.scalar();
  out.loss_v = loss_v.scalar();
  out.loss_r = reward_active ? loss_r.scalar() : 0.0;
  out.total = total.scalar();
  out.clip_frac_pi = active_pi ? static_cast<double>(clip_count_pi) / active_pi : 0.0;
  out.clip_frac_v = active_v ? static_cast<double>(clip_count_v) / active_v : 0.0;
  out.clip_frac_r = active_r ? static_cast<double>(clip_count_r) / active_r : 0.0;
  if (values) *values = {loss_pi, loss_v, loss_r, total};
  return out;
}

}  // namespace ppn
