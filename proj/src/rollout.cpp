#include "ppn/rollout.hpp"

#include <cstdio>
#include <stdexcept>

#include "ppn/tape.hpp"

namespace ppn {

RolloutContext::RolloutContext(const std::string& env_name, uint64_t env_seed)
    : env(make_env(env_name)), env_rng(env_seed) {}

void sample_action(std::span<const double> mu, std::span<const double> sigma,
                   RngStream& rng, std::span<double> out) {
  for (size_t j = 0; j < mu.size(); ++j) out[j] = mu[j] + sigma[j] * rng.normal();
}

EpisodeStats collect(RolloutContext& ctx, const PolicyEval& pol, const SigmaSchedule& sched,
                     int n, TrajectoryBatch& out) {
  if (n < 1) throw std::invalid_argument("collect: n must be >= 1");
  const EnvSpec& spec = ctx.env->spec();
  int x = spec.obs_dim, z = spec.act_dim, h = pol.params().hidden;

  out = {};
  out.n = n;
  out.obs_dim = x;
  out.act_dim = z;
  out.hidden = h;
  out.obs.resize(static_cast<size_t>(n) * x);
  out.act.resize(static_cast<size_t>(n) * z);
  out.rew.resize(n);
  out.done.resize(n);
  out.logp_old.resize(n);
  out.v_old.resize(n);
  out.sigma.resize(static_cast<size_t>(n) * z);
  out.episode.resize(n);
  out.enc_old.resize(static_cast<size_t>(n) * h);

  EpisodeStats stats;
  std::vector<double> mu(z), a(z);
  for (int t = 0; t < n; ++t) {
    if (!ctx.started) {
      ctx.obs = ctx.env->reset(ctx.env_rng);
      ctx.started = true;
      ctx.ep_return = 0.0;
      ctx.ep_len = 0;
    }
    std::copy(ctx.obs.begin(), ctx.obs.end(), out.obs.begin() + static_cast<size_t>(t) * x);
    std::span<double> s0(out.enc_old.data() + static_cast<size_t>(t) * h, h);
    pol.encode(ctx.obs, s0);
    pol.policy_mean(s0, mu);
    std::span<double> sig(out.sigma.data() + static_cast<size_t>(t) * z, z);
    sched.at(ctx.T, sig);
    sample_action(mu, sig, ctx.env_rng, a);
    std::copy(a.begin(), a.end(), out.act.begin() + static_cast<size_t>(t) * z);
    out.logp_old[t] = gaussian_logp_row(mu, sig, a);
    out.v_old[t] = pol.value(s0);
    out.episode[t] = ctx.episode_counter;

    StepResult sr;
    try {
      sr = ctx.env->step(a);
    } catch (const std::exception& e) {
      throw std::runtime_error("environment fault at step " + std::to_string(t) + ": " +
                               e.what());
    }
    out.rew[t] = sr.reward;
    out.done[t] = sr.done ? 1 : 0;
    ctx.obs = std::move(sr.obs);
    ctx.ep_return += sr.reward;
    ++ctx.ep_len;
    ++ctx.T;
    if (sr.done) {
      stats.returns.push_back(ctx.ep_return);
      stats.lengths.push_back(ctx.ep_len);
      ++ctx.episode_counter;
      ctx.started = false;
    }
  }

  if (out.done[n - 1]) {
    out.boot_value = 0.0;
  } else {
    std::vector<double> s(h);
    pol.encode(ctx.obs, s);
    out.boot_value = pol.value(s);
  }
  compute_seg_len(out);
  return stats;
}

void compute_gae(TrajectoryBatch& b, double gamma, double lambda) {
  if (!(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("compute_gae: need 0 <= gamma, lambda <= 1");
  int n = b.n;
  b.adv.assign(n, 0.0);
  double next_adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    double not_done = b.done[t] ? 0.0 : 1.0;
    double v_next = t + 1 < n ? b.v_old[t + 1] : b.boot_value;
    double delta = b.rew[t] + gamma * not_done * v_next - b.v_old[t];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    b.adv[t] = next_adv;
  }
}

void compute_returns(TrajectoryBatch& b) {
  if (b.adv.empty()) throw std::logic_error("compute_returns: advantages not computed");
  b.ret.resize(b.n);
  for (int t = 0; t < b.n; ++t) b.ret[t] = b.adv[t] + b.v_old[t];
}

void compute_seg_len(TrajectoryBatch& b) {
  b.seg_len.assign(b.n, 1);
  for (int t = b.n - 2; t >= 0; --t)
    if (!b.done[t]) b.seg_len[t] = b.seg_len[t + 1] + 1;
}

void cache_old_estimates(TrajectoryBatch& b, const PolicyEval& pol, ClipScheme scheme, int d) {
  int n = b.n, z = b.act_dim, h = b.hidden;
  auto obs_act = [&](int t) {
    return std::span<const double>(b.act.data() + static_cast<size_t>(t) * z, z);
  };
  auto enc_row = [&](int t) {
    return std::span<const double>(b.enc_old.data() + static_cast<size_t>(t) * h, h);
  };

  b.rhat_grounded.resize(n);
  for (int t = 0; t < n; ++t) b.rhat_grounded[t] = pol.reward(enc_row(t), obs_act(t));

  if (scheme != ClipScheme::Ungrounded) return;
  if (d < 0) throw std::invalid_argument("cache_old_estimates: d must be >= 0");
  b.cache_depth = d;
  b.v_old_depth.assign(static_cast<size_t>(n) * (d + 1), 0.0);
  b.rhat_old_depth.assign(static_cast<size_t>(n) * std::max(d, 1), 0.0);
  b.logp_old_depth.assign(static_cast<size_t>(n) * std::max(d, 1), 0.0);

  std::vector<double> s(h), s_next(h), mu(z);
  for (int t = 0; t < n; ++t) {
    int depth = std::min(d, b.seg_len[t]);
    std::copy(enc_row(t).begin(), enc_row(t).end(), s.begin());
    for (int i = 0; i < depth; ++i) {
      b.v_old_depth[static_cast<size_t>(t) * (d + 1) + i] = pol.value(s);
      pol.policy_mean(s, mu);
      std::span<const double> sig(b.sigma.data() + static_cast<size_t>(t + i) * z, z);
      b.logp_old_depth[static_cast<size_t>(t) * d + i] =
          gaussian_logp_row(mu, sig, obs_act(t + i));
      b.rhat_old_depth[static_cast<size_t>(t) * d + i] = pol.reward(s, obs_act(t + i));
      pol.transition(s, obs_act(t + i), s_next);
      std::swap(s, s_next);
    }
    b.v_old_depth[static_cast<size_t>(t) * (d + 1) + depth] = pol.value(s);
  }
}

void write_trajectory_csv(const TrajectoryBatch& b, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "t,episode");
  for (int j = 0; j < b.obs_dim; ++j) std::fprintf(f, ",obs%d", j);
  for (int j = 0; j < b.act_dim; ++j) std::fprintf(f, ",act%d", j);
  std::fprintf(f, ",reward,done,v_old,logp_old\n");
  for (int t = 0; t < b.n; ++t) {
    std::fprintf(f, "%d,%d", t, b.episode[t]);
    for (int j = 0; j < b.obs_dim; ++j)
      std::fprintf(f, ",%.17g", b.obs[static_cast<size_t>(t) * b.obs_dim + j]);
    for (int j = 0; j < b.act_dim; ++j)
      std::fprintf(f, ",%.17g", b.act[static_cast<size_t>(t) * b.act_dim + j]);
    std::fprintf(f, ",%.17g,%d,%.17g,%.17g\n", b.rew[t], b.done[t] ? 1 : 0, b.v_old[t],
                 b.logp_old[t]);
  }
  std::fclose(f);
}

}  // namespace ppn
