#pragma once

// Reproducible synthetic trajectory batches whose caches are self-consistent
// with a behavior parameter set, without touching an environment.

#include <cmath>
#include <vector>

#include "ppn/model.hpp"
#include "ppn/rng.hpp"
#include "ppn/rollout.hpp"
#include "ppn/tape.hpp"

namespace testsup {

struct BatchSpec {
  int n = 6, obs_dim = 3, act_dim = 2, hidden = 16;
  double p_done = 0.2;     // per-step episode break probability
  double sigma = 0.3;      // flat exploration scale
  double act_spread = 1.0; // action = mu' + spread * sigma * xi
  int cache_depth = 0;     // ungrounded unroll depth (0: grounded caches only)
  ppn::ClipScheme scheme = ppn::ClipScheme::Grounded;
};

// obs ~ U(-1,1); actions sampled around the behavior policy's mean; logp/v/enc
// caches computed from `behind` exactly as a rollout would record them; adv
// and ret drawn randomly (any values are a valid loss input).
inline ppn::TrajectoryBatch make_batch(const ppn::PPNParams& behind, const BatchSpec& spec,
                                       ppn::RngStream& rng) {
  ppn::TrajectoryBatch b;
  b.n = spec.n;
  b.obs_dim = spec.obs_dim;
  b.act_dim = spec.act_dim;
  b.hidden = spec.hidden;
  int n = spec.n, x = spec.obs_dim, z = spec.act_dim, h = spec.hidden;
  b.obs.resize(static_cast<size_t>(n) * x);
  b.act.resize(static_cast<size_t>(n) * z);
  b.rew.resize(n);
  b.done.resize(n);
  b.logp_old.resize(n);
  b.v_old.resize(n);
  b.sigma.assign(static_cast<size_t>(n) * z, spec.sigma);
  b.episode.resize(n);
  b.enc_old.resize(static_cast<size_t>(n) * h);
  b.adv.resize(n);
  b.ret.resize(n);

  ppn::PolicyEval pol(behind);
  std::vector<double> mu(z);
  int episode = 0;
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < x; ++j) b.obs[static_cast<size_t>(t) * x + j] = rng.uniform(-1.0, 1.0);
    std::span<double> s0(b.enc_old.data() + static_cast<size_t>(t) * h, h);
    pol.encode(std::span<const double>(b.obs.data() + static_cast<size_t>(t) * x, x), s0);
    pol.policy_mean(s0, mu);
    std::span<double> a(b.act.data() + static_cast<size_t>(t) * z, z);
    for (int j = 0; j < z; ++j) a[j] = mu[j] + spec.act_spread * spec.sigma * rng.normal();
    b.logp_old[t] = ppn::gaussian_logp_row(
        mu, std::span<const double>(b.sigma.data() + static_cast<size_t>(t) * z, z), a);
    b.v_old[t] = pol.value(s0);
    b.rew[t] = rng.uniform(-1.0, 1.0);
    b.done[t] = (t == n - 1 || rng.uniform() < spec.p_done) ? 1 : 0;
    b.episode[t] = episode;
    if (b.done[t]) ++episode;
    b.adv[t] = rng.uniform(-2.0, 2.0);
    b.ret[t] = b.v_old[t] + rng.uniform(-1.0, 1.0);
  }
  b.boot_value = 0.0;
  ppn::compute_seg_len(b);
  ppn::cache_old_estimates(b, pol, spec.scheme, spec.cache_depth);
  return b;
}

// A slightly perturbed copy, for theta != theta' settings.
inline ppn::PPNParams perturbed(const ppn::PPNParams& p, double scale, ppn::RngStream& rng) {
  ppn::PPNParams q = p;
  for (ppn::ParamTensor* t : q.all())
    for (double& w : t->data) w += scale * rng.uniform(-1.0, 1.0);
  return q;
}

}  // namespace testsup
