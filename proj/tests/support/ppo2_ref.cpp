#include "support/ppo2_ref.hpp"

#include <cmath>
#include <stdexcept>

namespace testsup {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double huber_val(double e, double d) {
  double ae = std::fabs(e);
  return ae <= d ? 0.5 * e * e : d * (ae - 0.5 * d);
}

double huber_slope(double e, double d) {
  return std::fabs(e) <= d ? e : (e > 0.0 ? d : -d);
}

}  // namespace

Ppo2Out ppo2_reference(const ppn::PPNParams& p, const Ppo2Batch& b, const Ppo2Config& cfg) {
  const int m = b.m, x = b.obs_dim, z = b.act_dim, h = p.hidden;
  if (x != p.obs_dim || z != p.act_dim) throw std::invalid_argument("ppo2_reference: dims");

  Ppo2Out out;
  for (const ppn::ParamTensor* t : p.all()) out.grads.emplace_back(t->data.size(), 0.0);
  std::vector<double>& gw1 = out.grads[0];
  std::vector<double>& gb1 = out.grads[1];
  std::vector<double>& gw2 = out.grads[2];
  std::vector<double>& gb2 = out.grads[3];
  std::vector<double>& gmuw = out.grads[12];
  std::vector<double>& gmub = out.grads[13];
  std::vector<double>& gvw = out.grads[14];
  std::vector<double>& gvb = out.grads[15];

  // Forward, one plain loop per layer.
  std::vector<double> h1(static_cast<size_t>(m) * h), s(static_cast<size_t>(m) * h);
  std::vector<double> mu(static_cast<size_t>(m) * z), v(m), logp(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < h; ++j) {
      double acc = p.enc_b1.data[j];
      for (int k = 0; k < x; ++k)
        acc += b.obs[static_cast<size_t>(i) * x + k] * p.enc_w1.data[static_cast<size_t>(k) * h + j];
      h1[static_cast<size_t>(i) * h + j] = std::tanh(acc);
    }
    for (int j = 0; j < h; ++j) {
      double acc = p.enc_b2.data[j];
      for (int k = 0; k < h; ++k)
        acc += h1[static_cast<size_t>(i) * h + k] * p.enc_w2.data[static_cast<size_t>(k) * h + j];
      s[static_cast<size_t>(i) * h + j] = std::tanh(acc);
    }
    for (int j = 0; j < z; ++j) {
      double acc = p.mu_b.data[j];
      for (int k = 0; k < h; ++k)
        acc += s[static_cast<size_t>(i) * h + k] * p.mu_w.data[static_cast<size_t>(k) * z + j];
      mu[static_cast<size_t>(i) * z + j] = acc;
    }
    double acc = p.v_b.data[0];
    for (int k = 0; k < h; ++k)
      acc += s[static_cast<size_t>(i) * h + k] * p.v_w.data[k];
    v[i] = acc;
    double lp = 0.0;
    for (int j = 0; j < z; ++j) {
      double sd = b.sigma[static_cast<size_t>(i) * z + j];
      double d = b.act[static_cast<size_t>(i) * z + j] - mu[static_cast<size_t>(i) * z + j];
      lp += -0.5 * std::log(kTwoPi * sd * sd) - d * d / (2.0 * sd * sd);
    }
    logp[i] = lp;
  }

  // Advantage normalization over this batch.
  std::vector<double> ahat(b.adv);
  if (cfg.normalize_advantages) {
    double mean = 0.0;
    for (double a : b.adv) mean += a;
    mean /= m;
    double var = 0.0;
    for (double a : b.adv) var += (a - mean) * (a - mean);
    var /= m;
    double denom = std::sqrt(var) + 1e-8;
    for (int i = 0; i < m; ++i) ahat[i] = (b.adv[i] - mean) / denom;
  }

  // Per-sample losses and head adjoints.
  std::vector<double> dmu(static_cast<size_t>(m) * z, 0.0), dv(m, 0.0);
  double lpi = 0.0, lv = 0.0;
  const double wpi = 1.0 / m, wv = cfg.alpha_v / m;
  for (int i = 0; i < m; ++i) {
    double ratio = std::exp(logp[i] - b.logp_old[i]);
    double rc = std::min(std::max(ratio, 1.0 - cfg.eps), 1.0 + cfg.eps);
    double surr1 = -ratio * ahat[i];
    double surr2 = -rc * ahat[i];
    bool pick_clipped = surr2 > surr1;  // ties keep the unclipped branch
    lpi += (pick_clipped ? surr2 : surr1) / m;
    double dratio;
    if (pick_clipped)
      dratio = (ratio > 1.0 - cfg.eps && ratio < 1.0 + cfg.eps) ? -ahat[i] : 0.0;
    else
      dratio = -ahat[i];
    double dlogp = wpi * dratio * ratio;
    for (int j = 0; j < z; ++j) {
      double sd = b.sigma[static_cast<size_t>(i) * z + j];
      double d = b.act[static_cast<size_t>(i) * z + j] - mu[static_cast<size_t>(i) * z + j];
      dmu[static_cast<size_t>(i) * z + j] = dlogp * d / (sd * sd);
    }

    double e = v[i] - b.ret[i];
    double dvclamped = std::min(std::max(v[i] - b.v_old[i], -cfg.eps), cfg.eps);
    double ec = b.v_old[i] + dvclamped - b.ret[i];
    double lu = huber_val(e, cfg.huber_delta), lc = huber_val(ec, cfg.huber_delta);
    bool pick_vclip = lc > lu;
    lv += (pick_vclip ? lc : lu) / m;
    if (pick_vclip) {
      bool inside = v[i] - b.v_old[i] > -cfg.eps && v[i] - b.v_old[i] < cfg.eps;
      dv[i] = wv * (inside ? huber_slope(ec, cfg.huber_delta) : 0.0);
    } else {
      dv[i] = wv * huber_slope(e, cfg.huber_delta);
    }
  }
  out.loss_pi = lpi;
  out.loss_v = lv;
  out.total = lpi + cfg.alpha_v * lv;

  // Backprop through heads and encoder, plain loops again.
  std::vector<double> ds(static_cast<size_t>(m) * h), dh1(static_cast<size_t>(m) * h);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < h; ++j) {
      double acc = dv[i] * p.v_w.data[j];
      for (int k = 0; k < z; ++k)
        acc += dmu[static_cast<size_t>(i) * z + k] * p.mu_w.data[static_cast<size_t>(j) * z + k];
      ds[static_cast<size_t>(i) * h + j] = acc;
    }
    for (int k = 0; k < z; ++k) {
      gmub[k] += dmu[static_cast<size_t>(i) * z + k];
      for (int j = 0; j < h; ++j)
        gmuw[static_cast<size_t>(j) * z + k] +=
            s[static_cast<size_t>(i) * h + j] * dmu[static_cast<size_t>(i) * z + k];
    }
    gvb[0] += dv[i];
    for (int j = 0; j < h; ++j) gvw[j] += s[static_cast<size_t>(i) * h + j] * dv[i];

    for (int j = 0; j < h; ++j) {
      double sj = s[static_cast<size_t>(i) * h + j];
      double dpre = ds[static_cast<size_t>(i) * h + j] * (1.0 - sj * sj);
      gb2[j] += dpre;
      for (int k = 0; k < h; ++k)
        gw2[static_cast<size_t>(k) * h + j] += h1[static_cast<size_t>(i) * h + k] * dpre;
      ds[static_cast<size_t>(i) * h + j] = dpre;  // reuse as dpre2
    }
    for (int j = 0; j < h; ++j) {
      double acc = 0.0;
      for (int k = 0; k < h; ++k)
        acc += ds[static_cast<size_t>(i) * h + k] * p.enc_w2.data[static_cast<size_t>(j) * h + k];
      dh1[static_cast<size_t>(i) * h + j] = acc;
    }
    for (int j = 0; j < h; ++j) {
      double hj = h1[static_cast<size_t>(i) * h + j];
      double dpre = dh1[static_cast<size_t>(i) * h + j] * (1.0 - hj * hj);
      gb1[j] += dpre;
      for (int k = 0; k < x; ++k)
        gw1[static_cast<size_t>(k) * h + j] += b.obs[static_cast<size_t>(i) * x + k] * dpre;
    }
  }
  return out;
}

}  // namespace testsup
