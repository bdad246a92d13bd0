#include "ppn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "ppn/checkpoint.hpp"
#include "ppn/linalg.hpp"
#include "ppn/objective.hpp"
#include "ppn/rollout.hpp"
#include "ppn/tape.hpp"

namespace ppn {

void AdamState::init_like(const PPNParams& p) {
  m.clear();
  v.clear();
  for (const ParamTensor* t : p.all()) {
    m.emplace_back(t->data.size(), 0.0);
    v.emplace_back(t->data.size(), 0.0);
  }
  t = 0;
}

double global_grad_norm(const std::vector<std::vector<double>>& grads) {
  std::vector<double> sq(grads.size());
  for (size_t k = 0; k < grads.size(); ++k) {
    double acc = 0.0;
    for (double g : grads[k]) acc += g * g;
    sq[k] = acc;
  }
  return std::sqrt(pairwise_sum(sq));
}

double clip_grad_norm(std::vector<std::vector<double>>& grads, double max_norm) {
  double norm = global_grad_norm(grads);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (auto& g : grads)
      for (double& x : g) x *= scale;
  }
  return norm;
}

void adam_step(PPNParams& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  auto tensors = params.all();
  if (grads.size() != tensors.size() || state.m.size() != tensors.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t k = 0; k < tensors.size(); ++k) {
    auto& theta = tensors[k]->data;
    const auto& g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

void dump_diverged(const std::string& path, const TrajectoryBatch& batch,
                   std::span<const int> idx, int iteration, int epoch, int mb_index,
                   const LossBreakdown& bd) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) return;
  std::fprintf(f, "non-finite loss detected\n");
  std::fprintf(f, "iteration=%d epoch=%d minibatch=%d\n", iteration, epoch, mb_index);
  std::fprintf(f, "loss_pi=%.17g loss_v=%.17g loss_r=%.17g total=%.17g\n", bd.loss_pi,
               bd.loss_v, bd.loss_r, bd.total);
  std::fprintf(f, "minibatch rows (t, done, reward, v_old, logp_old, adv, ret, obs..., act...):\n");
  for (int t : idx) {
    std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g", t, batch.done[t] ? 1 : 0,
                 batch.rew[t], batch.v_old[t], batch.logp_old[t], batch.adv[t], batch.ret[t]);
    for (int j = 0; j < batch.obs_dim; ++j)
      std::fprintf(f, ",%.17g", batch.obs[static_cast<size_t>(t) * batch.obs_dim + j]);
    for (int j = 0; j < batch.act_dim; ++j)
      std::fprintf(f, ",%.17g", batch.act[static_cast<size_t>(t) * batch.act_dim + j]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.config_path = out_dir + "/config.snapshot";
  cfg.save(result.config_path);

  EnvSpec spec = env_spec(cfg.env);
  RngStream init_rng(substream_seed(cfg.seed, kStreamInit));
  PPNParams params = PPNParams::init(spec.obs_dim, spec.act_dim, cfg.hidden, init_rng);
  SigmaSchedule sched = SigmaSchedule::uniform(spec.act_dim, cfg.sigma_start, cfg.sigma_end,
                                               cfg.resolved_sigma_horizon());
  RolloutContext ctx(cfg.env, substream_seed(cfg.seed, kStreamEnv));
  RngStream shuffle_rng(substream_seed(cfg.seed, kStreamShuffle));
  AdamState adam;
  adam.init_like(params);

  LossConfig lc = cfg.loss_config();
  const int dmax = std::max({lc.d_pi, lc.d_v, lc.d_r});
  const int iters = static_cast<int>(cfg.total_steps / cfg.n_steps);

  result.metrics_path = out_dir + "/metrics.csv";
  FILE* csv = std::fopen(result.metrics_path.c_str(), "w");
  if (!csv) throw std::runtime_error("cannot open " + result.metrics_path + " for writing");
  std::fprintf(csv,
               "iteration,total_steps,wall_seconds,mean_return,std_return,mean_ep_len,"
               "loss_pi,loss_v,loss_r,entropy,clip_frac_pi,clip_frac_v,clip_frac_r,"
               "grad_norm,sigma_mean\n");

  auto t_start = std::chrono::steady_clock::now();
  double last_mean_return = std::nan("");
  double last_std_return = std::nan("");
  double last_mean_len = std::nan("");
  TrajectoryBatch batch;
  bool aborted = false;

  for (int iter = 1; iter <= iters && !aborted; ++iter) {
    PolicyEval pol(params);  // theta' view: used only before any update below
    EpisodeStats stats = collect(ctx, pol, sched, cfg.n_steps, batch);
    compute_gae(batch, cfg.gamma, cfg.lambda);
    compute_returns(batch);
    cache_old_estimates(batch, pol, lc.scheme, dmax);
    const int64_t T_now = ctx.T;

    std::vector<double> m_pi, m_v, m_r, m_cp, m_cv, m_cr, m_gn;
    double entropy = 0.0;
    for (int epoch = 0; epoch < cfg.epochs && !aborted; ++epoch) {
      std::vector<int> perm = shuffle_indices(cfg.n_steps, shuffle_rng);
      int mb_index = 0;
      for (int start = 0; start < cfg.n_steps && !aborted; start += cfg.minibatch, ++mb_index) {
        int count = std::min(cfg.minibatch, cfg.n_steps - start);
        std::span<const int> idx(perm.data() + start, static_cast<size_t>(count));
        Tape tape;
        ModelOnTape model(tape, params, sched);
        LossValues lv;
        LossBreakdown bd = total_loss(model, batch, idx, lc, T_now, &lv);
        entropy = bd.entropy;
        if (!std::isfinite(bd.total)) {
          dump_diverged(out_dir + "/diverged_dump.txt", batch, idx, iter, epoch, mb_index, bd);
          result.diverged = true;
          aborted = true;
          break;
        }
        tape.backward(lv.total);
        std::vector<std::vector<double>> grads;
        grads.reserve(model.leaves().size());
        for (const Value& leaf : model.leaves()) {
          auto g = leaf.grad();
          grads.emplace_back(g.begin(), g.end());
        }
        double gn = clip_grad_norm(grads, cfg.max_grad_norm);
        if (!std::isfinite(gn)) {
          dump_diverged(out_dir + "/diverged_dump.txt", batch, idx, iter, epoch, mb_index, bd);
          result.diverged = true;
          aborted = true;
          break;
        }
        adam_step(params, grads, adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        m_pi.push_back(bd.loss_pi);
        m_v.push_back(bd.loss_v);
        m_r.push_back(bd.loss_r);
        m_cp.push_back(bd.clip_frac_pi);
        m_cv.push_back(bd.clip_frac_v);
        m_cr.push_back(bd.clip_frac_r);
        m_gn.push_back(gn);
      }
    }

    if (!stats.returns.empty()) {
      last_mean_return = mean_of(stats.returns);
      last_std_return = pop_std(stats.returns);
      std::vector<double> lens(stats.lengths.begin(), stats.lengths.end());
      last_mean_len = mean_of(lens);
    }
    double wall = 0.0;
    if (cfg.record_timing) {
      wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    std::vector<double> sig = sched.at(ctx.T);
    double sigma_mean = pairwise_sum(sig) / static_cast<double>(sig.size());
    std::fprintf(csv,
                 "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g\n",
                 iter, static_cast<long long>(ctx.T), wall, last_mean_return, last_std_return,
                 last_mean_len, mean_of(m_pi), mean_of(m_v), mean_of(m_r), entropy,
                 mean_of(m_cp), mean_of(m_cv), mean_of(m_cr), mean_of(m_gn), sigma_mean);
    std::fflush(csv);

    if (cfg.dump_trajectories)
      write_trajectory_csv(batch, out_dir + "/trajectory_iter_" + std::to_string(iter) + ".csv");
    if (!aborted && iter % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "/ckpt_iter_%06d.bin", iter);
      save_checkpoint(out_dir + name, params, sched, ctx.T);
    }
    result.iterations = iter;
  }
  std::fclose(csv);

  result.total_steps = ctx.T;
  result.last_mean_return = last_mean_return;
  if (!result.diverged) {
    result.checkpoint_path = out_dir + "/ckpt_final.bin";
    save_checkpoint(result.checkpoint_path, params, sched, ctx.T);
  }
  return result;
}

EvalResult evaluate(const PPNParams& params, const SigmaSchedule& sched, int64_t T,
                    const std::string& env_name, int episodes, ExecMode mode, uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  PolicyEval pol(params);
  auto env = make_env(env_name);
  RngStream rng(substream_seed(seed, kStreamEval));
  Executor exec(pol, sched, mode, substream_seed(seed, kStreamEvalScratch));
  const int z = env->spec().act_dim;

  std::vector<double> returns, lengths;
  std::vector<double> a(z);
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = env->reset(rng);
    exec.reset_plan();
    double ret = 0.0;
    int len = 0;
    bool done = false;
    while (!done) {
      exec.act(obs, T, rng, a);
      StepResult sr = env->step(a);
      ret += sr.reward;
      ++len;
      done = sr.done;
      obs = std::move(sr.obs);
    }
    returns.push_back(ret);
    lengths.push_back(len);
  }
  EvalResult out;
  out.episodes = episodes;
  out.mean_return = mean_of(returns);
  out.std_return = pop_std(returns);
  out.mean_len = mean_of(lengths);
  return out;
}

}  // namespace ppn
