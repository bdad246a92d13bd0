// Experiment harness for the PPN library: training, evaluation, the depth /
// clipping / transition-reuse studies, and figure regeneration.
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppn/checkpoint.hpp"
#include "ppn/config.hpp"
#include "ppn/experiments.hpp"
#include "ppn/linalg.hpp"
#include "ppn/metrics.hpp"
#include "ppn/plot.hpp"
#include "ppn/trainer.hpp"

namespace {

// Registers RunConfig override flags on a subcommand. Precedence is
// flag > --config file > built-in default: the file (if any) is loaded first
// and each flag is applied only when actually given.
struct ConfigCli {
  std::string config_path;
  std::vector<std::function<void(ppn::RunConfig&)>> appliers;

  template <typename T, typename Setter>
  void opt(CLI::App& app, const std::string& flag, const std::string& desc, Setter set) {
    auto val = std::make_shared<T>();
    CLI::Option* o = app.add_option(flag, *val, desc);
    appliers.push_back([o, val, set](ppn::RunConfig& c) {
      if (o->count() > 0) set(c, *val);
    });
  }
  template <typename Setter>
  void flag(CLI::App& app, const std::string& name, const std::string& desc, Setter set) {
    CLI::Option* o = app.add_flag(name, desc);
    appliers.push_back([o, set](ppn::RunConfig& c) {
      if (o->count() > 0) set(c);
    });
  }

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file (flags override it)");
    using RC = ppn::RunConfig;
    opt<std::string>(app, "--env", "environment name", [](RC& c, auto v) { c.env = v; });
    opt<uint64_t>(app, "--seed", "master seed", [](RC& c, auto v) { c.seed = v; });
    opt<int64_t>(app, "--steps", "total environment steps",
                 [](RC& c, auto v) { c.total_steps = v; });
    opt<int>(app, "--n-steps", "samples per iteration", [](RC& c, auto v) { c.n_steps = v; });
    opt<int>(app, "--epochs", "optimization epochs per iteration",
             [](RC& c, auto v) { c.epochs = v; });
    opt<int>(app, "--minibatch", "minibatch size", [](RC& c, auto v) { c.minibatch = v; });
    opt<double>(app, "--gamma", "discount", [](RC& c, auto v) { c.gamma = v; });
    opt<double>(app, "--lambda", "GAE lambda", [](RC& c, auto v) { c.lambda = v; });
    opt<double>(app, "--lr", "Adam step size", [](RC& c, auto v) { c.lr = v; });
    opt<double>(app, "--max-grad-norm", "global gradient-norm cap",
                [](RC& c, auto v) { c.max_grad_norm = v; });
    opt<int>(app, "--hidden", "hidden width", [](RC& c, auto v) { c.hidden = v; });
    opt<int>(app, "--depth", "uniform unroll depth d", [](RC& c, auto v) { c.depth = v; });
    opt<int>(app, "--d-pi", "policy depth override", [](RC& c, auto v) { c.d_pi = v; });
    opt<int>(app, "--d-v", "value depth override", [](RC& c, auto v) { c.d_v = v; });
    opt<int>(app, "--d-r", "reward depth override", [](RC& c, auto v) { c.d_r = v; });
    opt<std::string>(app, "--clip-scheme", "grounded | ungrounded",
                     [](RC& c, auto v) { c.clip_scheme = v; });
    opt<double>(app, "--eps-clip", "clip radius", [](RC& c, auto v) { c.eps_clip = v; });
    opt<double>(app, "--alpha-v", "value loss weight", [](RC& c, auto v) { c.alpha_v = v; });
    opt<double>(app, "--alpha-r", "reward loss weight", [](RC& c, auto v) { c.alpha_r = v; });
    opt<double>(app, "--alpha-h", "entropy bonus weight", [](RC& c, auto v) { c.alpha_h = v; });
    opt<double>(app, "--huber-delta", "Huber threshold",
                [](RC& c, auto v) { c.huber_delta = v; });
    opt<double>(app, "--sigma-start", "initial exploration scale",
                [](RC& c, auto v) { c.sigma_start = v; });
    opt<double>(app, "--sigma-end", "final exploration scale",
                [](RC& c, auto v) { c.sigma_end = v; });
    opt<int64_t>(app, "--sigma-horizon", "decay horizon in steps (0: total steps)",
                 [](RC& c, auto v) { c.sigma_horizon = v; });
    opt<int>(app, "--checkpoint-every", "iterations between checkpoints",
             [](RC& c, auto v) { c.checkpoint_every = v; });
    opt<int>(app, "--eval-episodes", "episodes per evaluation",
             [](RC& c, auto v) { c.eval_episodes = v; });
    flag(app, "--no-clip-policy", "disable the policy ratio clip",
         [](RC& c) { c.clip_policy = false; });
    flag(app, "--no-clip-value", "disable the value clip", [](RC& c) { c.clip_value = false; });
    flag(app, "--no-clip-reward", "disable the reward clip",
         [](RC& c) { c.clip_reward = false; });
    flag(app, "--no-advantage-norm", "skip per-minibatch advantage normalization",
         [](RC& c) { c.normalize_advantages = false; });
    flag(app, "--record-timing", "log real wall-clock times (breaks byte reproducibility)",
         [](RC& c) { c.record_timing = true; });
    flag(app, "--dump-trajectories", "write per-iteration trajectory CSVs",
         [](RC& c) { c.dump_trajectories = true; });
    // Last so it wins over depth flags.
    flag(app, "--ppo2", "PPO2 reduction: alpha_r=0, d_pi=1, d_v=0",
         [](RC& c) { c.apply_ppo2_reduction(); });
  }

  ppn::RunConfig resolve() const {
    ppn::RunConfig cfg;
    if (!config_path.empty()) cfg = ppn::RunConfig::load(config_path);
    for (const auto& apply : appliers) apply(cfg);
    cfg.validate();
    return cfg;
  }
};

std::string default_run_dir(const ppn::RunConfig& cfg) {
  return "runs/" + cfg.env + "_d" + std::to_string(cfg.resolved_d_pi()) + "_s" +
         std::to_string(cfg.seed);
}

std::string metrics_path_of(std::string arg) {
  if (std::filesystem::is_directory(arg)) arg += "/metrics.csv";
  return arg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy Prediction Network trainer and experiment harness"};
  app.require_subcommand(1);
  int rc = 0;

  // train
  auto* tr = app.add_subcommand("train", "train one configuration");
  ConfigCli tr_cfg;
  tr_cfg.attach(*tr);
  std::string tr_out;
  tr->add_option("--out", tr_out, "run directory (default runs/<env>_d<d>_s<seed>)");
  tr->callback([&] {
    ppn::RunConfig cfg = tr_cfg.resolve();
    std::string out = tr_out.empty() ? default_run_dir(cfg) : tr_out;
    ppn::TrainResult r = ppn::train(cfg, out);
    std::printf("train: dir=%s iterations=%d total_steps=%lld last_mean_return=%.6g%s\n",
                out.c_str(), r.iterations, static_cast<long long>(r.total_steps),
                r.last_mean_return, r.diverged ? " DIVERGED" : "");
    if (r.diverged) {
      std::fprintf(stderr, "error: training diverged; see %s/diverged_dump.txt\n", out.c_str());
      rc = 2;
    }
  });

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_env, ev_mode = "model_free";
  int ev_depth = 1, ev_episodes = 20;
  uint64_t ev_seed = 0;
  bool ev_det = false;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--env", ev_env, "environment name")->required();
  ev->add_option("--mode", ev_mode, "model_free | mpc | trajectory | repeat");
  ev->add_option("--depth", ev_depth, "unroll horizon for model-based modes");
  ev->add_option("--episodes", ev_episodes, "episodes to run");
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_flag("--deterministic-eval", ev_det, "act with the mean action");
  ev->callback([&] {
    ppn::Checkpoint ck = ppn::load_checkpoint(ev_ckpt);
    ppn::ExecMode mode;
    mode.tag = ppn::parse_exec_mode(ev_mode);
    mode.horizon = ev_depth;
    mode.stochastic = !ev_det;
    ppn::EvalResult r =
        ppn::evaluate(ck.params, ck.sched, ck.T, ev_env, ev_episodes, mode, ev_seed);
    std::printf("eval: mode=%s episodes=%d mean_return=%.17g std_return=%.17g mean_len=%.17g\n",
                ev_mode.c_str(), r.episodes, r.mean_return, r.std_return, r.mean_len);
  });

  // sweep-depth
  auto* sd = app.add_subcommand("sweep-depth", "train a grid of depths x seeds");
  ConfigCli sd_cfg;
  sd_cfg.attach(*sd);
  std::vector<int> sd_depths = {1, 2, 5, 10};
  std::vector<uint64_t> sd_seeds = {0, 1, 2, 3, 4};
  std::string sd_out = "runs/sweep_depth";
  sd->add_option("--depths", sd_depths, "depth grid");
  sd->add_option("--seeds", sd_seeds, "seed list");
  sd->add_option("--out", sd_out, "output root");
  sd->callback([&] {
    ppn::DepthSweepResult res = ppn::sweep_depth(sd_cfg.resolve(), sd_depths, sd_seeds, sd_out);
    for (size_t g = 0; g < res.depths.size(); ++g) {
      std::vector<double> means;
      int died = 0;
      for (const ppn::SeedRun& r : res.runs[g]) {
        if (r.train.diverged)
          ++died;
        else
          means.push_back(r.eval.mean_return);
      }
      std::printf("d=%-3d eval_return=%.6g +/- %.6g  (%d/%zu diverged)\n", res.depths[g],
                  ppn::mean_of(means), ppn::pop_std(means), died, res.runs[g].size());
    }
    std::printf("report=%s figure=%s\n", res.report_path.c_str(), res.figure_path.c_str());
  });

  // ablate-clipping
  auto* ac = app.add_subcommand("ablate-clipping", "clipping-scheme study");
  ConfigCli ac_cfg;
  ac_cfg.attach(*ac);
  std::vector<uint64_t> ac_seeds = {0, 1, 2, 3, 4};
  std::string ac_out = "runs/ablate_clipping";
  ac->add_option("--seeds", ac_seeds, "seed list");
  ac->add_option("--out", ac_out, "output root");
  ac->callback([&] {
    ppn::ClipAblationResult res = ppn::ablate_clipping(ac_cfg.resolve(), ac_seeds, ac_out);
    for (size_t g = 0; g < res.variants.size(); ++g) {
      std::vector<double> means;
      int died = 0;
      for (const ppn::SeedRun& r : res.runs[g]) {
        if (r.train.diverged)
          ++died;
        else
          means.push_back(r.eval.mean_return);
      }
      std::printf("%-11s eval_return=%.6g +/- %.6g  loss_pi_var=%.6g  (%d/%zu diverged)\n",
                  res.variants[g].c_str(), ppn::mean_of(means), ppn::pop_std(means),
                  ppn::mean_of(res.loss_pi_variance[g]), died, res.runs[g].size());
    }
    std::printf("report=%s figure=%s\n", res.report_path.c_str(), res.figure_path.c_str());
  });

  // ablate-transition
  auto* at = app.add_subcommand("ablate-transition", "exec-mode study on one checkpoint");
  std::string at_ckpt, at_env, at_out = "runs/ablate_transition";
  std::vector<std::string> at_modes = {"mpc", "trajectory", "repeat"};
  int at_depth = 2, at_episodes = 20;
  std::vector<uint64_t> at_seeds = {0, 1, 2, 3, 4};
  bool at_det = false;
  at->add_option("--checkpoint", at_ckpt, "checkpoint file")->required();
  at->add_option("--env", at_env, "environment name")->required();
  at->add_option("--modes", at_modes, "exec modes to compare");
  at->add_option("--depth", at_depth, "unroll horizon");
  at->add_option("--episodes", at_episodes, "episodes per mode per seed");
  at->add_option("--seeds", at_seeds, "seed list");
  at->add_flag("--deterministic-eval", at_det, "act with the mean action");
  at->add_option("--out", at_out, "output root");
  at->callback([&] {
    ppn::TransitionAblationResult res = ppn::ablate_transition(
        at_ckpt, at_env, at_modes, at_depth, at_episodes, at_seeds, !at_det, at_out);
    std::printf("checkpoint=%s hash=%s\n", res.checkpoint_path.c_str(),
                res.checkpoint_hash.c_str());
    for (size_t g = 0; g < res.modes.size(); ++g) {
      std::vector<double> means;
      for (const ppn::EvalResult& e : res.evals[g]) means.push_back(e.mean_return);
      std::printf("%-11s return=%.6g +/- %.6g over %zu seeds\n", res.modes[g].c_str(),
                  ppn::mean_of(means), ppn::pop_std(means), means.size());
    }
    std::printf("report=%s figure=%s\n", res.report_path.c_str(), res.figure_path.c_str());
  });

  // plot
  auto* pl = app.add_subcommand("plot", "figures from metrics.csv files");
  std::vector<std::string> pl_runs, pl_metrics;
  std::string pl_out = "plots";
  pl->add_option("runs", pl_runs, "run directories or metrics.csv paths")->required();
  pl->add_option("--metric", pl_metrics, "metric columns (default: every logged metric)");
  pl->add_option("--out", pl_out, "figure directory");
  pl->callback([&] {
    std::vector<std::string> paths;
    for (const std::string& r : pl_runs) paths.push_back(metrics_path_of(r));
    std::vector<std::string> metrics = pl_metrics;
    if (metrics.empty()) {
      ppn::MetricsTable t = ppn::read_metrics_csv(paths.front());
      for (const std::string& c : t.columns)
        if (c != "iteration" && c != "total_steps" && c != "wall_seconds")
          metrics.push_back(c);
    }
    std::filesystem::create_directories(pl_out);
    for (const std::string& m : metrics) {
      std::string fig = pl_out + "/" + m + ".svg";
      ppn::write_line_svg(fig, m, "environment steps", m,
                          {ppn::aggregate_metric(paths, m, m)});
      std::printf("wrote %s\n", fig.c_str());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
