#include "ppn/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "ppn/checkpoint.hpp"
#include "ppn/linalg.hpp"
#include "ppn/metrics.hpp"
#include "ppn/plot.hpp"

namespace ppn {
namespace {

constexpr uint64_t kHarnessEvalTag = 21;  // distinct from the trainer's stream tags

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

std::FILE* open_csv(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

// Train one configuration and score its final checkpoint with a
// deterministic-mean model_free eval.
SeedRun run_one(const RunConfig& cfg, const std::string& run_dir) {
  SeedRun r;
  r.seed = cfg.seed;
  r.run_dir = run_dir;
  r.train = train(cfg, run_dir);
  if (!r.train.diverged) {
    Checkpoint ck = load_checkpoint(r.train.checkpoint_path);
    ExecMode mode;
    mode.stochastic = false;
    r.eval = evaluate(ck.params, ck.sched, ck.T, cfg.env, cfg.eval_episodes, mode,
                      substream_seed(cfg.seed, kHarnessEvalTag));
  }
  return r;
}

// Per-run variance of the loss_pi column; NaN when the run produced no rows.
double loss_pi_variance_of(const SeedRun& r) {
  try {
    MetricsTable t = read_metrics_csv(r.train.metrics_path);
    std::vector<double> col = t.column("loss_pi");
    if (col.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = pop_std(col);
    return s * s;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Mean-return curves, one series per group, aggregated over the group's
// non-diverged runs (short metrics files from aborted runs cannot be aligned).
void write_curves(const std::string& path, const std::string& title,
                  const std::vector<std::string>& labels,
                  const std::vector<std::vector<SeedRun>>& runs) {
  std::vector<Series> series;
  for (size_t g = 0; g < runs.size(); ++g) {
    std::vector<std::string> paths;
    for (const SeedRun& r : runs[g])
      if (!r.train.diverged) paths.push_back(r.train.metrics_path);
    if (paths.empty()) continue;
    series.push_back(aggregate_metric(paths, "mean_return", labels[g]));
  }
  if (!series.empty())
    write_line_svg(path, title, "environment steps", "mean return", series);
}

}  // namespace

DepthSweepResult sweep_depth(const RunConfig& base, const std::vector<int>& depths,
                             const std::vector<uint64_t>& seeds, const std::string& out_root) {
  if (depths.empty() || seeds.empty())
    throw std::invalid_argument("sweep_depth: depths and seeds must be non-empty");
  std::filesystem::create_directories(out_root);

  DepthSweepResult res;
  res.depths = depths;
  for (int d : depths) {
    std::vector<SeedRun> row;
    for (uint64_t s : seeds) {
      RunConfig cfg = base;
      cfg.depth = d;
      cfg.d_pi = cfg.d_v = cfg.d_r = -1;
      cfg.seed = s;
      cfg.validate();
      std::string dir = out_root + "/d" + std::to_string(d) + "_seed" + std::to_string(s);
      row.push_back(run_one(cfg, dir));
    }
    res.runs.push_back(std::move(row));
  }

  res.report_path = out_root + "/report.csv";
  {
    std::FILE* f = open_csv(res.report_path);
    FileCloser fc{f};
    std::fprintf(f, "depth,seed,diverged,iterations,total_steps,final_train_return,"
                    "eval_mean_return,eval_std_return,eval_mean_len,run_dir\n");
    for (size_t g = 0; g < res.runs.size(); ++g)
      for (const SeedRun& r : res.runs[g])
        std::fprintf(f, "%d,%llu,%d,%d,%lld,%.17g,%.17g,%.17g,%.17g,%s\n", depths[g],
                     static_cast<unsigned long long>(r.seed), r.train.diverged ? 1 : 0,
                     r.train.iterations, static_cast<long long>(r.train.total_steps),
                     r.train.last_mean_return, r.eval.mean_return, r.eval.std_return,
                     r.eval.mean_len, r.run_dir.c_str());
  }

  // Across-seed aggregate per depth (eval means of the surviving runs).
  {
    std::FILE* f = open_csv(out_root + "/summary.csv");
    FileCloser fc{f};
    std::fprintf(f, "depth,seeds,diverged,eval_mean,eval_std_across_seeds\n");
    for (size_t g = 0; g < res.runs.size(); ++g) {
      std::vector<double> means;
      int died = 0;
      for (const SeedRun& r : res.runs[g]) {
        if (r.train.diverged)
          ++died;
        else
          means.push_back(r.eval.mean_return);
      }
      std::fprintf(f, "%d,%zu,%d,%.17g,%.17g\n", depths[g], res.runs[g].size(), died,
                   means.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(means),
                   pop_std(means));
    }
  }

  res.figure_path = out_root + "/learning_curves.svg";
  std::vector<std::string> labels;
  for (int d : depths) labels.push_back("d=" + std::to_string(d));
  write_curves(res.figure_path, "Depth sweep: " + base.env, labels, res.runs);
  return res;
}

ClipAblationResult ablate_clipping(const RunConfig& base, const std::vector<uint64_t>& seeds,
                                   const std::string& out_root) {
  if (seeds.empty()) throw std::invalid_argument("ablate_clipping: seeds must be non-empty");
  std::filesystem::create_directories(out_root);

  ClipAblationResult res;
  res.variants = {"grounded", "ungrounded", "no_vr", "no_clip"};
  for (const std::string& variant : res.variants) {
    std::vector<SeedRun> row;
    std::vector<double> vars;
    for (uint64_t s : seeds) {
      RunConfig cfg = base;
      cfg.seed = s;
      cfg.clip_policy = cfg.clip_value = cfg.clip_reward = true;
      if (variant == "ungrounded") {
        cfg.clip_scheme = "ungrounded";
      } else if (variant == "no_vr") {
        cfg.clip_value = cfg.clip_reward = false;
      } else if (variant == "no_clip") {
        cfg.clip_policy = cfg.clip_value = cfg.clip_reward = false;
      }
      cfg.validate();
      std::string dir = out_root + "/" + variant + "_seed" + std::to_string(s);
      SeedRun r = run_one(cfg, dir);
      vars.push_back(loss_pi_variance_of(r));
      row.push_back(std::move(r));
    }
    res.runs.push_back(std::move(row));
    res.loss_pi_variance.push_back(std::move(vars));
  }

  res.report_path = out_root + "/report.csv";
  {
    std::FILE* f = open_csv(res.report_path);
    FileCloser fc{f};
    std::fprintf(f, "variant,seed,diverged,iterations,total_steps,final_train_return,"
                    "eval_mean_return,eval_std_return,loss_pi_variance,run_dir\n");
    for (size_t g = 0; g < res.runs.size(); ++g)
      for (size_t k = 0; k < res.runs[g].size(); ++k) {
        const SeedRun& r = res.runs[g][k];
        std::fprintf(f, "%s,%llu,%d,%d,%lld,%.17g,%.17g,%.17g,%.17g,%s\n",
                     res.variants[g].c_str(), static_cast<unsigned long long>(r.seed),
                     r.train.diverged ? 1 : 0, r.train.iterations,
                     static_cast<long long>(r.train.total_steps), r.train.last_mean_return,
                     r.eval.mean_return, r.eval.std_return, res.loss_pi_variance[g][k],
                     r.run_dir.c_str());
      }
  }

  res.figure_path = out_root + "/clipping_curves.svg";
  write_curves(res.figure_path, "Clipping ablation: " + base.env, res.variants, res.runs);
  return res;
}

TransitionAblationResult ablate_transition(const std::string& ckpt_path,
                                           const std::string& env_name,
                                           const std::vector<std::string>& modes, int horizon,
                                           int episodes, const std::vector<uint64_t>& seeds,
                                           bool stochastic, const std::string& out_root) {
  if (modes.empty() || seeds.empty())
    throw std::invalid_argument("ablate_transition: modes and seeds must be non-empty");
  if (horizon < 1) throw std::invalid_argument("ablate_transition: horizon must be >= 1");
  std::filesystem::create_directories(out_root);

  Checkpoint ck = load_checkpoint(ckpt_path);
  TransitionAblationResult res;
  res.checkpoint_path = ckpt_path;
  res.checkpoint_hash = checkpoint_hash(ckpt_path);
  res.horizon = horizon;
  res.stochastic = stochastic;
  res.modes = modes;

  for (const std::string& name : modes) {
    ExecMode mode;
    mode.tag = parse_exec_mode(name);
    mode.horizon = horizon;
    mode.stochastic = stochastic;
    std::vector<EvalResult> row;
    for (uint64_t s : seeds)
      row.push_back(evaluate(ck.params, ck.sched, ck.T, env_name, episodes, mode, s));
    res.evals.push_back(std::move(row));
  }

  res.report_path = out_root + "/report.csv";
  {
    std::FILE* f = open_csv(res.report_path);
    FileCloser fc{f};
    std::fprintf(f, "# checkpoint=%s hash=%s env=%s horizon=%d episodes=%d stochastic=%d\n",
                 ckpt_path.c_str(), res.checkpoint_hash.c_str(), env_name.c_str(), horizon,
                 episodes, stochastic ? 1 : 0);
    std::fprintf(f, "mode,seed,episodes,mean_return,std_return,mean_len\n");
    for (size_t g = 0; g < res.evals.size(); ++g)
      for (size_t k = 0; k < res.evals[g].size(); ++k) {
        const EvalResult& e = res.evals[g][k];
        std::fprintf(f, "%s,%llu,%d,%.17g,%.17g,%.17g\n", modes[g].c_str(),
                     static_cast<unsigned long long>(seeds[k]), e.episodes, e.mean_return,
                     e.std_return, e.mean_len);
      }
  }

  res.figure_path = out_root + "/modes.svg";
  std::vector<double> means, stds;
  for (const auto& row : res.evals) {
    std::vector<double> per_seed;
    for (const EvalResult& e : row) per_seed.push_back(e.mean_return);
    means.push_back(mean_of(per_seed));
    stds.push_back(pop_std(per_seed));
  }
  write_bar_svg(res.figure_path, "Execution modes: " + env_name, "mean return", modes, means,
                stds);
  return res;
}

}  // namespace ppn
