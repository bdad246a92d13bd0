#include "ppn/config.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ppn/envs.hpp"

namespace ppn {

void RunConfig::validate() const {
  env_spec(env);  // throws on unknown env
  if (total_steps < n_steps)
    throw std::invalid_argument("config: total_steps must be >= n_steps");
  if (n_steps < 1 || epochs < 1 || minibatch < 1)
    throw std::invalid_argument("config: n_steps, epochs, minibatch must be >= 1");
  if (minibatch > n_steps) throw std::invalid_argument("config: minibatch must be <= n_steps");
  if (!(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("config: gamma, lambda must lie in [0, 1]");
  if (!(lr >= 0.0)) throw std::invalid_argument("config: lr must be >= 0");
  if (hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");
  if (depth < 1) throw std::invalid_argument("config: depth must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("config: checkpoint_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  if (clip_scheme != "grounded" && clip_scheme != "ungrounded")
    throw std::invalid_argument("config: clip_scheme must be grounded or ungrounded");
  if (!(sigma_start >= sigma_end && sigma_end > 0.0))
    throw std::invalid_argument("config: need sigma_start >= sigma_end > 0");
  loss_config().validate();
}

LossConfig RunConfig::loss_config() const {
  LossConfig lc;
  lc.eps = eps_clip;
  lc.alpha_v = alpha_v;
  lc.alpha_r = alpha_r;
  lc.alpha_h = alpha_h;
  lc.d_pi = resolved_d_pi();
  lc.d_v = resolved_d_v();
  lc.d_r = resolved_d_r();
  lc.scheme = scheme();
  lc.huber_delta = huber_delta;
  lc.clip_policy = clip_policy;
  lc.clip_value = clip_value;
  lc.clip_reward = clip_reward;
  lc.normalize_advantages = normalize_advantages;
  return lc;
}

ClipScheme RunConfig::scheme() const {
  return clip_scheme == "ungrounded" ? ClipScheme::Ungrounded : ClipScheme::Grounded;
}

void RunConfig::apply_ppo2_reduction() {
  alpha_r = 0.0;
  d_pi = 1;
  d_v = 0;
  d_r = 0;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "env=" << env << "\n";
  os << "seed=" << seed << "\n";
  os << "total_steps=" << total_steps << "\n";
  os << "n_steps=" << n_steps << "\n";
  os << "epochs=" << epochs << "\n";
  os << "minibatch=" << minibatch << "\n";
  os << "gamma=" << fmt_double(gamma) << "\n";
  os << "lambda=" << fmt_double(lambda) << "\n";
  os << "lr=" << fmt_double(lr) << "\n";
  os << "adam_beta1=" << fmt_double(adam_beta1) << "\n";
  os << "adam_beta2=" << fmt_double(adam_beta2) << "\n";
  os << "adam_eps=" << fmt_double(adam_eps) << "\n";
  os << "max_grad_norm=" << fmt_double(max_grad_norm) << "\n";
  os << "hidden=" << hidden << "\n";
  os << "depth=" << depth << "\n";
  os << "d_pi=" << d_pi << "\n";
  os << "d_v=" << d_v << "\n";
  os << "d_r=" << d_r << "\n";
  os << "clip_scheme=" << clip_scheme << "\n";
  os << "eps_clip=" << fmt_double(eps_clip) << "\n";
  os << "alpha_v=" << fmt_double(alpha_v) << "\n";
  os << "alpha_r=" << fmt_double(alpha_r) << "\n";
  os << "alpha_h=" << fmt_double(alpha_h) << "\n";
  os << "huber_delta=" << fmt_double(huber_delta) << "\n";
  os << "clip_policy=" << (clip_policy ? 1 : 0) << "\n";
  os << "clip_value=" << (clip_value ? 1 : 0) << "\n";
  os << "clip_reward=" << (clip_reward ? 1 : 0) << "\n";
  os << "normalize_advantages=" << (normalize_advantages ? 1 : 0) << "\n";
  os << "sigma_start=" << fmt_double(sigma_start) << "\n";
  os << "sigma_end=" << fmt_double(sigma_end) << "\n";
  os << "sigma_horizon=" << sigma_horizon << "\n";
  os << "checkpoint_every=" << checkpoint_every << "\n";
  os << "record_timing=" << (record_timing ? 1 : 0) << "\n";
  os << "dump_trajectories=" << (dump_trajectories ? 1 : 0) << "\n";
  os << "eval_episodes=" << eval_episodes << "\n";
  return os.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto set_str = [](std::string& dst) {
    return [&dst](const std::string& v) { dst = v; };
  };
  auto set_u64 = [](uint64_t& dst) {
    return [&dst](const std::string& v) { dst = std::stoull(v); };
  };
  auto set_i64 = [](int64_t& dst) {
    return [&dst](const std::string& v) { dst = std::stoll(v); };
  };
  auto set_int = [](int& dst) {
    return [&dst](const std::string& v) { dst = std::stoi(v); };
  };
  auto set_dbl = [](double& dst) {
    return [&dst](const std::string& v) { dst = std::stod(v); };
  };
  auto set_bool = [](bool& dst) {
    return [&dst](const std::string& v) { dst = std::stoi(v) != 0; };
  };
  setters["env"] = set_str(cfg.env);
  setters["seed"] = set_u64(cfg.seed);
  setters["total_steps"] = set_i64(cfg.total_steps);
  setters["n_steps"] = set_int(cfg.n_steps);
  setters["epochs"] = set_int(cfg.epochs);
  setters["minibatch"] = set_int(cfg.minibatch);
  setters["gamma"] = set_dbl(cfg.gamma);
  setters["lambda"] = set_dbl(cfg.lambda);
  setters["lr"] = set_dbl(cfg.lr);
  setters["adam_beta1"] = set_dbl(cfg.adam_beta1);
  setters["adam_beta2"] = set_dbl(cfg.adam_beta2);
  setters["adam_eps"] = set_dbl(cfg.adam_eps);
  setters["max_grad_norm"] = set_dbl(cfg.max_grad_norm);
  setters["hidden"] = set_int(cfg.hidden);
  setters["depth"] = set_int(cfg.depth);
  setters["d_pi"] = set_int(cfg.d_pi);
  setters["d_v"] = set_int(cfg.d_v);
  setters["d_r"] = set_int(cfg.d_r);
  setters["clip_scheme"] = set_str(cfg.clip_scheme);
  setters["eps_clip"] = set_dbl(cfg.eps_clip);
  setters["alpha_v"] = set_dbl(cfg.alpha_v);
  setters["alpha_r"] = set_dbl(cfg.alpha_r);
  setters["alpha_h"] = set_dbl(cfg.alpha_h);
  setters["huber_delta"] = set_dbl(cfg.huber_delta);
  setters["clip_policy"] = set_bool(cfg.clip_policy);
  setters["clip_value"] = set_bool(cfg.clip_value);
  setters["clip_reward"] = set_bool(cfg.clip_reward);
  setters["normalize_advantages"] = set_bool(cfg.normalize_advantages);
  setters["sigma_start"] = set_dbl(cfg.sigma_start);
  setters["sigma_end"] = set_dbl(cfg.sigma_end);
  setters["sigma_horizon"] = set_i64(cfg.sigma_horizon);
  setters["checkpoint_every"] = set_int(cfg.checkpoint_every);
  setters["record_timing"] = set_bool(cfg.record_timing);
  setters["dump_trajectories"] = set_bool(cfg.dump_trajectories);
  setters["eval_episodes"] = set_int(cfg.eval_episodes);

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    try {
      it->second(val);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << to_text();
  if (!f) throw std::runtime_error("write failed: " + path);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

}  // namespace ppn
