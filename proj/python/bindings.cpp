#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ppn/checkpoint.hpp"
#include "ppn/config.hpp"
#include "ppn/envs.hpp"
#include "ppn/exec.hpp"
#include "ppn/rollout.hpp"
#include "ppn/trainer.hpp"

namespace py = pybind11;

namespace {

// Owns the env together with its reset stream so python callers only handle a
// seed.
class PyEnv {
 public:
  PyEnv(const std::string& name, uint64_t seed)
      : env_(ppn::make_env(name)), rng_(ppn::substream_seed(seed, ppn::kStreamEnv)) {}

  std::vector<double> reset() { return env_->reset(rng_); }
  py::tuple step(const std::vector<double>& action) {
    ppn::StepResult r = env_->step(action);
    return py::make_tuple(std::move(r.obs), r.reward, r.done);
  }
  std::vector<double> state() const { return env_->state(); }
  const ppn::EnvSpec& spec() const { return env_->spec(); }

 private:
  std::unique_ptr<ppn::Env> env_;
  ppn::RngStream rng_;
};

py::dict to_dict(const ppn::TrainResult& r) {
  py::dict d;
  d["diverged"] = r.diverged;
  d["iterations"] = r.iterations;
  d["total_steps"] = r.total_steps;
  d["last_mean_return"] = r.last_mean_return;
  d["metrics_path"] = r.metrics_path;
  d["checkpoint_path"] = r.checkpoint_path;
  d["config_path"] = r.config_path;
  return d;
}

py::dict to_dict(const ppn::EvalResult& r) {
  py::dict d;
  d["mean_return"] = r.mean_return;
  d["std_return"] = r.std_return;
  d["mean_len"] = r.mean_len;
  d["episodes"] = r.episodes;
  return d;
}

}  // namespace

PYBIND11_MODULE(ppn, m) {
  m.doc() = "Policy Prediction Network: training, evaluation, and toy environments";

  py::class_<ppn::EnvSpec>(m, "EnvSpec")
      .def_readonly("name", &ppn::EnvSpec::name)
      .def_readonly("obs_dim", &ppn::EnvSpec::obs_dim)
      .def_readonly("act_dim", &ppn::EnvSpec::act_dim)
      .def_readonly("action_low", &ppn::EnvSpec::action_low)
      .def_readonly("action_high", &ppn::EnvSpec::action_high)
      .def_readonly("max_episode_steps", &ppn::EnvSpec::max_episode_steps)
      .def_readonly("dt", &ppn::EnvSpec::dt);

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&, uint64_t>(), py::arg("name"), py::arg("seed") = 0)
      .def("reset", &PyEnv::reset)
      .def("step", &PyEnv::step, py::arg("action"))
      .def("state", &PyEnv::state)
      .def_property_readonly("spec", &PyEnv::spec);

  m.def("env_names", [] { return ppn::env_names(); });

  py::class_<ppn::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("env", &ppn::RunConfig::env)
      .def_readwrite("seed", &ppn::RunConfig::seed)
      .def_readwrite("total_steps", &ppn::RunConfig::total_steps)
      .def_readwrite("n_steps", &ppn::RunConfig::n_steps)
      .def_readwrite("epochs", &ppn::RunConfig::epochs)
      .def_readwrite("minibatch", &ppn::RunConfig::minibatch)
      .def_readwrite("gamma", &ppn::RunConfig::gamma)
      .def_readwrite("lambda_", &ppn::RunConfig::lambda)
      .def_readwrite("lr", &ppn::RunConfig::lr)
      .def_readwrite("max_grad_norm", &ppn::RunConfig::max_grad_norm)
      .def_readwrite("hidden", &ppn::RunConfig::hidden)
      .def_readwrite("depth", &ppn::RunConfig::depth)
      .def_readwrite("d_pi", &ppn::RunConfig::d_pi)
      .def_readwrite("d_v", &ppn::RunConfig::d_v)
      .def_readwrite("d_r", &ppn::RunConfig::d_r)
      .def_readwrite("clip_scheme", &ppn::RunConfig::clip_scheme)
      .def_readwrite("eps_clip", &ppn::RunConfig::eps_clip)
      .def_readwrite("alpha_v", &ppn::RunConfig::alpha_v)
      .def_readwrite("alpha_r", &ppn::RunConfig::alpha_r)
      .def_readwrite("alpha_h", &ppn::RunConfig::alpha_h)
      .def_readwrite("huber_delta", &ppn::RunConfig::huber_delta)
      .def_readwrite("clip_policy", &ppn::RunConfig::clip_policy)
      .def_readwrite("clip_value", &ppn::RunConfig::clip_value)
      .def_readwrite("clip_reward", &ppn::RunConfig::clip_reward)
      .def_readwrite("normalize_advantages", &ppn::RunConfig::normalize_advantages)
      .def_readwrite("sigma_start", &ppn::RunConfig::sigma_start)
      .def_readwrite("sigma_end", &ppn::RunConfig::sigma_end)
      .def_readwrite("sigma_horizon", &ppn::RunConfig::sigma_horizon)
      .def_readwrite("checkpoint_every", &ppn::RunConfig::checkpoint_every)
      .def_readwrite("record_timing", &ppn::RunConfig::record_timing)
      .def_readwrite("eval_episodes", &ppn::RunConfig::eval_episodes)
      .def("validate", &ppn::RunConfig::validate)
      .def("apply_ppo2_reduction", &ppn::RunConfig::apply_ppo2_reduction)
      .def("to_text", &ppn::RunConfig::to_text)
      .def_static("from_text", &ppn::RunConfig::from_text)
      .def_static("load", &ppn::RunConfig::load)
      .def("save", &ppn::RunConfig::save);

  m.def("train", [](const ppn::RunConfig& cfg, const std::string& out_dir) {
    return to_dict(ppn::train(cfg, out_dir));
  }, py::arg("config"), py::arg("out_dir"));

  m.def("evaluate",
        [](const std::string& checkpoint, const std::string& env, int episodes,
           const std::string& mode, int depth, bool stochastic, uint64_t seed) {
          ppn::Checkpoint ck = ppn::load_checkpoint(checkpoint);
          ppn::ExecMode em;
          em.tag = ppn::parse_exec_mode(mode);
          em.horizon = depth;
          em.stochastic = stochastic;
          return to_dict(
              ppn::evaluate(ck.params, ck.sched, ck.T, env, episodes, em, seed));
        },
        py::arg("checkpoint"), py::arg("env"), py::arg("episodes") = 20,
        py::arg("mode") = "model_free", py::arg("depth") = 1, py::arg("stochastic") = false,
        py::arg("seed") = 0);

  m.def("compute_gae",
        [](const std::vector<double>& rewards, const std::vector<double>& values,
           const std::vector<bool>& dones, double boot_value, double gamma, double lam) {
          size_t n = rewards.size();
          if (values.size() != n || dones.size() != n)
            throw std::invalid_argument("compute_gae: length mismatch");
          ppn::TrajectoryBatch b;
          b.n = static_cast<int>(n);
          b.rew = rewards;
          b.v_old = values;
          b.done.assign(dones.begin(), dones.end());
          b.boot_value = boot_value;
          ppn::compute_gae(b, gamma, lam);
          ppn::compute_returns(b);
          return py::make_tuple(b.adv, b.ret);
        },
        py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("boot_value") = 0.0,
        py::arg("gamma") = 0.99, py::arg("lambda_") = 0.95);

  m.def("checkpoint_hash", &ppn::checkpoint_hash, py::arg("path"));
}
