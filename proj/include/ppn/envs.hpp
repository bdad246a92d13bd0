#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ppn/rng.hpp"

namespace ppn {

struct EnvSpec {
  std::string name;
  int obs_dim = 0, act_dim = 0;
  double action_low = 0.0, action_high = 0.0;
  int max_episode_steps = 0;
  double dt = 0.0;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
};

// Deterministic toy continuous-control environment. Observations are a pure
// function of the internal state; step() is deterministic given state and
// action. Actions are clamped (not rejected) at the bounds before dynamics.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(RngStream& rng) = 0;
  // One dt of semi-implicit Euler; throws std::logic_error if called after
  // done without an intervening reset.
  virtual StepResult step(std::span<const double> action) = 0;
  // Internal physical state, for tests and dumps.
  virtual std::vector<double> state() const = 0;
};

const std::vector<std::string>& env_names();
EnvSpec env_spec(const std::string& name);
// Unknown name -> std::invalid_argument listing available envs.
std::unique_ptr<Env> make_env(const std::string& name);

// lqr2 constants: x' = Ax + Bu (double integrator), reward -(x'Qx + u'Ru)
// evaluated at the pre-step state, the standard LQR cost convention.
struct Lqr2Constants {
  double A[4];  // row-major 2x2
  double B[2];
  double Q[4];
  double R;
  double dt;
};
Lqr2Constants lqr2_constants();

// Discounted Riccati fixed point for lqr2:
//   P = Q + g A'PA - g^2 A'PB (R + g B'PB)^-1 B'PA,
// iterated from P = Q. Optimal value is V(x) = -x'Px; optimal control
// u = -Kx with K = g (R + g B'PB)^-1 B'PA.
void lqr2_riccati(double gamma, int iters, double p_out[4], double k_out[2]);

}  // namespace ppn
