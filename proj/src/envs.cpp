#include "ppn/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ppn {

namespace {

double clamp_action(double a, const EnvSpec& spec) {
  return std::min(std::max(a, spec.action_low), spec.action_high);
}

// Wrap to [-pi, pi].
double angle_normalize(double th) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  th = std::fmod(th + std::numbers::pi, two_pi);
  if (th < 0.0) th += two_pi;
  return th - std::numbers::pi;
}

class PointMass2D final : public Env {
 public:
  PointMass2D() {
    spec_ = {"pointmass2d", 4, 2, -1.0, 1.0, 100, 0.1};
  }
  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(RngStream& rng) override {
    px_ = rng.uniform(-1.0, 1.0);
    py_ = rng.uniform(-1.0, 1.0);
    vx_ = vy_ = 0.0;
    steps_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    if (done_) throw std::logic_error("pointmass2d: step after done without reset");
    double ax = clamp_action(action[0], spec_), ay = clamp_action(action[1], spec_);
    double dt = spec_.dt;
    vx_ += ax * dt;
    vy_ += ay * dt;
    px_ += vx_ * dt;
    py_ += vy_ * dt;
    double reward = -(px_ * px_ + py_ * py_) - 0.01 * (ax * ax + ay * ay);
    ++steps_;
    done_ = steps_ >= spec_.max_episode_steps;
    return {obs(), reward, done_};
  }

  std::vector<double> state() const override { return {px_, py_, vx_, vy_}; }

 private:
  std::vector<double> obs() const { return {px_, py_, vx_, vy_}; }
  EnvSpec spec_;
  double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// theta'' = (g/l) sin(theta) + tau/(m l^2) with g=10, l=2/3, m=3/4, so the
// angular dynamics are 15 sin(theta) + 3 tau — the familiar benchmark pendulum.
// theta = 0 is upright; reward penalizes angle, speed, and torque at the
// pre-step state. Speed clamped to +/-8.
class Pendulum final : public Env {
 public:
  Pendulum() {
    spec_ = {"pendulum", 3, 1, -2.0, 2.0, 200, 0.05};
  }
  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(RngStream& rng) override {
    th_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
    thdot_ = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    if (done_) throw std::logic_error("pendulum: step after done without reset");
    double tau = clamp_action(action[0], spec_);
    double an = angle_normalize(th_);
    double reward = -(an * an + 0.1 * thdot_ * thdot_ + 0.001 * tau * tau);
    constexpr double g = 10.0, l = 2.0 / 3.0, m = 0.75, max_speed = 8.0;
    double acc = (g / l) * std::sin(th_) + tau / (m * l * l);
    thdot_ += acc * spec_.dt;
    thdot_ = std::min(std::max(thdot_, -max_speed), max_speed);
    th_ += thdot_ * spec_.dt;
    ++steps_;
    done_ = steps_ >= spec_.max_episode_steps;
    return {obs(), reward, done_};
  }

  std::vector<double> state() const override { return {th_, thdot_}; }

 private:
  std::vector<double> obs() const { return {std::cos(th_), std::sin(th_), thdot_}; }
  EnvSpec spec_;
  double th_ = 0, thdot_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

constexpr double kLqrDt = 0.1;

class Lqr2 final : public Env {
 public:
  Lqr2() {
    spec_ = {"lqr2", 2, 1, -5.0, 5.0, 100, kLqrDt};
  }
  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(RngStream& rng) override {
    x0_ = rng.uniform(-1.0, 1.0);
    x1_ = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    done_ = false;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    if (done_) throw std::logic_error("lqr2: step after done without reset");
    double u = clamp_action(action[0], spec_);
    Lqr2Constants c = lqr2_constants();
    double cost = x0_ * (c.Q[0] * x0_ + c.Q[1] * x1_) + x1_ * (c.Q[2] * x0_ + c.Q[3] * x1_) +
                  c.R * u * u;
    double nx0 = c.A[0] * x0_ + c.A[1] * x1_ + c.B[0] * u;
    double nx1 = c.A[2] * x0_ + c.A[3] * x1_ + c.B[1] * u;
    x0_ = nx0;
    x1_ = nx1;
    ++steps_;
    done_ = steps_ >= spec_.max_episode_steps;
    return {obs(), -cost, done_};
  }

  std::vector<double> state() const override { return {x0_, x1_}; }

 private:
  std::vector<double> obs() const { return {x0_, x1_}; }
  EnvSpec spec_;
  double x0_ = 0, x1_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace

Lqr2Constants lqr2_constants() {
  return {{1.0, kLqrDt, 0.0, 1.0}, {0.0, kLqrDt}, {1.0, 0.0, 0.0, 0.1}, 0.1, kLqrDt};
}

void lqr2_riccati(double gamma, int iters, double p_out[4], double k_out[2]) {
  Lqr2Constants c = lqr2_constants();
  const double* A = c.A;
  const double* B = c.B;
  double P[4] = {c.Q[0], c.Q[1], c.Q[2], c.Q[3]};
  double K[2] = {0.0, 0.0};
  for (int it = 0; it < iters; ++it) {
    // PA = P*A, PB = P*B
    double PA[4] = {P[0] * A[0] + P[1] * A[2], P[0] * A[1] + P[1] * A[3],
                    P[2] * A[0] + P[3] * A[2], P[2] * A[1] + P[3] * A[3]};
    double PB[2] = {P[0] * B[0] + P[1] * B[1], P[2] * B[0] + P[3] * B[1]};
    double AtPA[4] = {A[0] * PA[0] + A[2] * PA[2], A[0] * PA[1] + A[2] * PA[3],
                      A[1] * PA[0] + A[3] * PA[2], A[1] * PA[1] + A[3] * PA[3]};
    double AtPB[2] = {A[0] * PB[0] + A[2] * PB[1], A[1] * PB[0] + A[3] * PB[1]};
    double BtPA[2] = {B[0] * PA[0] + B[1] * PA[2], B[0] * PA[1] + B[1] * PA[3]};
    double BtPB = B[0] * PB[0] + B[1] * PB[1];
    double inv = 1.0 / (c.R + gamma * BtPB);
    double next[4];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        next[i * 2 + j] =
            c.Q[i * 2 + j] + gamma * AtPA[i * 2 + j] - gamma * gamma * AtPB[i] * inv * BtPA[j];
    K[0] = gamma * inv * BtPA[0];
    K[1] = gamma * inv * BtPA[1];
    std::copy(next, next + 4, P);
  }
  std::copy(P, P + 4, p_out);
  std::copy(K, K + 2, k_out);
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names = {"pointmass2d", "pendulum", "lqr2"};
  return names;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pointmass2d") return std::make_unique<PointMass2D>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "lqr2") return std::make_unique<Lqr2>();
  std::string msg = "unknown env '" + name + "'; available:";
  for (const auto& n : env_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

EnvSpec env_spec(const std::string& name) {
  return make_env(name)->spec();
}

}  // namespace ppn
