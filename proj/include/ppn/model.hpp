#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppn/rng.hpp"
#include "ppn/tape.hpp"

namespace ppn {

struct ParamTensor {
  std::string name;
  int rows = 0, cols = 0;  // a bias is 1 x cols
  std::vector<double> data;
  int size() const { return rows * cols; }
};

// Five parameter groups: encoder, transition (two residual blocks), policy
// mean head, value head, reward head. `all()` is the canonical order used for
// init draws, optimizer slots, gradient flattening, and checkpoints.
struct PPNParams {
  int obs_dim = 0, act_dim = 0, hidden = 0;
  ParamTensor enc_w1, enc_b1, enc_w2, enc_b2;
  ParamTensor tr1_w1, tr1_b1, tr1_w2, tr1_b2;
  ParamTensor tr2_w1, tr2_b1, tr2_w2, tr2_b2;
  ParamTensor mu_w, mu_b;
  ParamTensor v_w, v_b;
  ParamTensor r_w, r_b;

  std::vector<ParamTensor*> all();
  std::vector<const ParamTensor*> all() const;
  int64_t total_size() const;

  static PPNParams zeros(int obs_dim, int act_dim, int hidden);
  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn in all() order
  // (row-major within each tensor); biases zero.
  static PPNParams init(int obs_dim, int act_dim, int hidden, RngStream& rng);
};

// Parameter-free exploration scale: per-dimension exponential decay from
// sigma_start to sigma_end over `horizon` sampled steps, floored at sigma_end.
struct SigmaSchedule {
  std::vector<double> sigma_start, sigma_end;
  int64_t horizon = 1;

  static SigmaSchedule uniform(int act_dim, double start, double end, int64_t horizon);
  void validate() const;
  void at(int64_t T, std::span<double> out) const;
  std::vector<double> at(int64_t T) const;
};

// Plain (untaped) forward evaluation used when acting. Shares the matmul and
// normalization kernels with the taped path, so a single-row evaluation is
// bitwise identical to the corresponding row of a batched taped forward.
// Counters record how many head applications have run; rollout cost checks
// rely on them.
class PolicyEval {
 public:
  explicit PolicyEval(const PPNParams& p) : p_(&p) {}

  void encode(std::span<const double> obs, std::span<double> s_out) const;
  void policy_mean(std::span<const double> s, std::span<double> mu_out) const;
  double value(std::span<const double> s) const;
  double reward(std::span<const double> s, std::span<const double> a) const;
  void transition(std::span<const double> s, std::span<const double> a,
                  std::span<double> s_out) const;

  struct Counts {
    int64_t encode = 0, policy = 0, value = 0, reward = 0, transition = 0;
  };
  const Counts& counts() const { return counts_; }
  void reset_counts() { counts_ = {}; }
  const PPNParams& params() const { return *p_; }

 private:
  const PPNParams* p_;
  mutable Counts counts_;
  mutable std::vector<double> buf_a_, buf_b_, buf_c_;
};

struct CoreOutput {
  Value policy_mean;          // pi mean at the input state
  std::vector<double> sigma;  // sigma(T), shared across the batch
  Value reward;               // r-hat for (s, a)
  Value next_state;
  Value next_value;           // v-hat at next_state
};

struct UnrollOutput {
  std::vector<Value> states;        // s-hat^0 .. s-hat^d
  std::vector<Value> policy_means;  // at each state
  std::vector<Value> values;        // at each state
  std::vector<Value> rewards;       // r-hat^1 .. r-hat^d
};

// Builds the network on a tape over batched rows. Parameter leaves are
// created once per tape in all() order.
class ModelOnTape {
 public:
  ModelOnTape(Tape& tape, const PPNParams& p, const SigmaSchedule& sched);

  Value encode(Value obs);
  Value policy_mean(Value s);
  Value value(Value s);
  Value reward(Value s, Value a);
  Value transition(Value s, Value a);
  CoreOutput core(Value s, Value a, int64_t T);
  UnrollOutput unroll(Value s0, const std::vector<Value>& actions, int64_t T);

  // Leaves aligned with PPNParams::all().
  const std::vector<Value>& leaves() const { return leaves_; }
  Tape& tape() { return *tape_; }
  const SigmaSchedule& schedule() const { return *sched_; }

 private:
  // Indices into leaves_, matching PPNParams::all() order.
  enum : int {
    kEncW1, kEncB1, kEncW2, kEncB2,
    kTr1W1, kTr1B1, kTr1W2, kTr1B2,
    kTr2W1, kTr2B1, kTr2W2, kTr2B2,
    kMuW, kMuB, kVW, kVB, kRW, kRB,
  };
  Tape* tape_;
  const PPNParams* params_;
  const SigmaSchedule* sched_;
  std::vector<Value> leaves_;
};

}  // namespace ppn
