#include "ppn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ppn/linalg.hpp"

namespace ppn {

namespace {

ParamTensor tensor(const std::string& name, int rows, int cols) {
  ParamTensor t;
  t.name = name;
  t.rows = rows;
  t.cols = cols;
  t.data.assign(static_cast<size_t>(rows) * cols, 0.0);
  return t;
}

}  // namespace

std::vector<ParamTensor*> PPNParams::all() {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &tr1_w1, &tr1_b1, &tr1_w2, &tr1_b2,
          &tr2_w1, &tr2_b1, &tr2_w2, &tr2_b2, &mu_w,   &mu_b,   &v_w,    &v_b,
          &r_w,    &r_b};
}

std::vector<const ParamTensor*> PPNParams::all() const {
  auto mut = const_cast<PPNParams*>(this)->all();
  return std::vector<const ParamTensor*>(mut.begin(), mut.end());
}

int64_t PPNParams::total_size() const {
  int64_t n = 0;
  for (const ParamTensor* t : all()) n += t->size();
  return n;
}

PPNParams PPNParams::zeros(int obs_dim, int act_dim, int hidden) {
  if (obs_dim <= 0 || act_dim <= 0 || hidden <= 0)
    throw std::invalid_argument("PPNParams: dims must be positive");
  PPNParams p;
  p.obs_dim = obs_dim;
  p.act_dim = act_dim;
  p.hidden = hidden;
  int h = hidden, x = obs_dim, z = act_dim;
  p.enc_w1 = tensor("enc_w1", x, h);
  p.enc_b1 = tensor("enc_b1", 1, h);
  p.enc_w2 = tensor("enc_w2", h, h);
  p.enc_b2 = tensor("enc_b2", 1, h);
  p.tr1_w1 = tensor("tr1_w1", h + z, h);
  p.tr1_b1 = tensor("tr1_b1", 1, h);
  p.tr1_w2 = tensor("tr1_w2", h, h);
  p.tr1_b2 = tensor("tr1_b2", 1, h);
  p.tr2_w1 = tensor("tr2_w1", h + z, h);
  p.tr2_b1 = tensor("tr2_b1", 1, h);
  p.tr2_w2 = tensor("tr2_w2", h, h);
  p.tr2_b2 = tensor("tr2_b2", 1, h);
  p.mu_w = tensor("mu_w", h, z);
  p.mu_b = tensor("mu_b", 1, z);
  p.v_w = tensor("v_w", h, 1);
  p.v_b = tensor("v_b", 1, 1);
  p.r_w = tensor("r_w", h + z, 1);
  p.r_b = tensor("r_b", 1, 1);
  return p;
}

PPNParams PPNParams::init(int obs_dim, int act_dim, int hidden, RngStream& rng) {
  PPNParams p = zeros(obs_dim, act_dim, hidden);
  for (ParamTensor* t : p.all()) {
    if (t->rows == 1 && t->name.find("_b") != std::string::npos) continue;  // biases stay zero
    double bound = 1.0 / std::sqrt(static_cast<double>(t->rows));
    for (double& w : t->data) w = rng.uniform(-bound, bound);
  }
  return p;
}

SigmaSchedule SigmaSchedule::uniform(int act_dim, double start, double end, int64_t horizon) {
  SigmaSchedule s;
  s.sigma_start.assign(act_dim, start);
  s.sigma_end.assign(act_dim, end);
  s.horizon = horizon;
  s.validate();
  return s;
}

void SigmaSchedule::validate() const {
  if (sigma_start.size() != sigma_end.size() || sigma_start.empty())
    throw std::invalid_argument("SigmaSchedule: start/end size mismatch");
  if (horizon < 1) throw std::invalid_argument("SigmaSchedule: horizon must be >= 1");
  for (size_t j = 0; j < sigma_start.size(); ++j) {
    if (!(sigma_end[j] > 0.0) || !(sigma_start[j] >= sigma_end[j]))
      throw std::invalid_argument("SigmaSchedule: need start >= end > 0");
  }
}

void SigmaSchedule::at(int64_t T, std::span<double> out) const {
  double frac = static_cast<double>(T) / static_cast<double>(horizon);
  for (size_t j = 0; j < sigma_start.size(); ++j) {
    double decayed = sigma_start[j] * std::exp(-frac * std::log(sigma_start[j] / sigma_end[j]));
    out[j] = std::max(decayed, sigma_end[j]);
  }
}

std::vector<double> SigmaSchedule::at(int64_t T) const {
  std::vector<double> out(sigma_start.size());
  at(T, std::span<double>(out));
  return out;
}

// ---- PolicyEval (plain path) ----

namespace {

// out[cols(w)] = tanh or identity of (x * w + b), single row.
void affine_row(std::span<const double> x, const ParamTensor& w, const ParamTensor& b,
                std::span<double> out, bool apply_tanh) {
  for (int j = 0; j < w.cols; ++j) out[j] = 0.0;
  matmul_nn(out.data(), x.data(), w.data.data(), 1, w.cols, w.rows);
  for (int j = 0; j < w.cols; ++j) {
    out[j] += b.data[j];
    if (apply_tanh) out[j] = std::tanh(out[j]);
  }
}

}  // namespace

void PolicyEval::encode(std::span<const double> obs, std::span<double> s_out) const {
  ++counts_.encode;
  const PPNParams& p = *p_;
  buf_a_.resize(p.hidden);
  affine_row(obs, p.enc_w1, p.enc_b1, buf_a_, true);
  affine_row(buf_a_, p.enc_w2, p.enc_b2, s_out, true);
}

void PolicyEval::policy_mean(std::span<const double> s, std::span<double> mu_out) const {
  ++counts_.policy;
  affine_row(s, p_->mu_w, p_->mu_b, mu_out, false);
}

double PolicyEval::value(std::span<const double> s) const {
  ++counts_.value;
  double out = 0.0;
  matmul_nn(&out, s.data(), p_->v_w.data.data(), 1, 1, p_->v_w.rows);
  return out + p_->v_b.data[0];
}

double PolicyEval::reward(std::span<const double> s, std::span<const double> a) const {
  ++counts_.reward;
  const PPNParams& p = *p_;
  buf_c_.resize(p.hidden + p.act_dim);
  std::copy(s.begin(), s.end(), buf_c_.begin());
  std::copy(a.begin(), a.end(), buf_c_.begin() + p.hidden);
  double out = 0.0;
  matmul_nn(&out, buf_c_.data(), p.r_w.data.data(), 1, 1, p.r_w.rows);
  return out + p.r_b.data[0];
}

void PolicyEval::transition(std::span<const double> s, std::span<const double> a,
                            std::span<double> s_out) const {
  ++counts_.transition;
  const PPNParams& p = *p_;
  int h = p.hidden, z = p.act_dim;
  buf_a_.resize(h);
  buf_b_.resize(h);
  buf_c_.resize(h + z);
  std::copy(s.begin(), s.end(), s_out.begin());
  const ParamTensor* blocks[2][4] = {{&p.tr1_w1, &p.tr1_b1, &p.tr1_w2, &p.tr1_b2},
                                     {&p.tr2_w1, &p.tr2_b1, &p.tr2_w2, &p.tr2_b2}};
  for (auto& blk : blocks) {
    std::copy(s_out.begin(), s_out.end(), buf_c_.begin());
    std::copy(a.begin(), a.end(), buf_c_.begin() + h);
    affine_row(buf_c_, *blk[0], *blk[1], buf_a_, true);
    affine_row(buf_a_, *blk[2], *blk[3], buf_b_, false);
    for (int j = 0; j < h; ++j) s_out[j] += buf_b_[j];
    normalize_rows_inplace(s_out.data(), 1, h);
  }
}

// ---- ModelOnTape ----

ModelOnTape::ModelOnTape(Tape& tape, const PPNParams& p, const SigmaSchedule& sched)
    : tape_(&tape), params_(&p), sched_(&sched) {
  for (const ParamTensor* t : p.all())
    leaves_.push_back(tape.leaf(t->rows, t->cols, t->data));
}

Value ModelOnTape::encode(Value obs) {
  Value h1 = tanh(add_rowvec(matmul(obs, leaves_[kEncW1]), leaves_[kEncB1]));
  return tanh(add_rowvec(matmul(h1, leaves_[kEncW2]), leaves_[kEncB2]));
}

Value ModelOnTape::policy_mean(Value s) {
  return add_rowvec(matmul(s, leaves_[kMuW]), leaves_[kMuB]);
}

Value ModelOnTape::value(Value s) {
  return add_rowvec(matmul(s, leaves_[kVW]), leaves_[kVB]);
}

Value ModelOnTape::reward(Value s, Value a) {
  Value sa = concat_cols(s, a);
  return add_rowvec(matmul(sa, leaves_[kRW]), leaves_[kRB]);
}

Value ModelOnTape::transition(Value s, Value a) {
  const int blocks[2][4] = {{kTr1W1, kTr1B1, kTr1W2, kTr1B2},
                            {kTr2W1, kTr2B1, kTr2W2, kTr2B2}};
  Value u = s;
  for (auto& blk : blocks) {
    Value sa = concat_cols(u, a);
    Value h1 = tanh(add_rowvec(matmul(sa, leaves_[blk[0]]), leaves_[blk[1]]));
    Value h2 = add_rowvec(matmul(h1, leaves_[blk[2]]), leaves_[blk[3]]);
    u = l2_normalize_rows(add(u, h2));
  }
  return u;
}

CoreOutput ModelOnTape::core(Value s, Value a, int64_t T) {
  CoreOutput out{policy_mean(s), sched_->at(T), reward(s, a), transition(s, a), Value{}};
  out.next_value = value(out.next_state);
  return out;
}

UnrollOutput ModelOnTape::unroll(Value s0, const std::vector<Value>& actions, int64_t T) {
  (void)T;
  UnrollOutput out;
  out.states.push_back(s0);
  for (const Value& a : actions) {
    out.rewards.push_back(reward(out.states.back(), a));
    out.states.push_back(transition(out.states.back(), a));
  }
  for (const Value& s : out.states) {
    out.policy_means.push_back(policy_mean(s));
    out.values.push_back(value(s));
  }
  return out;
}

}  // namespace ppn
