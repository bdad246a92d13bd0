#include "ppn/tape.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ppn/linalg.hpp"

namespace ppn {

int Value::rows() const { return tape_->node(id_).rows; }
int Value::cols() const { return tape_->node(id_).cols; }
std::span<const double> Value::data() const { return tape_->node(id_).data; }
std::span<const double> Value::grad() const { return tape_->node(id_).grad; }

double Value::scalar() const {
  if (rows() != 1 || cols() != 1) throw std::invalid_argument("scalar() on non-1x1 value");
  return data()[0];
}

double Value::at(int r, int c) const {
  return data()[static_cast<size_t>(r) * cols() + c];
}

Value Tape::make_node(int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("node dims must be positive");
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.data.assign(static_cast<size_t>(rows) * cols, 0.0);
  n.grad.assign(static_cast<size_t>(rows) * cols, 0.0);
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::leaf(int rows, int cols) { return make_node(rows, cols); }

Value Tape::leaf(int rows, int cols, std::span<const double> vals) {
  Value v = make_node(rows, cols);
  if (vals.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("leaf data size mismatch");
  std::copy(vals.begin(), vals.end(), node(v.id_).data.begin());
  return v;
}

Value Tape::constant(double v) {
  Value c = make_node(1, 1);
  node(c.id_).data[0] = v;
  return c;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Tape::backward(const Value& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: value from another tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward requires a 1x1 loss");
  int last = loss.id();
  adj_.assign(static_cast<size_t>(last) + 1, {});
  for (int id = 0; id <= last; ++id)
    adj_[static_cast<size_t>(id)].assign(node(id).data.size(), 0.0);
  adj_[static_cast<size_t>(last)][0] = 1.0;
  for (int id = last; id >= 0; --id) {
    if (node(id).back) node(id).back();
  }
  for (int id = 0; id <= last; ++id) {
    Node& n = node(id);
    const std::vector<double>& a = adj_[static_cast<size_t>(id)];
    for (size_t i = 0; i < a.size(); ++i) n.grad[i] += a[i];
  }
  adj_.clear();
}

namespace {

void require_same_tape(const Value& a, const Value& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("values from different tapes");
}

void require_same_shape(const Value& a, const Value& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
}

}  // namespace

Value add(Value a, Value b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data(), bd = b.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai), gb = t->adj(bi);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return out;
}

Value sub(Value a, Value b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data(), bd = b.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] - bd[i];
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai), gb = t->adj(bi);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return out;
}

Value mul(Value a, Value b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data(), bd = b.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai), gb = t->adj(bi);
    auto ad = t->node(ai).data, bd = t->node(bi).data;
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * bd[i];
      gb[i] += g[i] * ad[i];
    }
  };
  return out;
}

Value scale(Value a, double c) {
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = c * ad[i];
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi, c] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  };
  return out;
}

Value add_rowvec(Value m, Value row) {
  require_same_tape(m, row);
  if (row.rows() != 1 || row.cols() != m.cols())
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(m)");
  Tape* t = m.tape();
  int rows = m.rows(), cols = m.cols();
  Value out = t->make_node(rows, cols);
  auto& od = t->node(out.id()).data;
  auto md = m.data(), rd = row.data();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      od[static_cast<size_t>(i) * cols + j] = md[static_cast<size_t>(i) * cols + j] + rd[j];
  int mi = m.id(), ri = row.id(), oi = out.id();
  t->node(oi).back = [t, mi, ri, oi, rows, cols] {
    auto g = t->adj(oi);
    auto gm = t->adj(mi), gr = t->adj(ri);
    for (size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) gr[j] += g[static_cast<size_t>(i) * cols + j];
  };
  return out;
}

Value matmul(Value a, Value b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
  Tape* t = a.tape();
  int m = a.rows(), k = a.cols(), n = b.cols();
  Value out = t->make_node(m, n);
  matmul_nn(t->node(out.id()).data.data(), a.data().data(), b.data().data(), m, n, k);
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi, m, k, n] {
    auto g = t->adj(oi);
    // dA += dC * B^T ; dB += A^T * dC
    matmul_nt(t->adj(ai).data(), g.data(), t->node(bi).data.data(), m, k, n);
    matmul_tn(t->adj(bi).data(), t->node(ai).data.data(), g.data(), k, n, m);
  };
  return out;
}

Value tanh(Value a) {
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = std::tanh(ad[i]);
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto od = t->node(oi).data;
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - od[i] * od[i]);
  };
  return out;
}

Value exp(Value a) {
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = std::exp(ad[i]);
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto od = t->node(oi).data;
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * od[i];
  };
  return out;
}

Value clip(Value a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clip: lo must be <= hi");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = std::min(std::max(ad[i], lo), hi);
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi, lo, hi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto ad = t->node(ai).data;
    for (size_t i = 0; i < g.size(); ++i)
      if (ad[i] > lo && ad[i] < hi) ga[i] += g[i];
  };
  return out;
}

Value max(Value a, Value b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "max");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data(), bd = b.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] >= bd[i] ? ad[i] : bd[i];
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai), gb = t->adj(bi);
    auto ad = t->node(ai).data, bd = t->node(bi).data;
    for (size_t i = 0; i < g.size(); ++i) {
      if (ad[i] >= bd[i])
        ga[i] += g[i];
      else
        gb[i] += g[i];
    }
  };
  return out;
}

Value huber(Value a, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be positive");
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) {
    double x = ad[i], ax = std::abs(x);
    od[i] = ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
  }
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi, delta] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto ad = t->node(ai).data;
    for (size_t i = 0; i < g.size(); ++i) {
      double x = ad[i];
      double d = std::abs(x) <= delta ? x : (x > 0.0 ? delta : -delta);
      ga[i] += g[i] * d;
    }
  };
  return out;
}

Value square(Value a) {
  Tape* t = a.tape();
  Value out = t->make_node(a.rows(), a.cols());
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * ad[i];
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto ad = t->node(ai).data;
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * ad[i];
  };
  return out;
}

Value l2_normalize_rows(Value a) {
  constexpr double kEps = 1e-8;
  Tape* t = a.tape();
  int rows = a.rows(), cols = a.cols();
  Value out = t->make_node(rows, cols);
  auto& od = t->node(out.id()).data;
  auto ad = a.data();
  std::copy(ad.begin(), ad.end(), od.begin());
  normalize_rows_inplace(od.data(), rows, cols);
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi, rows, cols] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai);
    auto ad = t->node(ai).data;
    for (int i = 0; i < rows; ++i) {
      const double* v = ad.data() + static_cast<size_t>(i) * cols;
      const double* go = g.data() + static_cast<size_t>(i) * cols;
      double* gi = ga.data() + static_cast<size_t>(i) * cols;
      double sq = 0.0;
      for (int j = 0; j < cols; ++j) sq += v[j] * v[j];
      double nrm = std::sqrt(sq);
      if (sq > kEps * kEps) {
        double vdotg = 0.0;
        for (int j = 0; j < cols; ++j) vdotg += v[j] * go[j];
        double inv = 1.0 / nrm, inv3 = inv * inv * inv;
        for (int j = 0; j < cols; ++j) gi[j] += go[j] * inv - v[j] * vdotg * inv3;
      } else {
        for (int j = 0; j < cols; ++j) gi[j] += go[j] / kEps;
      }
    }
  };
  return out;
}

Value concat_cols(Value a, Value b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Tape* t = a.tape();
  int rows = a.rows(), ca = a.cols(), cb = b.cols();
  Value out = t->make_node(rows, ca + cb);
  auto& od = t->node(out.id()).data;
  auto ad = a.data(), bd = b.data();
  for (int i = 0; i < rows; ++i) {
    double* o = od.data() + static_cast<size_t>(i) * (ca + cb);
    for (int j = 0; j < ca; ++j) o[j] = ad[static_cast<size_t>(i) * ca + j];
    for (int j = 0; j < cb; ++j) o[ca + j] = bd[static_cast<size_t>(i) * cb + j];
  }
  int ai = a.id(), bi = b.id(), oi = out.id();
  t->node(oi).back = [t, ai, bi, oi, rows, ca, cb] {
    auto g = t->adj(oi);
    auto ga = t->adj(ai), gb = t->adj(bi);
    for (int i = 0; i < rows; ++i) {
      const double* go = g.data() + static_cast<size_t>(i) * (ca + cb);
      for (int j = 0; j < ca; ++j) ga[static_cast<size_t>(i) * ca + j] += go[j];
      for (int j = 0; j < cb; ++j) gb[static_cast<size_t>(i) * cb + j] += go[ca + j];
    }
  };
  return out;
}

Value sum(Value a) {
  Tape* t = a.tape();
  Value out = t->make_node(1, 1);
  t->node(out.id()).data[0] = pairwise_sum(a.data());
  int ai = a.id(), oi = out.id();
  t->node(oi).back = [t, ai, oi] {
    double g = t->adj(oi)[0];
    auto ga = t->adj(ai);
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  };
  return out;
}

double gaussian_logp_row(std::span<const double> mu, std::span<const double> sigma,
                         std::span<const double> a) {
  double acc = 0.0;
  for (size_t j = 0; j < mu.size(); ++j) {
    double d = a[j] - mu[j];
    double s2 = sigma[j] * sigma[j];
    acc += d * d / s2 + std::log(2.0 * std::numbers::pi * s2);
  }
  return -0.5 * acc;
}

Value gaussian_log_prob(Value mean, std::span<const double> sigma,
                        std::span<const double> action) {
  Tape* t = mean.tape();
  int rows = mean.rows(), cols = mean.cols();
  size_t need = static_cast<size_t>(rows) * cols;
  if (sigma.size() != need || action.size() != need)
    throw std::invalid_argument("gaussian_log_prob: sigma/action size mismatch");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("gaussian_log_prob: sigma must be positive");
  Value out = t->make_node(rows, 1);
  auto& od = t->node(out.id()).data;
  auto md = mean.data();
  for (int i = 0; i < rows; ++i) {
    size_t off = static_cast<size_t>(i) * cols;
    od[i] = gaussian_logp_row(md.subspan(off, cols), sigma.subspan(off, cols),
                              action.subspan(off, cols));
  }
  // Copy row constants into the closure; spans may not outlive the caller.
  std::vector<double> sig(sigma.begin(), sigma.end());
  std::vector<double> act(action.begin(), action.end());
  int mi = mean.id(), oi = out.id();
  t->node(oi).back = [t, mi, oi, rows, cols, sig = std::move(sig), act = std::move(act)] {
    auto g = t->adj(oi);
    auto gm = t->adj(mi);
    auto md = t->node(mi).data;
    for (int i = 0; i < rows; ++i) {
      size_t off = static_cast<size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) {
        double s2 = sig[off + j] * sig[off + j];
        gm[off + j] += g[i] * (act[off + j] - md[off + j]) / s2;
      }
    }
  };
  return out;
}

}  // namespace ppn
