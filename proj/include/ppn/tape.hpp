#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ppn {

class Tape;

// Lightweight handle to a node on a Tape. Copies alias the same node.
class Value {
 public:
  Value() = default;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  int rows() const;
  int cols() const;
  int size() const { return rows() * cols(); }
  std::span<const double> data() const;
  std::span<const double> grad() const;
  double scalar() const;  // value of a 1x1 node
  double at(int r, int c) const;

 private:
  friend class Tape;
  Value(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode tape over dense row-major double matrices.
// Creation order is the topological order; backward() walks nodes in reverse.
// backward() accumulates into grads, so repeated calls without zero_grad()
// sum their results.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value leaf(int rows, int cols);  // zero-filled
  Value leaf(int rows, int cols, std::span<const double> vals);
  Value constant(double v);  // 1x1 leaf
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  void zero_grad();
  void backward(const Value& loss);

 private:
  struct Node {
    int rows = 0, cols = 0;
    std::vector<double> data;
    std::vector<double> grad;
    std::function<void()> back;  // empty for leaves
  };

  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  Value make_node(int rows, int cols);
  std::span<double> adj(int id) { return adj_[static_cast<size_t>(id)]; }

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> adj_;  // live only inside backward()

  friend class Value;
  friend Value add(Value a, Value b);
  friend Value sub(Value a, Value b);
  friend Value mul(Value a, Value b);
  friend Value scale(Value a, double c);
  friend Value add_rowvec(Value m, Value row);
  friend Value matmul(Value a, Value b);
  friend Value tanh(Value a);
  friend Value exp(Value a);
  friend Value clip(Value a, double lo, double hi);
  friend Value max(Value a, Value b);
  friend Value huber(Value a, double delta);
  friend Value square(Value a);
  friend Value l2_normalize_rows(Value a);
  friend Value concat_cols(Value a, Value b);
  friend Value sum(Value a);
  friend Value gaussian_log_prob(Value mean, std::span<const double> sigma,
                                 std::span<const double> action);
};

// Elementwise; shapes must match exactly (no implicit broadcasting).
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value scale(Value a, double c);
// m[B x C] + row[1 x C] broadcast over rows (bias add).
Value add_rowvec(Value m, Value row);
Value matmul(Value a, Value b);
Value tanh(Value a);
Value exp(Value a);
// Entries at or beyond a bound take gradient 0 (subgradient of the flat branch).
Value clip(Value a, double lo, double hi);
// Ties resolve to `a`, including its gradient.
Value max(Value a, Value b);
// 0.5*x^2 for |x| <= delta, else delta*(|x| - 0.5*delta).
Value huber(Value a, double delta);
Value square(Value a);
// Rows scaled to unit L2 norm; rows with norm <= 1e-8 divide by 1e-8 instead.
Value l2_normalize_rows(Value a);
Value concat_cols(Value a, Value b);
// Pairwise sum of all entries -> 1x1. Invariant (to 1e-12) under row order.
Value sum(Value a);
// Row-wise diagonal-Gaussian log density of `action` under (mean, sigma):
// out[b] = -0.5 * sum_j [ (a_bj - mu_bj)^2 / sigma_bj^2 + log(2 pi sigma_bj^2) ].
// sigma and action are row-major [B x z] constants; differentiable w.r.t. mean.
Value gaussian_log_prob(Value mean, std::span<const double> sigma,
                        std::span<const double> action);

// Shared scalar kernel for the row above; the sampler and caches use the same
// accumulation order so recomputed log-probs match bitwise.
double gaussian_logp_row(std::span<const double> mu, std::span<const double> sigma,
                         std::span<const double> a);

}  // namespace ppn
