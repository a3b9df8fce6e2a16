#pragma once

// Reverse-mode differentiation over dense row-major 2-D arrays.
//
// Every value in the model graph is a matrix: a vector is a 1 x n row, a
// batch of vectors is a B x n matrix and a scalar loss is 1 x 1. Ops build a
// DAG of Nodes; backward() walks it in reverse topological order.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace labelmtl::ad {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor constant(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->shape.size(); }

  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  // Gradient; zeros if nothing has been accumulated yet.
  std::vector<double> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;

  friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(Node&)>);
};

// Builds an op result; backward_fn is dropped when no parent needs gradients.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn);

// --- linear algebra ------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] * [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m x k] * [n x k]^T
Tensor transpose(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);        // equal-size vectors -> 1 x 1

// --- elementwise ---------------------------------------------------------
// add/sub accept equal shapes, or a 1 x n row `b` broadcast over the rows of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

// --- structure -----------------------------------------------------------
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
// Row r of the result is row ids[r] of `table`.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);
// Row r is taken from `a` where take_a[r] is true, else from `b`.
Tensor select_rows(const std::vector<bool>& take_a, const Tensor& a, const Tensor& b);
Tensor stop_gradient(const Tensor& a);

// --- reductions and losses -------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kMaskedLogit = -1e30;

Tensor softmax(const Tensor& logits);  // row-wise
// Row-wise softmax restricted to positions where mask[j] != 0; masked
// positions are exactly zero.
Tensor masked_softmax(const Tensor& logits, std::span<const double> mask);
// Mean over rows of -log(max(p[r, target[r]], kLogFloor)).
Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> targets);
// Mean over rows of the squared Euclidean distance between rows of p and z.
Tensor mse(const Tensor& p, const Tensor& z);

std::vector<double> one_hot(std::size_t index, std::size_t n);

// Accumulates d(loss)/d(x) into every reachable tensor that requires grad.
void backward(const Tensor& loss);

// --- verification ----------------------------------------------------------
struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool flagged = false;  // analytic exactly zero where numeric is not
  std::size_t entries_checked = 0;
};

using GradientHook = std::function<void(std::vector<std::vector<double>>&)>;

// Compares reverse-mode gradients of every entry of `params` against central
// differences. Relative error is measured against the numeric derivative;
// entries whose derivatives are both below `floor` count as exact.
// `corrupt` lets tests tamper with the analytic gradients before comparison.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                           double eps = 1e-5, double floor = 1e-6,
                           const GradientHook& corrupt = {});

// --- optimisation ----------------------------------------------------------
class RmsProp {
 public:
  struct Options {
    double learning_rate = 0.001;
    double decay = 0.9;
    double epsilon = 1e-8;
  };

  explicit RmsProp(Options opts) : opts_(opts) {}
  RmsProp() : RmsProp(Options{}) {}

  // New parameters start with zero accumulators.
  void add_parameters(std::span<const Tensor> params);
  void step();
  void zero_grad();

  const Options& options() const { return opts_; }
  std::span<const std::vector<double>> accumulators() const { return accumulators_; }

 private:
  Options opts_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> accumulators_;
};

}  // namespace labelmtl::ad
