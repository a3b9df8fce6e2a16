#include "labelmtl/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace labelmtl::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const std::vector<double>& v, const Shape& s) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

MutMap mut_view(std::vector<double>& v, const Shape& s) {
  return MutMap(v.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

bool row_broadcast(const Shape& a, const Shape& b) {
  return b.rows == 1 && b.cols == a.cols && a.rows != 1;
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv_from_output) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_result(a.shape(), std::move(out), {a}, [deriv_from_output](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      p.grad[i] += self.grad[i] * deriv_from_output(p.value[i], self.value[i]);
  });
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols)
    throw DimensionError("constant: " + std::to_string(values.size()) + " values for shape " +
                         Shape{rows, cols}.str());
  auto n = std::make_shared<Node>();
  n->shape = {rows, cols};
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::constant(std::size_t rows, std::size_t cols, double fill) {
  return constant(rows, cols, std::vector<double>(rows * cols, fill));
}

Tensor Tensor::parameter(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Tensor t = constant(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return constant(1, n, std::move(values));
}

Tensor Tensor::scalar(double v) { return constant(1, 1, std::vector<double>{v}); }

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item: tensor of shape " + shape().str() + " is not scalar");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const Shape out{a.rows(), b.cols()};
  std::vector<double> v(out.size());
  mut_view(v, out).noalias() = view(a.node()->value, a.shape()) * view(b.node()->value, b.shape());
  return make_result(out, std::move(v), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto g = view(self.grad, self.shape);
    if (pa.requires_grad) {
      pa.ensure_grad();
      mut_view(pa.grad, pa.shape).noalias() += g * view(pb.value, pb.shape).transpose();
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      mut_view(pb.grad, pb.shape).noalias() += view(pa.value, pa.shape).transpose() * g;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a.shape(), b.shape());
  const Shape out{a.rows(), b.rows()};
  std::vector<double> v(out.size());
  mut_view(v, out).noalias() =
      view(a.node()->value, a.shape()) * view(b.node()->value, b.shape()).transpose();
  return make_result(out, std::move(v), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto g = view(self.grad, self.shape);
    if (pa.requires_grad) {
      pa.ensure_grad();
      mut_view(pa.grad, pa.shape).noalias() += g * view(pb.value, pb.shape);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      mut_view(pb.grad, pb.shape).noalias() += g.transpose() * view(pa.value, pa.shape);
    }
  });
}

Tensor transpose(const Tensor& a) {
  const Shape out{a.cols(), a.rows()};
  std::vector<double> v(out.size());
  mut_view(v, out) = view(a.node()->value, a.shape()).transpose();
  return make_result(out, std::move(v), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    mut_view(p.grad, p.shape) += view(self.grad, self.shape).transpose();
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) shape_error("dot", a.shape(), b.shape());
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return make_result({1, 1}, {s}, {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const double g = self.grad[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.value.size(); ++i) pa.grad[i] += g * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.value.size(); ++i) pb.grad[i] += g * pa.value[i];
    }
  });
}

namespace {

Tensor add_signed(const Tensor& a, const Tensor& b, double sign, const char* name) {
  const bool same = a.shape() == b.shape();
  if (!same && !row_broadcast(a.shape(), b.shape())) shape_error(name, a.shape(), b.shape());
  std::vector<double> v(a.values().begin(), a.values().end());
  const auto bv = b.values();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += sign * bv[same ? i : i % cols];
  return make_result(a.shape(), std::move(v), {a, b}, [same, cols, sign](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb.grad[same ? i : i % cols] += sign * self.grad[i];
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_signed(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_signed(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<double> v(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(v), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].shape(), p.shape());
    cols += p.cols();
  }
  std::vector<double> v(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto pv = p.values();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * p.cols()), p.cols(),
                  v.begin() + static_cast<std::ptrdiff_t>(r * cols + off));
    off += p.cols();
  }
  return make_result({rows, cols}, std::move(v), {parts.begin(), parts.end()},
                     [offsets](Node& self) {
                       const std::size_t cols = self.shape.cols;
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         Node& p = parent(self, k);
                         if (!p.requires_grad) continue;
                         p.ensure_grad();
                         const std::size_t pc = p.shape.cols;
                         for (std::size_t r = 0; r < p.shape.rows; ++r)
                           for (std::size_t c = 0; c < pc; ++c)
                             p.grad[r * pc + c] += self.grad[r * cols + offsets[k] + c];
                       }
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols())
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + a.shape().str());
  const std::size_t rows = a.rows();
  const std::size_t src_cols = a.cols();
  std::vector<double> v(rows * count);
  const auto av = a.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) v[r * count + c] = av[r * src_cols + begin + c];
  return make_result({rows, count}, std::move(v), {a}, [begin](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    const std::size_t count = self.shape.cols;
    for (std::size_t r = 0; r < self.shape.rows; ++r)
      for (std::size_t c = 0; c < count; ++c)
        p.grad[r * p.shape.cols + begin + c] += self.grad[r * count + c];
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows())
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + a.shape().str());
  const std::size_t cols = a.cols();
  const auto av = a.values();
  std::vector<double> v(av.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                        av.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  return make_result({count, cols}, std::move(v), {a}, [begin](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    const std::size_t off = begin * self.shape.cols;
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[off + i] += self.grad[i];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  const std::size_t cols = table.cols();
  std::vector<double> v(ids.size() * cols);
  const auto tv = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= table.rows())
      throw DimensionError("embedding_lookup: id " + std::to_string(ids[r]) +
                           " out of range for table " + table.shape().str());
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[r] * cols), cols,
                v.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return make_result({ids.size(), cols}, std::move(v), {table}, [idx](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    const std::size_t cols = self.shape.cols;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c) p.grad[idx[r] * cols + c] += self.grad[r * cols + c];
  });
}

Tensor select_rows(const std::vector<bool>& take_a, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("select_rows", a.shape(), b.shape());
  if (take_a.size() != a.rows())
    throw DimensionError("select_rows: mask of length " + std::to_string(take_a.size()) +
                         " for " + a.shape().str());
  const std::size_t cols = a.cols();
  std::vector<double> v(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto& src = take_a[r] ? av : bv;
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                v.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return make_result(a.shape(), std::move(v), {a, b}, [mask = take_a](Node& self) {
    const std::size_t cols = self.shape.cols;
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      p.ensure_grad();
      const bool want = k == 0;
      for (std::size_t r = 0; r < mask.size(); ++r) {
        if (mask[r] != want) continue;
        for (std::size_t c = 0; c < cols; ++c) p.grad[r * cols + c] += self.grad[r * cols + c];
      }
    }
  });
}

Tensor stop_gradient(const Tensor& a) {
  return Tensor::constant(a.rows(), a.cols(), std::vector<double>(a.values().begin(), a.values().end()));
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_result({1, 1}, {s}, {a}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (double& g : p.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

namespace {

Tensor softmax_impl(const Tensor& logits, std::span<const double> mask) {
  const std::size_t rows = logits.rows();
  const std::size_t cols = logits.cols();
  const auto x = logits.values();
  std::vector<double> v(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      const double xi = x[r * cols + c];
      if (std::isnan(xi)) throw NumericError("softmax: NaN input");
      const double shifted = mask.empty() || mask[c] != 0.0 ? xi : xi + kMaskedLogit;
      v[r * cols + c] = shifted;
      mx = std::max(mx, shifted);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      double& e = v[r * cols + c];
      e = (!mask.empty() && mask[c] == 0.0) ? 0.0 : std::exp(e - mx);
      z += e;
    }
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] /= z;
  }
  return make_result(logits.shape(), std::move(v), {logits}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.ensure_grad();
    const std::size_t cols = self.shape.cols;
    for (std::size_t r = 0; r < self.shape.rows; ++r) {
      double inner = 0.0;
      for (std::size_t c = 0; c < cols; ++c)
        inner += self.grad[r * cols + c] * self.value[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        p.grad[i] += self.value[i] * (self.grad[i] - inner);
      }
    }
  });
}

}  // namespace

Tensor softmax(const Tensor& logits) { return softmax_impl(logits, {}); }

Tensor masked_softmax(const Tensor& logits, std::span<const double> mask) {
  if (mask.size() != logits.cols())
    throw DimensionError("masked_softmax: mask of length " + std::to_string(mask.size()) +
                         " for logits " + logits.shape().str());
  if (std::none_of(mask.begin(), mask.end(), [](double m) { return m != 0.0; }))
    throw std::invalid_argument("masked_softmax: mask selects no positions");
  return softmax_impl(logits, mask);
}

Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> targets) {
  if (targets.size() != probs.rows())
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         probs.shape().str());
  if (targets.empty()) throw DimensionError("cross_entropy: empty batch");
  const std::size_t cols = probs.cols();
  const auto p = probs.values();
  double loss = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] >= cols)
      throw DimensionError("cross_entropy: target " + std::to_string(targets[r]) +
                           " out of range for " + probs.shape().str());
    loss -= std::log(std::max(p[r * cols + targets[r]], kLogFloor));
  }
  const double n = static_cast<double>(targets.size());
  std::vector<std::size_t> t(targets.begin(), targets.end());
  return make_result({1, 1}, {loss / n}, {probs}, [t, n](Node& self) {
    Node& pp = parent(self, 0);
    if (!pp.requires_grad) return;
    pp.ensure_grad();
    const std::size_t cols = pp.shape.cols;
    for (std::size_t r = 0; r < t.size(); ++r) {
      const std::size_t i = r * cols + t[r];
      if (pp.value[i] > kLogFloor) pp.grad[i] -= self.grad[0] / (n * pp.value[i]);
    }
  });
}

Tensor mse(const Tensor& p, const Tensor& z) {
  if (p.shape() != z.shape()) shape_error("mse", p.shape(), z.shape());
  const auto pv = p.values();
  const auto zv = z.values();
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) s += (pv[i] - zv[i]) * (pv[i] - zv[i]);
  const double n = static_cast<double>(p.rows());
  return make_result({1, 1}, {s / n}, {p, z}, [n](Node& self) {
    Node& pp = parent(self, 0);
    Node& pz = parent(self, 1);
    const double g = 2.0 * self.grad[0] / n;
    if (pp.requires_grad) {
      pp.ensure_grad();
      for (std::size_t i = 0; i < pp.value.size(); ++i) pp.grad[i] += g * (pp.value[i] - pz.value[i]);
    }
    if (pz.requires_grad) {
      pz.ensure_grad();
      for (std::size_t i = 0; i < pz.value.size(); ++i) pz.grad[i] -= g * (pp.value[i] - pz.value[i]);
    }
  });
}

std::vector<double> one_hot(std::size_t index, std::size_t n) {
  if (index >= n) throw DimensionError("one_hot: index " + std::to_string(index) + " >= " + std::to_string(n));
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return v;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::logic_error("backward: root must be a scalar, got " +
                           (loss.defined() ? loss.shape().str() : std::string("undefined")));
  Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* child = n->parents[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Interior buffers are per-call scratch; leaves keep accumulating.
  for (Node* n : order)
    if (n->backward_fn) n->grad.clear();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                           double eps, double floor, const GradientHook& corrupt) {
  for (auto& p : params) p.zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());
  if (corrupt) corrupt(analytic);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto vals = params[k].mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + eps;
      const double plus = loss_fn().item();
      vals[i] = saved - eps;
      const double minus = loss_fn().item();
      vals[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k][i];
      double err = 0.0;
      bool flag = false;
      if (std::abs(numeric) < floor && std::abs(a) < floor) {
        err = 0.0;
      } else if (a == 0.0) {
        err = std::numeric_limits<double>::infinity();
        flag = true;
      } else {
        err = std::abs(a - numeric) / std::max(std::abs(numeric), floor);
      }
      ++report.entries_checked;
      if (err > report.max_relative_error || (flag && !report.flagged)) {
        report.max_relative_error = err;
        report.worst_param = k;
        report.worst_entry = i;
        report.analytic = a;
        report.numeric = numeric;
        report.flagged = report.flagged || flag;
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return report;
}

void RmsProp::add_parameters(std::span<const Tensor> params) {
  for (const auto& p : params) {
    if (!p.requires_grad()) throw std::invalid_argument("RmsProp: tensor does not require grad");
    params_.push_back(p);
    accumulators_.emplace_back(p.size(), 0.0);
  }
}

void RmsProp::step() {
  const double keep = opts_.decay;
  const double blend = 1.0 - opts_.decay;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!params_[k].has_grad()) continue;
    const std::vector<double>& g = params_[k].node()->grad;
    auto theta = params_[k].mutable_values();
    auto& acc = accumulators_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      acc[i] = keep * acc[i] + blend * g[i] * g[i];
      theta[i] -= opts_.learning_rate * g[i] / (std::sqrt(acc[i]) + opts_.epsilon);
    }
  }
}

void RmsProp::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace labelmtl::ad
