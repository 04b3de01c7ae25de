#pragma once

// Dense row-major tensors, trainable parameters, and a tape that records
// operations for reverse-mode differentiation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "acro/error.hpp"

namespace acro::nn {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : shape_{rows, cols}, data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw ShapeError("tensor dimensions must be positive");
  }
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
      : shape_{rows, cols}, data_(std::move(data)) {
    if (rows == 0 || cols == 0) throw ShapeError("tensor dimensions must be positive");
    if (data_.size() != rows * cols)
      throw ShapeError("tensor data has " + std::to_string(data_.size()) + " values for shape " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }

  static Tensor row_vector(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(1, n, std::move(v));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 0 : shape_[1]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const { return std::to_string(rows()) + "x" + std::to_string(cols()); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  long step = 0;
  bool trainable = true;

  Parameter(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), m(rows, cols), v(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
};

// Owns parameters at stable addresses, in registration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols) {
    for (const auto& p : params_)
      if (p->name == name) throw ConfigError("duplicate parameter name " + name);
    params_.push_back(std::make_unique<Parameter>(name, rows, cols));
    return *params_.back();
  }

  Parameter* find(const std::string& name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const Parameter*> all() const {
    std::vector<const Parameter*> out;
    for (const auto& p : params_) out.push_back(p.get());
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  std::size_t size() const { return params_.size(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// uniform(-r, r), r = sqrt(6 / (fan_in + fan_out))
inline void init_uniform_fan(Parameter& p, std::mt19937_64& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  std::uniform_real_distribution<double> dist(-r, r);
  for (auto& x : p.value.data()) x = dist(rng);
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    ++p->step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
    auto& w = p->value.data();
    const auto& g = p->grad.data();
    auto& m = p->m.data();
    auto& v = p->v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------

class Graph;

class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : g_(g), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }

  Graph& graph() const { return *g_; }
  std::size_t id() const { return id_; }
  bool valid() const { return g_ != nullptr; }

 private:
  Graph* g_ = nullptr;
  std::size_t id_ = 0;
};

// One forward pass. Nodes are appended in evaluation order, so a reverse
// sweep visits every node after all of its consumers.
class Graph {
 public:
  explicit Graph(bool training = false, std::mt19937_64* rng = nullptr)
      : training_(training), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  std::mt19937_64& rng() {
    if (!rng_) throw ConfigError("graph has no random source");
    return *rng_;
  }

  Var constant(Tensor t) { return push(std::move(t), false, {}); }

  // Leaf bound to a parameter; one node per parameter per graph. The node
  // reads the parameter's tensor in place.
  Var param(Parameter& p) {
    for (const auto& [q, id] : params_)
      if (q == &p) return Var(this, id);
    nodes_.push_back(Node{Tensor{}, Tensor{}, {}, &p, p.trainable});
    params_.emplace_back(&p, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
  }

  // Appends a node. Ops attach their backward step with on_backward().
  Var push(Tensor value, bool needs_grad, std::function<void()> back = {}) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back), nullptr, needs_grad});
    return Var(this, nodes_.size() - 1);
  }

  void on_backward(const Var& v, std::function<void()> back) { nodes_[v.id()].back = std::move(back); }

  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }
  bool any_needs_grad(std::initializer_list<Var> vs) const {
    return std::any_of(vs.begin(), vs.end(), [&](const Var& v) { return needs_grad(v); });
  }

  const Tensor& value(std::size_t id) const {
    const auto& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  Tensor& grad(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) {
      const auto& v = value(id);
      n.grad = Tensor(v.rows(), v.cols());
    }
    return n.grad;
  }

  // Propagates d(loss)/d(node) and adds parameter gradients into
  // Parameter::grad.
  void backward(const Var& loss, double seed = 1.0) {
    if (loss.value().size() != 1) throw ShapeError("backward needs a scalar loss, got " + loss.value().shape_str());
    grad(loss.id())[0] += seed;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.grad.empty() || !n.needs_grad) continue;
      if (n.back) n.back();
      if (n.param) nodes_[i].param->grad += nodes_[i].grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<const Parameter*, std::size_t>> params_;
  bool training_;
  std::mt19937_64* rng_;
};

inline const Tensor& Var::value() const { return g_->value(id_); }

// ---------------------------------------------------------------------------
// Operations. Every Var is a matrix; row vectors are 1 x d.

namespace detail {

inline void require(bool ok, const std::string& op, const Var& a, const Var& b) {
  if (!ok)
    throw ShapeError(op + ": incompatible operands " + a.value().shape_str() + " and " +
                     b.value().shape_str());
}

// Elementwise map whose derivative is written in terms of input x and output y.
template <class Fn, class Deriv>
Var unary(const Var& a, Fn fn, Deriv deriv) {
  Graph& g = a.graph();
  Tensor out = a.value();
  for (auto& x : out.data()) x = fn(x);
  Var o = g.push(std::move(out), g.needs_grad(a));
  if (g.needs_grad(a)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id(), deriv] {
      const auto& x = g.value(ia);
      const auto& y = g.value(io);
      const auto& go = g.grad(io);
      auto& ga = g.grad(ia);
      for (std::size_t i = 0; i < y.size(); ++i) ga[i] += go[i] * deriv(x[i], y[i]);
    });
  }
  return o;
}

}  // namespace detail

// a (m x k) * b (k x n)
inline Var matmul(const Var& a, const Var& b) {
  detail::require(a.cols() == b.rows(), "matmul", a, b);
  Graph& g = a.graph();
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  const auto& A = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * B(p, j);
    }
  Var o = g.push(std::move(out), g.any_needs_grad({a, b}));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), ib = b.id(), io = o.id(), m, k, n,
                      na = g.needs_grad(a), nb = g.needs_grad(b)] {
      const auto& A = g.value(ia);
      const auto& B = g.value(ib);
      const auto& G = g.grad(io);
      if (na) {
        auto& GA = g.grad(ia);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G(i, j) * B(p, j);
            GA(i, p) += acc;
          }
      }
      if (nb) {
        auto& GB = g.grad(ib);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) GB(p, j) += aip * G(i, j);
          }
      }
    });
  }
  return o;
}

// a (m x k) * transpose(w) where w is (n x k); the layout of weight matrices.
inline Var matmul_nt(const Var& a, const Var& w) {
  detail::require(a.cols() == w.cols(), "matmul_nt", a, w);
  Graph& g = a.graph();
  const std::size_t m = a.rows(), k = a.cols(), n = w.rows();
  Tensor out(m, n);
  const auto& A = a.value();
  const auto& W = w.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += A(i, p) * W(j, p);
      out(i, j) = acc;
    }
  Var o = g.push(std::move(out), g.any_needs_grad({a, w}));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), iw = w.id(), io = o.id(), m, k, n,
                      na = g.needs_grad(a), nw = g.needs_grad(w)] {
      const auto& A = g.value(ia);
      const auto& W = g.value(iw);
      const auto& G = g.grad(io);
      if (na) {
        auto& GA = g.grad(ia);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = G(i, j);
            if (gij == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) GA(i, p) += gij * W(j, p);
          }
      }
      if (nw) {
        auto& GW = g.grad(iw);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = G(i, j);
            if (gij == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) GW(j, p) += gij * A(i, p);
          }
      }
    });
  }
  return o;
}

inline Var add(const Var& a, const Var& b) {
  detail::require(a.value().same_shape(b.value()), "add", a, b);
  Graph& g = a.graph();
  Tensor out = a.value();
  out += b.value();
  Var o = g.push(std::move(out), g.any_needs_grad({a, b}));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), ib = b.id(), io = o.id(), na = g.needs_grad(a),
                      nb = g.needs_grad(b)] {
      const auto& G = g.grad(io);
      if (na) g.grad(ia) += G;
      if (nb) g.grad(ib) += G;
    });
  }
  return o;
}

// Adds row vector b (1 x n) to every row of a (m x n).
inline Var add_row(const Var& a, const Var& b) {
  detail::require(b.rows() == 1 && b.cols() == a.cols(), "add_row", a, b);
  Graph& g = a.graph();
  Tensor out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += B[j];
  Var o = g.push(std::move(out), g.any_needs_grad({a, b}));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), ib = b.id(), io = o.id(), na = g.needs_grad(a),
                      nb = g.needs_grad(b)] {
      const auto& G = g.grad(io);
      if (na) g.grad(ia) += G;
      if (nb) {
        auto& GB = g.grad(ib);
        for (std::size_t i = 0; i < G.rows(); ++i)
          for (std::size_t j = 0; j < G.cols(); ++j) GB[j] += G(i, j);
      }
    });
  }
  return o;
}

inline Var mul(const Var& a, const Var& b) {
  detail::require(a.value().same_shape(b.value()), "mul", a, b);
  Graph& g = a.graph();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  Var o = g.push(std::move(out), g.any_needs_grad({a, b}));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), ib = b.id(), io = o.id(), na = g.needs_grad(a),
                      nb = g.needs_grad(b)] {
      const auto& G = g.grad(io);
      const auto& A = g.value(ia);
      const auto& B = g.value(ib);
      if (na) {
        auto& GA = g.grad(ia);
        for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * B[i];
      }
      if (nb) {
        auto& GB = g.grad(ib);
        for (std::size_t i = 0; i < G.size(); ++i) GB[i] += G[i] * A[i];
      }
    });
  }
  return o;
}

inline Var scale(const Var& a, double s) {
  return detail::unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Var sigmoid(const Var& a) {
  return detail::unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(const Var& a) {
  return detail::unary(a, [](double x) { return std::tanh(x); },
                       [](double, double y) { return 1.0 - y * y; });
}

inline Var relu(const Var& a) {
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var identity(const Var& a) { return a; }

// Columns [c0, c1) of a.
inline Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  if (!(c0 < c1 && c1 <= a.cols()))
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") outside " + a.value().shape_str());
  Graph& g = a.graph();
  const auto& A = a.value();
  Tensor out(A.rows(), c1 - c0);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = A(i, j);
  Var o = g.push(std::move(out), g.needs_grad(a));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id(), c0, c1] {
      const auto& G = g.grad(io);
      auto& GA = g.grad(ia);
      for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t j = c0; j < c1; ++j) GA(i, j) += G(i, j - c0);
    });
  }
  return o;
}

inline Var row(const Var& a, std::size_t r) {
  if (r >= a.rows()) throw ShapeError("row: index " + std::to_string(r) + " outside " + a.value().shape_str());
  Graph& g = a.graph();
  const auto& A = a.value();
  Tensor out(1, A.cols());
  for (std::size_t j = 0; j < A.cols(); ++j) out[j] = A(r, j);
  Var o = g.push(std::move(out), g.needs_grad(a));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id(), r] {
      const auto& G = g.grad(io);
      auto& GA = g.grad(ia);
      for (std::size_t j = 0; j < G.cols(); ++j) GA(r, j) += G[j];
    });
  }
  return o;
}

// Horizontal concatenation of operands with equal row counts.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Graph& g = parts.front().graph();
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  bool needs = false;
  for (const auto& p : parts) {
    detail::require(p.rows() == m, "concat_cols", parts.front(), p);
    n += p.cols();
    needs = needs || g.needs_grad(p);
  }
  Tensor out(m, n);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) out(i, off + j) = P(i, j);
    off += P.cols();
  }
  Var o = g.push(std::move(out), needs);
  if (needs) {
    std::vector<std::size_t> ids;
    for (const auto& p : parts) ids.push_back(p.id());
    g.on_backward(o, [&g, ids, io = o.id()] {
      const auto& G = g.grad(io);
      std::size_t off = 0;
      for (auto id : ids) {
        const std::size_t c = g.value(id).cols();
        auto& GP = g.grad(id);
        for (std::size_t i = 0; i < G.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) GP(i, j) += G(i, off + j);
        off += c;
      }
    });
  }
  return o;
}

// Vertical concatenation of operands with equal column counts.
inline Var stack_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no operands");
  Graph& g = parts.front().graph();
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  bool needs = false;
  for (const auto& p : parts) {
    detail::require(p.cols() == n, "stack_rows", parts.front(), p);
    m += p.rows();
    needs = needs || g.needs_grad(p);
  }
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  Var o = g.push(Tensor(m, n, std::move(data)), needs);
  if (needs) {
    std::vector<std::size_t> ids;
    for (const auto& p : parts) ids.push_back(p.id());
    g.on_backward(o, [&g, ids, io = o.id()] {
      const auto& G = g.grad(io);
      std::size_t off = 0;
      for (auto id : ids) {
        auto& GP = g.grad(id);
        for (std::size_t i = 0; i < GP.size(); ++i) GP[i] += G[off + i];
        off += GP.size();
      }
    });
  }
  return o;
}

// Rows ids[0], ids[1], ... of table; an embedding lookup.
inline Var gather_rows(const Var& table, const std::vector<std::size_t>& ids) {
  if (ids.empty()) throw ShapeError("gather_rows: no ids");
  Graph& g = table.graph();
  const auto& T = table.value();
  Tensor out(ids.size(), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= T.rows())
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside " + T.shape_str());
    for (std::size_t j = 0; j < T.cols(); ++j) out(i, j) = T(ids[i], j);
  }
  Var o = g.push(std::move(out), g.needs_grad(table));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, it = table.id(), io = o.id(), ids] {
      const auto& G = g.grad(io);
      auto& GT = g.grad(it);
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < G.cols(); ++j) GT(ids[i], j) += G(i, j);
    });
  }
  return o;
}

// Inverted dropout; identity outside training or at rate 0.
inline Var dropout(const Var& a, double rate) {
  Graph& g = a.graph();
  if (!g.training() || rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(a.rows(), a.cols());
  for (auto& x : mask.data()) x = keep(g.rng()) ? 1.0 / (1.0 - rate) : 0.0;
  return mul(a, g.constant(std::move(mask)));
}

// Componentwise maximum over rows: (n x d) -> (1 x d). Ties route the
// gradient to the first maximal row.
inline Var max_rows(const Var& a) {
  Graph& g = a.graph();
  const auto& A = a.value();
  Tensor out(1, A.cols());
  std::vector<std::size_t> arg(A.cols(), 0);
  for (std::size_t j = 0; j < A.cols(); ++j) {
    double best = A(0, j);
    for (std::size_t i = 1; i < A.rows(); ++i)
      if (A(i, j) > best) {
        best = A(i, j);
        arg[j] = i;
      }
    out[j] = best;
  }
  Var o = g.push(std::move(out), g.needs_grad(a));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id(), arg] {
      const auto& G = g.grad(io);
      auto& GA = g.grad(ia);
      for (std::size_t j = 0; j < arg.size(); ++j) GA(arg[j], j) += G[j];
    });
  }
  return o;
}

// Row-wise log-softmax.
inline Var log_softmax(const Var& a) {
  Graph& g = a.graph();
  const auto& A = a.value();
  Tensor out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < A.cols(); ++j) mx = std::max(mx, A(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) z += std::exp(A(i, j) - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) = A(i, j) - lz;
  }
  Var o = g.push(std::move(out), g.needs_grad(a));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id()] {
      const auto& Y = g.value(io);
      const auto& G = g.grad(io);
      auto& GA = g.grad(ia);
      for (std::size_t i = 0; i < Y.rows(); ++i) {
        double gs = 0.0;
        for (std::size_t j = 0; j < Y.cols(); ++j) gs += G(i, j);
        for (std::size_t j = 0; j < Y.cols(); ++j) GA(i, j) += G(i, j) - std::exp(Y(i, j)) * gs;
      }
    });
  }
  return o;
}

// a(r, c) as a 1 x 1 node.
inline Var pick(const Var& a, std::size_t r, std::size_t c) {
  if (r >= a.rows() || c >= a.cols())
    throw ShapeError("pick: (" + std::to_string(r) + "," + std::to_string(c) + ") outside " +
                     a.value().shape_str());
  Graph& g = a.graph();
  Var o = g.push(Tensor(1, 1, a.value()(r, c)), g.needs_grad(a));
  if (g.needs_grad(o))
    g.on_backward(o, [&g, ia = a.id(), io = o.id(), r, c] { g.grad(ia)(r, c) += g.grad(io)[0]; });
  return o;
}

inline Var sum(const Var& a) {
  Graph& g = a.graph();
  const auto& d = a.value().data();
  Var o = g.push(Tensor(1, 1, std::accumulate(d.begin(), d.end(), 0.0)), g.needs_grad(a));
  if (g.needs_grad(o)) {
    g.on_backward(o, [&g, ia = a.id(), io = o.id()] {
      const double go = g.grad(io)[0];
      for (auto& x : g.grad(ia).data()) x += go;
    });
  }
  return o;
}

// Negative log-likelihood of class `gold` under row-vector logits.
inline Var nll_loss(const Var& logits, std::size_t gold) {
  return scale(pick(log_softmax(logits), 0, gold), -1.0);
}

}  // namespace acro::nn
