#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "acro/error.hpp"
#include "acro/nn/tensor.hpp"

namespace acro::nn {

enum class Activation { identity, relu, tanh, sigmoid };

inline Var activate(const Var& x, Activation a) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::identity: break;
  }
  return x;
}

// y = x W^T (+ b); W is (out x in).
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t out, bool with_bias, std::mt19937_64& rng) {
    Linear l;
    l.weight = &store.add(name + ".weight", out, in);
    init_uniform_fan(*l.weight, rng);
    if (with_bias) l.bias = &store.add(name + ".bias", 1, out);
    return l;
  }

  Var operator()(Graph& g, const Var& x) const {
    Var y = matmul_nt(x, g.param(*weight));
    return bias ? add_row(y, g.param(*bias)) : y;
  }
};

// Gate blocks are stacked [input, forget, cell, output] along the rows of
// the weight matrices.
struct LstmParams {
  Parameter* w_input = nullptr;   // (4h x in)
  Parameter* w_hidden = nullptr;  // (4h x h)
  Parameter* bias = nullptr;      // (1 x 4h)
  std::size_t hidden = 0;

  static LstmParams create(ParameterStore& store, const std::string& name, std::size_t in,
                           std::size_t hidden, std::mt19937_64& rng) {
    LstmParams p;
    p.hidden = hidden;
    p.w_input = &store.add(name + ".w_input", 4 * hidden, in);
    p.w_hidden = &store.add(name + ".w_hidden", 4 * hidden, hidden);
    p.bias = &store.add(name + ".bias", 1, 4 * hidden);
    init_uniform_fan(*p.w_input, rng);
    init_uniform_fan(*p.w_hidden, rng);
    for (std::size_t k = hidden; k < 2 * hidden; ++k) p.bias->value[k] = 1.0;
    return p;
  }

  std::size_t input_dim() const { return w_input->value.cols(); }
};

// Runs one LSTM over the rows of `inputs` (n x in) and returns the hidden
// states (n x h) in sentence order, whichever the direction.
inline Var lstm_forward(Graph& g, const Var& inputs, const LstmParams& p, bool reverse = false) {
  if (inputs.cols() != p.input_dim())
    throw ShapeError("lstm_forward: inputs " + inputs.value().shape_str() + " vs w_input " +
                     p.w_input->value.shape_str());
  const std::size_t n = inputs.rows();
  const std::size_t h = p.hidden;
  Var pre = add_row(matmul_nt(inputs, g.param(*p.w_input)), g.param(*p.bias));
  Var w_hidden = g.param(*p.w_hidden);
  std::vector<Var> states(n);
  Var hs, cs;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Var gates = row(pre, t);
    if (step > 0) gates = add(gates, matmul_nt(hs, w_hidden));
    Var i = sigmoid(slice_cols(gates, 0, h));
    Var f = sigmoid(slice_cols(gates, h, 2 * h));
    Var c_hat = tanh(slice_cols(gates, 2 * h, 3 * h));
    Var o = sigmoid(slice_cols(gates, 3 * h, 4 * h));
    cs = step > 0 ? add(mul(f, cs), mul(i, c_hat)) : mul(i, c_hat);
    hs = mul(o, tanh(cs));
    states[t] = hs;
  }
  return stack_rows(states);
}

struct BiLstmLayer {
  LstmParams forward;
  LstmParams backward;
};

// Stacked BiLSTM; each layer's output row i is [forward h_i : backward h_i].
struct BiLstm {
  std::vector<BiLstmLayer> layers;

  static BiLstm create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t hidden, std::size_t num_layers, std::mt19937_64& rng) {
    BiLstm b;
    for (std::size_t l = 0; l < num_layers; ++l) {
      const std::size_t d = l == 0 ? in : 2 * hidden;
      const auto prefix = name + "." + std::to_string(l);
      auto fwd = LstmParams::create(store, prefix + ".fwd", d, hidden, rng);
      auto bwd = LstmParams::create(store, prefix + ".bwd", d, hidden, rng);
      b.layers.push_back({fwd, bwd});
    }
    return b;
  }

  std::size_t output_dim() const { return layers.empty() ? 0 : 2 * layers.back().forward.hidden; }

  Var operator()(Graph& g, Var x, double dropout_rate = 0.0) const {
    for (const auto& layer : layers) {
      x = concat_cols({lstm_forward(g, x, layer.forward, false),
                       lstm_forward(g, x, layer.backward, true)});
      x = dropout(x, dropout_rate);
    }
    return x;
  }
};

inline Var bilstm(Graph& g, const Var& inputs, const LstmParams& fwd, const LstmParams& bwd) {
  return concat_cols({lstm_forward(g, inputs, fwd, false), lstm_forward(g, inputs, bwd, true)});
}

// Undirected dependency adjacency with self-loops.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t n) : n_(n), edges_(n * n, 0) {
    for (std::size_t i = 0; i < n; ++i) edges_[i * n + i] = 1;
  }

  // heads[i] is the head of token i, or negative for the root.
  static AdjacencyMatrix from_heads(const std::vector<int>& heads) {
    AdjacencyMatrix a(heads.size());
    for (std::size_t i = 0; i < heads.size(); ++i) {
      if (heads[i] < 0) continue;
      if (static_cast<std::size_t>(heads[i]) >= heads.size())
        throw ShapeError("head " + std::to_string(heads[i]) + " outside sentence of length " +
                         std::to_string(heads.size()));
      a.connect(i, static_cast<std::size_t>(heads[i]));
    }
    return a;
  }

  void connect(std::size_t i, std::size_t j) {
    edges_[i * n_ + j] = 1;
    edges_[j * n_ + i] = 1;
  }

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return edges_[i * n_ + j] != 0; }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n_; ++j) d += edges_[i * n_ + j];
    return d;
  }

  // Row i holds 1/deg(i) at each neighbor of i: the neighbor-mean operator.
  Tensor mean_operator() const {
    Tensor m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double inv = 1.0 / static_cast<double>(degree(i));
      for (std::size_t j = 0; j < n_; ++j)
        if ((*this)(i, j)) m(i, j) = inv;
    }
    return m;
  }

 private:
  std::size_t n_;
  std::vector<unsigned char> edges_;
};

// h_i' = act(W * mean_{j in N(i)} h_j), neighbors taken with self-loops.
inline Var gcn_layer(Graph& g, const Var& h, const AdjacencyMatrix& adj, const Var& weight,
                     Activation act = Activation::relu) {
  if (adj.size() != h.rows())
    throw ShapeError("gcn_layer: adjacency over " + std::to_string(adj.size()) + " nodes, input " +
                     h.value().shape_str());
  if (weight.cols() != h.cols())
    throw ShapeError("gcn_layer: weight " + weight.value().shape_str() + " vs input " +
                     h.value().shape_str());
  Var mean = matmul(g.constant(adj.mean_operator()), h);
  return activate(matmul_nt(mean, weight), act);
}

}  // namespace acro::nn
