#pragma once

// Linear-chain CRF over the five BIO labels with explicit START and STOP
// states. Transition matrices are 7 x 7, indexed (from, to).

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "acro/candidates.hpp"
#include "acro/error.hpp"
#include "acro/nn/tensor.hpp"

namespace acro::crf {

using nn::Tensor;

inline constexpr std::size_t kLabels = kNumBioLabels;
inline constexpr std::size_t kStart = kLabels;
inline constexpr std::size_t kStop = kLabels + 1;
inline constexpr std::size_t kStates = kLabels + 2;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Entries into START and out of STOP are masked regardless of storage.
inline double transition(const Tensor& t, std::size_t from, std::size_t to) {
  if (to == kStart || from == kStop) return kNegInf;
  return t(from, to);
}

// Whether BIO allows `to` right after `from` (from may be kStart).
inline bool bio_allows(std::size_t from, std::size_t to) {
  const auto l = static_cast<BioLabel>(to);
  if (to == kStop) return true;
  if (l == BioLabel::i_acronym)
    return from == static_cast<std::size_t>(BioLabel::b_acronym) ||
           from == static_cast<std::size_t>(BioLabel::i_acronym);
  if (l == BioLabel::i_long)
    return from == static_cast<std::size_t>(BioLabel::b_long) ||
           from == static_cast<std::size_t>(BioLabel::i_long);
  return true;
}

namespace detail {

inline void check_shapes(const Tensor& emissions, const Tensor& trans) {
  if (emissions.cols() != kLabels)
    throw ShapeError("crf: emissions must have " + std::to_string(kLabels) + " columns, got " +
                     emissions.shape_str());
  if (trans.rows() != kStates || trans.cols() != kStates)
    throw ShapeError("crf: transitions must be 7x7, got " + trans.shape_str());
}

inline double log_sum_exp(const double* v, std::size_t n) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

// alpha(i, k): log-sum of all prefixes ending in label k at position i.
inline Tensor forward_table(const Tensor& e, const Tensor& t) {
  const std::size_t n = e.rows();
  Tensor alpha(n, kLabels);
  for (std::size_t k = 0; k < kLabels; ++k) alpha(0, k) = transition(t, kStart, k) + e(0, k);
  double buf[kLabels];
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t k = 0; k < kLabels; ++k) {
      for (std::size_t j = 0; j < kLabels; ++j) buf[j] = alpha(i - 1, j) + transition(t, j, k);
      alpha(i, k) = e(i, k) + log_sum_exp(buf, kLabels);
    }
  return alpha;
}

// beta(i, k): log-sum of all suffixes after label k at position i, STOP included.
inline Tensor backward_table(const Tensor& e, const Tensor& t) {
  const std::size_t n = e.rows();
  Tensor beta(n, kLabels);
  for (std::size_t k = 0; k < kLabels; ++k) beta(n - 1, k) = transition(t, k, kStop);
  double buf[kLabels];
  for (std::size_t i = n - 1; i-- > 0;)
    for (std::size_t k = 0; k < kLabels; ++k) {
      for (std::size_t j = 0; j < kLabels; ++j)
        buf[j] = transition(t, k, j) + e(i + 1, j) + beta(i + 1, j);
      beta(i, k) = log_sum_exp(buf, kLabels);
    }
  return beta;
}

}  // namespace detail

// Sum over positions of emission plus incoming transition, then the STOP
// transition.
inline double sequence_score(const Tensor& emissions, const std::vector<std::size_t>& labels,
                             const Tensor& trans) {
  detail::check_shapes(emissions, trans);
  if (labels.size() != emissions.rows())
    throw ShapeError("sequence_score: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(emissions.rows()) + " positions");
  double s = 0.0;
  std::size_t prev = kStart;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    s += emissions(j, labels[j]) + transition(trans, prev, labels[j]);
    prev = labels[j];
  }
  return s + transition(trans, prev, kStop);
}

inline double log_partition(const Tensor& emissions, const Tensor& trans) {
  detail::check_shapes(emissions, trans);
  if (emissions.rows() == 0) throw ShapeError("log_partition: empty sequence");
  Tensor alpha = detail::forward_table(emissions, trans);
  const std::size_t n = emissions.rows();
  double buf[kLabels];
  for (std::size_t k = 0; k < kLabels; ++k) buf[k] = alpha(n - 1, k) + transition(trans, k, kStop);
  return detail::log_sum_exp(buf, kLabels);
}

// Highest-scoring label sequence. Backpointer ties go to the smallest label.
// With `constrained`, transitions BIO forbids are excluded.
inline std::vector<std::size_t> viterbi_decode(const Tensor& emissions, const Tensor& trans,
                                               bool constrained = false) {
  detail::check_shapes(emissions, trans);
  const std::size_t n = emissions.rows();
  if (n == 0) throw ShapeError("viterbi_decode: empty sequence");
  auto tr = [&](std::size_t from, std::size_t to) {
    if (constrained && !bio_allows(from, to)) return kNegInf;
    return transition(trans, from, to);
  };
  Tensor score(n, kLabels);
  std::vector<std::size_t> back(n * kLabels, 0);
  for (std::size_t k = 0; k < kLabels; ++k) score(0, k) = tr(kStart, k) + emissions(0, k);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t k = 0; k < kLabels; ++k) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < kLabels; ++j) {
        const double s = score(i - 1, j) + tr(j, k);
        if (s > best) {
          best = s;
          arg = j;
        }
      }
      score(i, k) = best + emissions(i, k);
      back[i * kLabels + k] = arg;
    }
  double best = kNegInf;
  std::size_t last = 0;
  for (std::size_t k = 0; k < kLabels; ++k) {
    const double s = score(n - 1, k) + tr(k, kStop);
    if (s > best) {
      best = s;
      last = k;
    }
  }
  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) path[i - 1] = back[i * kLabels + path[i]];
  return path;
}

// -log P(gold) = logZ - Score(gold). Gradients are marginals minus gold
// indicators, from one forward-backward pass.
inline nn::Var crf_nll(const nn::Var& emissions, const nn::Var& trans,
                       const std::vector<std::size_t>& gold) {
  nn::Graph& g = emissions.graph();
  const Tensor& E = emissions.value();
  const Tensor& T = trans.value();
  const double log_z = log_partition(E, T);
  const double loss = log_z - sequence_score(E, gold, T);
  nn::Var o = g.push(Tensor(1, 1, loss), g.any_needs_grad({emissions, trans}));
  if (!g.needs_grad(o)) return o;
  g.on_backward(o, [&g, ie = emissions.id(), it = trans.id(), io = o.id(), gold, log_z,
                    ne = g.needs_grad(emissions), nt = g.needs_grad(trans)] {
    const Tensor& E = g.value(ie);
    const Tensor& T = g.value(it);
    const double go = g.grad(io)[0];
    const std::size_t n = E.rows();
    Tensor alpha = detail::forward_table(E, T);
    Tensor beta = detail::backward_table(E, T);
    if (ne) {
      Tensor& GE = g.grad(ie);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < kLabels; ++k)
          GE(i, k) += go * std::exp(alpha(i, k) + beta(i, k) - log_z);
        GE(i, gold[i]) -= go;
      }
    }
    if (nt) {
      Tensor& GT = g.grad(it);
      for (std::size_t k = 0; k < kLabels; ++k) {
        GT(kStart, k) += go * std::exp(alpha(0, k) + beta(0, k) - log_z);
        GT(k, kStop) += go * std::exp(alpha(n - 1, k) + beta(n - 1, k) - log_z);
      }
      for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j < kLabels; ++j)
          for (std::size_t k = 0; k < kLabels; ++k)
            GT(j, k) += go * std::exp(alpha(i, j) + transition(T, j, k) + E(i + 1, k) +
                                      beta(i + 1, k) - log_z);
      std::size_t prev = kStart;
      for (auto l : gold) {
        GT(prev, l) -= go;
        prev = l;
      }
      GT(prev, kStop) -= go;
    }
  });
  return o;
}

}  // namespace acro::crf
