#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "acro/error.hpp"
#include "acro/nn/tensor.hpp"

namespace acro::nn {

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 50;
  std::size_t patience = 0;  // 0 disables early stopping
  AdamConfig adam;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::optional<double> dev_score;
};

// Returns false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochStats&)>;
// Higher is better; nullopt means no development data.
using DevScorer = std::function<std::optional<double>()>;

// Mini-batch Adam over `count` items. loss(graph, i) builds item i's loss
// in a training graph; a batch minimizes the mean of its items' losses.
// With a dev scorer and patience, the best-scoring parameters are restored
// at the end.
template <class LossFn>
std::vector<EpochStats> train_minibatch(ParameterStore& store, std::size_t count, LossFn&& loss,
                                        std::mt19937_64& rng, const TrainOptions& opt,
                                        const DevScorer& dev = {},
                                        const EpochCallback& on_epoch = {}) {
  if (count == 0) throw DataError("training set is empty");
  if (opt.batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  const auto params = store.all();

  std::vector<EpochStats> history;
  std::optional<double> best;
  std::vector<Tensor> best_values;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < count; begin += opt.batch_size) {
      const std::size_t end = std::min(count, begin + opt.batch_size);
      store.zero_grad();
      Graph g(true, &rng);
      std::vector<Var> losses;
      for (std::size_t k = begin; k < end; ++k) losses.push_back(loss(g, order[k]));
      Var batch = scale(sum(stack_rows(losses)), 1.0 / static_cast<double>(end - begin));
      total += batch.scalar() * static_cast<double>(end - begin);
      g.backward(batch);
      adam_step(params, opt.adam);
    }
    EpochStats stats{epoch, total / static_cast<double>(count), dev ? dev() : std::nullopt};
    history.push_back(stats);

    bool stop = on_epoch && !on_epoch(stats);
    if (stats.dev_score && opt.patience > 0) {
      if (!best || *stats.dev_score > *best) {
        best = stats.dev_score;
        best_values.clear();
        for (const Parameter* p : params) best_values.push_back(p->value);
        since_best = 0;
      } else if (++since_best >= opt.patience) {
        stop = true;
      }
    }
    if (stop) break;
  }
  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  return history;
}

}  // namespace acro::nn
