#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mdl/dataset.hpp"
#include "mdl/mlp.hpp"

namespace mdl {

class Rng;

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

/// The learning algorithm: minibatch gradient descent on mean log-loss.
struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// First-order optimiser state. Adam uses (0.9, 0.999, 1e-8).
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t dim);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// Loss in bits summed over the batch, with its gradient written to `grad`.
using BatchGradient =
    std::function<double(std::span<const double> params, MatrixRef inputs,
                         std::span<const Label> labels, std::span<double> grad, Rng& rng)>;

/// Called with epoch 0 before any update, then after every epoch.
using EpochHook = std::function<void(std::size_t epoch, std::span<const double> params)>;

/// Seeded minibatch loop over `range`. Each epoch draws a fresh permutation
/// from the stream seeded by config.seed; the same stream is handed to the
/// batch gradient (dropout masks). Steps use the gradient of the mean
/// per-sample loss in nats. Throws NumericalError on a non-finite loss.
void optimize(std::span<double> params, const TrainConfig& config, const LabeledDataset& data,
              IndexRange range, const BatchGradient& batch_gradient, const EpochHook& hook = {});

using MlpEpochHook = std::function<void(std::size_t epoch, const Mlp& model)>;

/// Trains a freshly initialised network (seeded by spec.seed) on `range`.
Mlp train(const MlpSpec& spec, const TrainConfig& config, const LabeledDataset& data,
          IndexRange range, const MlpEpochHook& hook = {});

/// Continues training from `initial`.
Mlp train_from(Mlp initial, const TrainConfig& config, const LabeledDataset& data,
               IndexRange range, const MlpEpochHook& hook = {});

}  // namespace mdl
