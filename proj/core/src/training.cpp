#include "mdl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t dim)
    : kind_(kind), lr_(learning_rate) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(dim, 0.0);
    v_.assign(dim, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void optimize(std::span<double> params, const TrainConfig& config, const LabeledDataset& data,
              IndexRange range, const BatchGradient& batch_gradient, const EpochHook& hook) {
  config.validate();
  if (range.empty() || range.end > data.size()) {
    throw ConfigError("training range must be a non-empty interval inside the dataset");
  }
  Rng rng(config.seed);
  Optimizer optimizer(config.optimizer, config.learning_rate, params.size());
  std::vector<double> grad(params.size(), 0.0);
  std::vector<std::size_t> order = iota_indices(range.size());
  const std::size_t batch = std::min(config.batch_size, range.size());
  Matrix batch_inputs(static_cast<Eigen::Index>(batch),
                      static_cast<Eigen::Index>(data.input_dim()));
  std::vector<Label> batch_labels(batch);

  if (hook) hook(0, params);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const std::size_t count = stop - start;
      if (static_cast<std::size_t>(batch_inputs.rows()) != count) {
        batch_inputs.resize(static_cast<Eigen::Index>(count), batch_inputs.cols());
        batch_labels.resize(count);
      }
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = range.begin + order[start + i];
        batch_inputs.row(static_cast<Eigen::Index>(i)) =
            data.inputs().row(static_cast<Eigen::Index>(src));
        batch_labels[i] = data.label(src);
      }
      const double loss = batch_gradient(params, batch_inputs, batch_labels, grad, rng);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged (non-finite loss) at epoch " << epoch << ", batch "
            << batch_index;
        throw NumericalError(msg.str());
      }
      const double scale = std::numbers::ln2 / static_cast<double>(count);
      for (double& g : grad) g *= scale;
      optimizer.step(params, grad);
    }
    if (hook) hook(epoch, params);
  }
}

Mlp train(const MlpSpec& spec, const TrainConfig& config, const LabeledDataset& data,
          IndexRange range, const MlpEpochHook& hook) {
  spec.validate_for(data);
  return train_from(Mlp(spec), config, data, range, hook);
}

Mlp train_from(Mlp initial, const TrainConfig& config, const LabeledDataset& data,
               IndexRange range, const MlpEpochHook& hook) {
  initial.spec().validate_for(data);
  const MlpSpec spec = initial.spec();
  std::vector<double> params(initial.params().begin(), initial.params().end());
  EpochHook param_hook;
  if (hook) {
    param_hook = [&](std::size_t epoch, std::span<const double> p) {
      hook(epoch, Mlp(spec, std::vector<double>(p.begin(), p.end())));
    };
  }
  optimize(
      params, config, data, range,
      [&spec](std::span<const double> p, MatrixRef x, std::span<const Label> y,
              std::span<double> g, Rng& rng) {
        return Mlp::loss_and_gradient(spec, p, x, y, g, &rng);
      },
      param_hook);
  return Mlp(spec, std::move(params));
}

}  // namespace mdl
