#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdl/dataset.hpp"

namespace mdl {

class Rng;

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Fully connected architecture: widths (d_x, hidden..., K).
/// A spec with exactly two widths is a linear softmax model.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::relu;
  double dropout_prob = 0.0;
  std::uint64_t seed = 0;

  static MlpSpec linear(std::size_t input_dim, int num_classes, std::uint64_t seed = 0);
  static MlpSpec mlp(std::size_t input_dim, std::vector<std::size_t> hidden, int num_classes,
                     Activation activation = Activation::relu, double dropout = 0.0,
                     std::uint64_t seed = 0);

  std::size_t input_dim() const { return layer_widths.front(); }
  int num_classes() const { return static_cast<int>(layer_widths.back()); }
  std::size_t num_layers() const { return layer_widths.size() - 1; }
  std::size_t num_params() const;
  bool is_linear() const { return layer_widths.size() == 2; }

  /// Throws ConfigError when the invariants do not hold.
  void validate() const;
  /// Same architecture with `input_dim`/`num_classes` checked against a dataset.
  void validate_for(const LabeledDataset& data) const;
};

/// Softmax MLP with parameters stored flat: for each layer, W (out x in,
/// row-major) followed by b (out).
class Mlp final : public ConditionalModel {
 public:
  /// Seeded initialisation: hidden layers uniform in +-1/sqrt(fan_in),
  /// output layer zero so the untrained network predicts exactly 1/K.
  explicit Mlp(MlpSpec spec);
  Mlp(MlpSpec spec, std::vector<double> params);

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  void set_params(std::span<const double> params);

  int num_classes() const override { return spec_.num_classes(); }
  Matrix log2_probs(MatrixRef inputs) const override;
  std::uint64_t fingerprint() const override;

  /// Summed log-loss in bits over the rows and its exact gradient with
  /// respect to the parameters (written to `grad`, which is overwritten).
  /// With a non-null `dropout_rng`, inverted dropout masks are drawn from it.
  double loss_and_gradient(MatrixRef inputs, std::span<const Label> labels,
                           std::span<double> grad, Rng* dropout_rng = nullptr) const;

  /// Same as above for an arbitrary parameter vector of the same layout.
  static double loss_and_gradient(const MlpSpec& spec, std::span<const double> params,
                                  MatrixRef inputs, std::span<const Label> labels,
                                  std::span<double> grad, Rng* dropout_rng = nullptr);
  static Matrix log2_probs(const MlpSpec& spec, std::span<const double> params,
                           MatrixRef inputs);

 private:
  MlpSpec spec_;
  std::vector<double> params_;
};

/// Exact gradient of log_loss_bits(model, data, range) with respect to the
/// parameters (inference mode, no dropout).
std::vector<double> gradient(const Mlp& model, const LabeledDataset& data, IndexRange range);

}  // namespace mdl
