#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mdl/codelength.hpp"
#include "mdl/dataset.hpp"
#include "mdl/mlp.hpp"
#include "mdl/training.hpp"

namespace mdl {

/// theta = theta0 + W phi with W of shape d x k.
class AffineSubspace {
 public:
  /// Throws ConfigError unless W has d rows and unit-norm columns.
  AffineSubspace(std::vector<double> theta0, Matrix W, std::uint64_t seed);

  /// theta0 is the seeded initialisation of `family`; W has Gaussian
  /// entries, each column scaled to unit norm. Both come from `seed`.
  static AffineSubspace random(const MlpSpec& family, std::size_t k, std::uint64_t seed);
  /// k = d, W = I.
  static AffineSubspace identity(std::vector<double> theta0);

  std::size_t full_dim() const { return theta0_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(W_.cols()); }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> theta0() const { return theta0_; }
  const Matrix& basis() const { return W_; }

  std::vector<double> lift(std::span<const double> phi) const;
  /// W^T g: the gradient in phi given the gradient in theta.
  std::vector<double> pullback(std::span<const double> grad_theta) const;

 private:
  std::vector<double> theta0_;
  Matrix W_;
  std::uint64_t seed_;
};

/// Uniform grid of 2^bits cells over [-range, range]; values map to cell centres.
struct QuantizationSpec {
  unsigned bits = 32;
  double range = 1.0;

  void validate() const;
  double cell_width() const;
};

struct Quantized {
  std::vector<double> values;
  std::size_t clamped = 0;  // coordinates that fell outside [-range, range]
};

Quantized quantize(std::span<const double> values, const QuantizationSpec& quant);

/// bits_per_param * num_params for the parameters, then the labels under `model`.
Codelength two_part_codelength(const ConditionalModel& model, std::size_t num_params,
                               const LabeledDataset& data, IndexRange range,
                               double bits_per_param = 32.0);

/// Gradient descent on phi, gradients pulled back through W. Starts at
/// `initial_phi` (zero when absent, i.e. at theta0).
std::vector<double> train_in_subspace(const MlpSpec& family, const AffineSubspace& sub,
                                      const TrainConfig& config, const LabeledDataset& data,
                                      IndexRange range,
                                      std::optional<std::vector<double>> initial_phi = {});

struct SubspaceCode {
  Codelength code;  // "parameters" = k * bits, "data" at the quantized phi
  std::vector<double> quantized_phi;
  std::size_t clamped = 0;
  Mlp model;        // the network the receiver reconstructs
};

SubspaceCode subspace_codelength(const MlpSpec& family, const AffineSubspace& sub,
                                 std::span<const double> phi, const QuantizationSpec& quant,
                                 const LabeledDataset& data, IndexRange range);

}  // namespace mdl
