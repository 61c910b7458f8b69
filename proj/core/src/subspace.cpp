#include "mdl/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

namespace {

// 1.2 GB of doubles.
constexpr std::size_t kMaxBasisEntries = std::size_t{150'000'000};

}  // namespace

AffineSubspace::AffineSubspace(std::vector<double> theta0, Matrix W, std::uint64_t seed)
    : theta0_(std::move(theta0)), W_(std::move(W)), seed_(seed) {
  if (static_cast<std::size_t>(W_.rows()) != theta0_.size()) {
    throw ConfigError("subspace basis has " + std::to_string(W_.rows()) + " rows, expected " +
                      std::to_string(theta0_.size()));
  }
  if (dim() > full_dim()) throw ConfigError("subspace dimension exceeds parameter count");
  for (Eigen::Index j = 0; j < W_.cols(); ++j) {
    if (std::abs(W_.col(j).norm() - 1.0) > 1e-9) {
      throw ConfigError("subspace basis column " + std::to_string(j) + " is not unit norm");
    }
  }
}

AffineSubspace AffineSubspace::random(const MlpSpec& family, std::size_t k, std::uint64_t seed) {
  family.validate();
  MlpSpec init = family;
  init.seed = derive_seed(seed, "subspace-theta0");
  const Mlp net(init);
  const std::size_t d = net.num_params();
  if (k > d) throw ConfigError("subspace dimension k exceeds parameter count d");
  if (d * k > kMaxBasisEntries) {
    throw ConfigError("subspace basis of " + std::to_string(d) + " x " + std::to_string(k) +
                      " is too large to hold in memory");
  }
  Matrix W(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
  Rng rng(derive_seed(seed, "subspace-basis"));
  // Column by column so a prefix of columns does not depend on k.
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = rng.normal();
    W.col(j) /= W.col(j).norm();
  }
  return AffineSubspace(std::vector<double>(net.params().begin(), net.params().end()),
                        std::move(W), seed);
}

AffineSubspace AffineSubspace::identity(std::vector<double> theta0) {
  const auto d = static_cast<Eigen::Index>(theta0.size());
  return AffineSubspace(std::move(theta0), Matrix::Identity(d, d), 0);
}

std::vector<double> AffineSubspace::lift(std::span<const double> phi) const {
  if (phi.size() != dim()) throw ConfigError("phi has the wrong dimension");
  std::vector<double> theta(theta0_);
  if (dim() == 0) return theta;
  Eigen::Map<Vector> out(theta.data(), static_cast<Eigen::Index>(theta.size()));
  const Eigen::Map<const Vector> p(phi.data(), static_cast<Eigen::Index>(phi.size()));
  out.noalias() += W_ * p;
  return theta;
}

std::vector<double> AffineSubspace::pullback(std::span<const double> grad_theta) const {
  if (grad_theta.size() != full_dim()) throw ConfigError("gradient has the wrong dimension");
  std::vector<double> g(dim(), 0.0);
  if (dim() == 0) return g;
  Eigen::Map<Vector> out(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::Map<const Vector> gt(grad_theta.data(), static_cast<Eigen::Index>(grad_theta.size()));
  out.noalias() = W_.transpose() * gt;
  return g;
}

void QuantizationSpec::validate() const {
  if (bits < 1 || bits > 64) throw ConfigError("bits per coordinate must be in [1, 64]");
  if (!(range > 0.0) || !std::isfinite(range)) throw ConfigError("quantization range must be positive");
}

double QuantizationSpec::cell_width() const { return std::ldexp(2.0 * range, -static_cast<int>(bits)); }

Quantized quantize(std::span<const double> values, const QuantizationSpec& quant) {
  quant.validate();
  const double width = quant.cell_width();
  const double cells = std::ldexp(1.0, static_cast<int>(quant.bits));
  Quantized out;
  out.values.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("cannot quantize a non-finite coordinate");
    double cell;
    if (v < -quant.range) {
      ++out.clamped;
      cell = 0.0;
    } else if (v >= quant.range) {
      if (v > quant.range) ++out.clamped;
      cell = cells - 1.0;
    } else {
      cell = std::min(std::floor((v + quant.range) / width), cells - 1.0);
    }
    double centre = -quant.range + (cell + 0.5) * width;
    // For b >= 53 the top cell index is not representable; stay inside the grid.
    centre = std::min(centre, quant.range - 0.5 * width);
    out.values.push_back(centre);
  }
  return out;
}

Codelength two_part_codelength(const ConditionalModel& model, std::size_t num_params,
                               const LabeledDataset& data, IndexRange range,
                               double bits_per_param) {
  if (!(bits_per_param >= 0.0)) throw ConfigError("bits per parameter must be non-negative");
  const double param_bits = bits_per_param * static_cast<double>(num_params);
  return Codelength({{"parameters", param_bits}, {"data", log_loss_bits(model, data, range)}});
}

std::vector<double> train_in_subspace(const MlpSpec& family, const AffineSubspace& sub,
                                      const TrainConfig& config, const LabeledDataset& data,
                                      IndexRange range,
                                      std::optional<std::vector<double>> initial_phi) {
  family.validate_for(data);
  if (family.num_params() != sub.full_dim()) {
    throw ConfigError("subspace does not match the model family");
  }
  std::vector<double> phi = initial_phi ? std::move(*initial_phi) : std::vector<double>(sub.dim(), 0.0);
  if (phi.size() != sub.dim()) throw ConfigError("initial phi has the wrong dimension");
  if (sub.dim() == 0) return phi;
  std::vector<double> grad_theta(sub.full_dim());
  optimize(phi, config, data, range,
           [&](std::span<const double> p, MatrixRef x, std::span<const Label> y,
               std::span<double> g, Rng& rng) {
             const std::vector<double> theta = sub.lift(p);
             const double loss = Mlp::loss_and_gradient(family, theta, x, y, grad_theta, &rng);
             const std::vector<double> gp = sub.pullback(grad_theta);
             std::copy(gp.begin(), gp.end(), g.begin());
             return loss;
           });
  return phi;
}

SubspaceCode subspace_codelength(const MlpSpec& family, const AffineSubspace& sub,
                                 std::span<const double> phi, const QuantizationSpec& quant,
                                 const LabeledDataset& data, IndexRange range) {
  quant.validate();
  Quantized q = quantize(phi, quant);
  Mlp model(family, sub.lift(q.values));
  const double param_bits = static_cast<double>(sub.dim()) * static_cast<double>(quant.bits);
  Codelength code({{"parameters", param_bits}, {"data", log_loss_bits(model, data, range)}});
  return {std::move(code), std::move(q.values), q.clamped, std::move(model)};
}

}  // namespace mdl
