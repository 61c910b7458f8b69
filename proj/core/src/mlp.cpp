#include "mdl/mlp.hpp"

#include <cmath>
#include <numbers>

#include "mdl/codelength.hpp"
#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

struct LayerView {
  Eigen::Index in;
  Eigen::Index out;
  std::size_t offset;  // start of W; b follows at offset + in * out
};

std::vector<LayerView> layer_views(const MlpSpec& spec) {
  std::vector<LayerView> views;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_widths[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_widths[l + 1]);
    views.push_back({in, out, offset});
    offset += static_cast<std::size_t>(in * out + out);
  }
  return views;
}

void apply_activation(Activation a, Matrix& z) {
  if (a == Activation::relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

// Multiplies `grad_act` in place by the activation derivative, given the activation output.
void backprop_activation(Activation a, const Matrix& activated, Matrix& grad_act) {
  if (a == Activation::relu) {
    grad_act = (activated.array() > 0.0).select(grad_act, 0.0);
  } else {
    grad_act.array() *= 1.0 - activated.array().square();
  }
}

struct ForwardPass {
  std::vector<Matrix> hidden;  // post-activation (and post-dropout) outputs
  std::vector<Matrix> masks;   // inverted dropout masks, empty when unused
  std::vector<Matrix> pre_dropout;  // activation outputs before masking, with dropout only
  Matrix logits;
};

ForwardPass forward(const MlpSpec& spec, std::span<const double> params, MatrixRef inputs,
                    Rng* dropout_rng) {
  const auto views = layer_views(spec);
  ForwardPass pass;
  const bool dropout = dropout_rng != nullptr && spec.dropout_prob > 0.0;
  const double keep_scale = dropout ? 1.0 / (1.0 - spec.dropout_prob) : 1.0;
  for (std::size_t l = 0; l < views.size(); ++l) {
    const auto& v = views[l];
    ConstMatrixMap w(params.data() + v.offset, v.out, v.in);
    ConstRowMap b(params.data() + v.offset + static_cast<std::size_t>(v.in * v.out), v.out);
    const MatrixRef prev = l == 0 ? inputs : MatrixRef(pass.hidden.back());
    Matrix z = prev * w.transpose();
    z.rowwise() += b;
    if (l + 1 == views.size()) {
      pass.logits = std::move(z);
      break;
    }
    apply_activation(spec.activation, z);
    if (dropout) {
      Matrix mask(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < mask.rows(); ++r) {
        for (Eigen::Index c = 0; c < mask.cols(); ++c) {
          mask(r, c) = dropout_rng->uniform01() < spec.dropout_prob ? 0.0 : keep_scale;
        }
      }
      pass.pre_dropout.push_back(z);
      z.array() *= mask.array();
      pass.masks.push_back(std::move(mask));
    }
    pass.hidden.push_back(std::move(z));
  }
  return pass;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "' (expected relu or tanh)");
}

MlpSpec MlpSpec::linear(std::size_t input_dim, int num_classes, std::uint64_t seed) {
  return MlpSpec{{input_dim, static_cast<std::size_t>(num_classes)}, Activation::relu, 0.0, seed};
}

MlpSpec MlpSpec::mlp(std::size_t input_dim, std::vector<std::size_t> hidden, int num_classes,
                     Activation activation, double dropout, std::uint64_t seed) {
  MlpSpec spec;
  spec.layer_widths.push_back(input_dim);
  spec.layer_widths.insert(spec.layer_widths.end(), hidden.begin(), hidden.end());
  spec.layer_widths.push_back(static_cast<std::size_t>(num_classes));
  spec.activation = activation;
  spec.dropout_prob = dropout;
  spec.seed = seed;
  return spec;
}

std::size_t MlpSpec::num_params() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    total += layer_widths[l] * layer_widths[l + 1] + layer_widths[l + 1];
  }
  return total;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) throw ConfigError("MLP needs at least one layer");
  for (std::size_t i = 1; i < layer_widths.size(); ++i) {
    if (layer_widths[i] == 0) throw ConfigError("MLP layer widths must be positive");
  }
  if (layer_widths.back() < 2) throw ConfigError("MLP output width (K) must be >= 2");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
}

void MlpSpec::validate_for(const LabeledDataset& data) const {
  validate();
  if (input_dim() != data.input_dim()) {
    throw ConfigError("MLP input width " + std::to_string(input_dim()) +
                      " does not match dataset dimension " + std::to_string(data.input_dim()));
  }
  if (num_classes() != data.num_classes()) {
    throw ConfigError("MLP output width " + std::to_string(num_classes()) +
                      " does not match dataset class count " +
                      std::to_string(data.num_classes()));
  }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  params_.assign(spec_.num_params(), 0.0);
  Rng rng(spec_.seed);
  const auto views = layer_views(spec_);
  for (std::size_t l = 0; l + 1 < views.size(); ++l) {
    const auto& v = views[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(v.in));
    const std::size_t count = static_cast<std::size_t>(v.in * v.out + v.out);
    for (std::size_t i = 0; i < count; ++i) params_[v.offset + i] = rng.uniform(-bound, bound);
  }
}

Mlp::Mlp(MlpSpec spec, std::vector<double> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.num_params()) {
    throw ConfigError("parameter vector has " + std::to_string(params_.size()) +
                      " entries, architecture needs " + std::to_string(spec_.num_params()));
  }
}

void Mlp::set_params(std::span<const double> params) {
  if (params.size() != params_.size()) throw ConfigError("parameter size mismatch");
  std::copy(params.begin(), params.end(), params_.begin());
}

Matrix Mlp::log2_probs(MatrixRef inputs) const { return log2_probs(spec_, params_, inputs); }

Matrix Mlp::log2_probs(const MlpSpec& spec, std::span<const double> params, MatrixRef inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != spec.input_dim()) {
    throw ConfigError("input dimension mismatch in MLP evaluation");
  }
  const ForwardPass pass = forward(spec, params, inputs, nullptr);
  return log_softmax(pass.logits) * kInvLn2;
}

std::uint64_t Mlp::fingerprint() const {
  std::uint64_t h = fingerprint_doubles(params_);
  std::vector<std::uint64_t> widths(spec_.layer_widths.begin(), spec_.layer_widths.end());
  widths.push_back(static_cast<std::uint64_t>(spec_.activation));
  return fnv1a(std::as_bytes(std::span(widths)), h);
}

double Mlp::loss_and_gradient(MatrixRef inputs, std::span<const Label> labels,
                              std::span<double> grad, Rng* dropout_rng) const {
  return loss_and_gradient(spec_, params_, inputs, labels, grad, dropout_rng);
}

double Mlp::loss_and_gradient(const MlpSpec& spec, std::span<const double> params,
                              MatrixRef inputs, std::span<const Label> labels,
                              std::span<double> grad, Rng* dropout_rng) {
  if (grad.size() != params.size()) throw ConfigError("gradient buffer size mismatch");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    throw ConfigError("inputs and labels disagree in batch size");
  }
  ForwardPass pass = forward(spec, params, inputs, dropout_rng);
  const Matrix logp = log_softmax(pass.logits);

  double loss_nats = 0.0;
  Matrix delta = logp.array().exp().matrix();  // softmax
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    loss_nats -= logp(r, labels[i]);
    delta(r, labels[i]) -= 1.0;
  }
  delta *= kInvLn2;

  const auto views = layer_views(spec);
  for (std::size_t l = views.size(); l-- > 0;) {
    const auto& v = views[l];
    const MatrixRef prev = l == 0 ? inputs : MatrixRef(pass.hidden[l - 1]);
    MatrixMap gw(grad.data() + v.offset, v.out, v.in);
    RowMap gb(grad.data() + v.offset + static_cast<std::size_t>(v.in * v.out), v.out);
    gw.noalias() = delta.transpose() * prev;
    gb = delta.colwise().sum();
    if (l == 0) break;
    ConstMatrixMap w(params.data() + v.offset, v.out, v.in);
    Matrix upstream = delta * w;
    if (!pass.masks.empty()) {
      upstream.array() *= pass.masks[l - 1].array();
      backprop_activation(spec.activation, pass.pre_dropout[l - 1], upstream);
    } else {
      backprop_activation(spec.activation, pass.hidden[l - 1], upstream);
    }
    delta = std::move(upstream);
  }
  return loss_nats * kInvLn2;
}

std::vector<double> gradient(const Mlp& model, const LabeledDataset& data, IndexRange range) {
  std::vector<double> grad(model.num_params(), 0.0);
  model.loss_and_gradient(data.rows(range), data.labels(range), grad);
  return grad;
}

}  // namespace mdl
