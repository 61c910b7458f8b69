#include "mdl/dataset.hpp"

#include <cmath>
#include <string>

#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

LabeledDataset::LabeledDataset(Matrix inputs, std::vector<Label> labels, int num_classes)
    : LabeledDataset(std::make_shared<const Matrix>(std::move(inputs)), std::move(labels),
                     num_classes) {}

LabeledDataset::LabeledDataset(std::shared_ptr<const Matrix> inputs, std::vector<Label> labels,
                               int num_classes)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), num_classes_(num_classes) {
  validate();
}

void LabeledDataset::validate() const {
  if (!inputs_) throw ConfigError("dataset has no input matrix");
  if (num_classes_ < 2) throw ConfigError("dataset needs at least 2 classes");
  if (labels_.empty()) throw ConfigError("dataset must contain at least one sample");
  if (static_cast<std::size_t>(inputs_->rows()) != labels_.size()) {
    throw ConfigError("dataset has " + std::to_string(inputs_->rows()) + " inputs but " +
                      std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw ConfigError("label " + std::to_string(labels_[i]) + " at sample " +
                        std::to_string(i) + " is outside [0, " + std::to_string(num_classes_) +
                        ")");
    }
  }
}

LabeledDataset LabeledDataset::with_labels(std::vector<Label> labels) const {
  return LabeledDataset(inputs_, std::move(labels), num_classes_);
}

LabeledDataset LabeledDataset::slice(IndexRange r) const {
  if (r.end > size() || r.empty()) throw ConfigError("slice out of range");
  Matrix x = rows(r);
  std::vector<Label> y(labels_.begin() + static_cast<std::ptrdiff_t>(r.begin),
                       labels_.begin() + static_cast<std::ptrdiff_t>(r.end));
  return LabeledDataset(std::move(x), std::move(y), num_classes_);
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
  Matrix x(static_cast<Eigen::Index>(indices.size()), inputs_->cols());
  std::vector<Label> y(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw ConfigError("select index out of range");
    x.row(static_cast<Eigen::Index>(i)) = inputs_->row(static_cast<Eigen::Index>(indices[i]));
    y[i] = labels_[indices[i]];
  }
  return LabeledDataset(std::move(x), std::move(y), num_classes_);
}

std::vector<std::size_t> LabeledDataset::class_histogram() const {
  std::vector<std::size_t> hist(static_cast<std::size_t>(num_classes_), 0);
  for (Label y : labels_) ++hist[static_cast<std::size_t>(y)];
  return hist;
}

UniformModel::UniformModel(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 2) throw ConfigError("uniform model needs at least 2 classes");
}

Matrix UniformModel::log2_probs(MatrixRef inputs) const {
  return Matrix::Constant(inputs.rows(), num_classes_, -std::log2(static_cast<double>(num_classes_)));
}

std::uint64_t UniformModel::fingerprint() const {
  const std::uint64_t k = static_cast<std::uint64_t>(num_classes_);
  return fnv1a(std::as_bytes(std::span(&k, 1)));
}

}  // namespace mdl
