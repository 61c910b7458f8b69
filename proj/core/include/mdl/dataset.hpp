#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mdl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;
using Label = std::int32_t;

/// Half-open interval [begin, end) of sample indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Inputs x_1..x_n (one row per sample) with labels y_1..y_n in {0..K-1}.
///
/// The input matrix is shared between copies, so relabelled views
/// (shuffled labels, the receiver's partially decoded labels) are cheap.
class LabeledDataset {
 public:
  LabeledDataset(Matrix inputs, std::vector<Label> labels, int num_classes);
  LabeledDataset(std::shared_ptr<const Matrix> inputs, std::vector<Label> labels,
                 int num_classes);

  std::size_t size() const { return labels_.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs_->cols()); }
  int num_classes() const { return num_classes_; }

  const Matrix& inputs() const { return *inputs_; }
  const std::shared_ptr<const Matrix>& shared_inputs() const { return inputs_; }
  std::span<const Label> labels() const { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }

  IndexRange all() const { return {0, size()}; }
  auto rows(IndexRange r) const {
    return inputs_->middleRows(static_cast<Eigen::Index>(r.begin),
                               static_cast<Eigen::Index>(r.size()));
  }
  std::span<const Label> labels(IndexRange r) const {
    return std::span<const Label>(labels_).subspan(r.begin, r.size());
  }

  /// Same inputs, different labels.
  LabeledDataset with_labels(std::vector<Label> labels) const;
  /// Copies the samples of `r` into a new dataset.
  LabeledDataset slice(IndexRange r) const;
  /// Copies the given samples, in the given order.
  LabeledDataset select(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_histogram() const;

 private:
  void validate() const;

  std::shared_ptr<const Matrix> inputs_;
  std::vector<Label> labels_;
  int num_classes_;
};

/// A conditional model p(y|x) over K classes.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual int num_classes() const = 0;

  /// Row i holds log2 p(.|x_i) for row i of `inputs`.
  virtual Matrix log2_probs(MatrixRef inputs) const = 0;

  /// Hash of everything that determines the model's predictions.
  virtual std::uint64_t fingerprint() const = 0;
};

/// p(y|x) = 1/K.
class UniformModel final : public ConditionalModel {
 public:
  explicit UniformModel(int num_classes);
  int num_classes() const override { return num_classes_; }
  Matrix log2_probs(MatrixRef inputs) const override;
  std::uint64_t fingerprint() const override;

 private:
  int num_classes_;
};

}  // namespace mdl
