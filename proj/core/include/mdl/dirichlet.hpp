#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdl/dataset.hpp"

namespace mdl {

/// Input-independent categorical model with a Dirichlet prior.
/// Predicts (count_k + pseudo_k) / sum(count + pseudo).
class DirichletModel final : public ConditionalModel {
 public:
  explicit DirichletModel(std::vector<double> pseudocounts);
  static DirichletModel symmetric(int num_classes, double pseudocount = 1.0);

  void update(Label label);
  void observe(std::span<const Label> labels);
  std::vector<double> predict() const;

  std::span<const double> pseudocounts() const { return pseudocounts_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  int num_classes() const override { return static_cast<int>(pseudocounts_.size()); }
  Matrix log2_probs(MatrixRef inputs) const override;
  std::uint64_t fingerprint() const override;

 private:
  std::vector<double> pseudocounts_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace mdl
