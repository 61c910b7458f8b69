#include "mdl/dirichlet.hpp"

#include <cmath>
#include <string>

#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

DirichletModel::DirichletModel(std::vector<double> pseudocounts)
    : pseudocounts_(std::move(pseudocounts)), counts_(pseudocounts_.size(), 0) {
  if (pseudocounts_.size() < 2) throw ConfigError("Dirichlet model needs K >= 2");
  for (double a : pseudocounts_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("pseudocounts must be positive");
  }
}

DirichletModel DirichletModel::symmetric(int num_classes, double pseudocount) {
  if (num_classes < 2) throw ConfigError("Dirichlet model needs K >= 2");
  return DirichletModel(std::vector<double>(static_cast<std::size_t>(num_classes), pseudocount));
}

void DirichletModel::update(Label label) {
  if (label < 0 || static_cast<std::size_t>(label) >= counts_.size()) {
    throw ConfigError("label " + std::to_string(label) + " outside Dirichlet support");
  }
  ++counts_[static_cast<std::size_t>(label)];
}

void DirichletModel::observe(std::span<const Label> labels) {
  for (Label y : labels) update(y);
}

std::vector<double> DirichletModel::predict() const {
  double total = 0.0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    total += static_cast<double>(counts_[k]) + pseudocounts_[k];
  }
  std::vector<double> p(counts_.size());
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    p[k] = (static_cast<double>(counts_[k]) + pseudocounts_[k]) / total;
  }
  return p;
}

Matrix DirichletModel::log2_probs(MatrixRef inputs) const {
  double total = 0.0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    total += static_cast<double>(counts_[k]) + pseudocounts_[k];
  }
  const double log_total = std::log2(total);
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(counts_.size()));
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    row(static_cast<Eigen::Index>(k)) =
        std::log2(static_cast<double>(counts_[k]) + pseudocounts_[k]) - log_total;
  }
  return row.replicate(inputs.rows(), 1);
}

std::uint64_t DirichletModel::fingerprint() const {
  const std::uint64_t h = fingerprint_doubles(pseudocounts_);
  return fnv1a(std::as_bytes(std::span(counts_)), h);
}

}  // namespace mdl
