#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mdl/dataset.hpp"

namespace mdl {

/// Kahan-Babuska (Neumaier) compensated accumulator.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct CodelengthPart {
  std::string label;
  double bits = 0.0;
};

/// A number of bits together with the components it is made of.
///
/// Construction audits the breakdown: every part must be non-negative and
/// the parts must re-sum to the total within 1e-6 relative.
class Codelength {
 public:
  Codelength() = default;
  explicit Codelength(std::vector<CodelengthPart> parts);
  Codelength(double total_bits, std::vector<CodelengthPart> parts);

  double total_bits() const { return total_bits_; }
  const std::vector<CodelengthPart>& breakdown() const { return parts_; }
  /// Sum of the parts whose label starts with `prefix`.
  double bits_with_prefix(const std::string& prefix) const;

 private:
  double total_bits_ = 0.0;
  std::vector<CodelengthPart> parts_;
};

/// Log-probabilities below this (in bits) are treated as unencodable.
inline constexpr double kMinLog2Prob = -1e6;

/// -sum log2 p(y_i|x_i) over `range`.
/// Throws NumericalError naming the first offending sample if the model
/// output is non-finite or below kMinLog2Prob for the realised label.
double log_loss_bits(const ConditionalModel& model, const LabeledDataset& data,
                     IndexRange range);
double log_loss_bits(const ConditionalModel& model, const LabeledDataset& data);

/// Per-sample -log2 p(y_i|x_i) over `range`.
std::vector<double> per_sample_bits(const ConditionalModel& model, const LabeledDataset& data,
                                    IndexRange range);

/// Fraction of samples in `range` whose argmax prediction (lowest index on
/// ties) equals the label.
double accuracy(const ConditionalModel& model, const LabeledDataset& data, IndexRange range);

/// n log2 K.
double uniform_codelength(std::size_t n, int num_classes);

/// (n log2 K - L) / n. Negative when the code is worse than uniform.
double mutual_info_gain(const Codelength& code, std::size_t n, int num_classes);
double mutual_info_gain(double total_bits, std::size_t n, int num_classes);

/// Natural-log row-wise log-softmax.
Matrix log_softmax(const Matrix& logits);

}  // namespace mdl
