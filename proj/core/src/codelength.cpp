#include "mdl/codelength.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mdl/errors.hpp"

namespace mdl {

namespace {

constexpr Eigen::Index kEvalChunk = 2048;

void check_range(const LabeledDataset& data, IndexRange range) {
  if (range.begin > range.end || range.end > data.size()) {
    throw ConfigError("index range [" + std::to_string(range.begin) + ", " +
                      std::to_string(range.end) + ") outside dataset of size " +
                      std::to_string(data.size()));
  }
}

// Visits (sample index, log2 p(.|x)) row by row in bounded chunks.
template <typename Fn>
void for_each_prediction(const ConditionalModel& model, const LabeledDataset& data,
                         IndexRange range, Fn&& fn) {
  check_range(data, range);
  if (model.num_classes() != data.num_classes()) {
    throw ConfigError("model predicts " + std::to_string(model.num_classes()) +
                      " classes, dataset has " + std::to_string(data.num_classes()));
  }
  for (std::size_t start = range.begin; start < range.end;
       start += static_cast<std::size_t>(kEvalChunk)) {
    const std::size_t stop = std::min(range.end, start + static_cast<std::size_t>(kEvalChunk));
    const Matrix logp = model.log2_probs(data.rows({start, stop}));
    for (std::size_t i = start; i < stop; ++i) {
      fn(i, logp.row(static_cast<Eigen::Index>(i - start)));
    }
  }
}

double realised_bits(std::size_t i, Label y, const auto& row) {
  const double lp = row(y);
  if (!std::isfinite(lp)) {
    std::ostringstream msg;
    msg << "non-finite log-probability " << lp << " for sample " << i;
    throw NumericalError(msg.str());
  }
  if (lp < kMinLog2Prob) {
    std::ostringstream msg;
    msg << "log2-probability " << lp << " of the realised label at sample " << i
        << " is below " << kMinLog2Prob << " bits";
    throw NumericalError(msg.str());
  }
  return -lp;
}

}  // namespace

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

Codelength::Codelength(std::vector<CodelengthPart> parts) : parts_(std::move(parts)) {
  CompensatedSum acc;
  for (const auto& p : parts_) acc.add(p.bits);
  total_bits_ = acc.value();
  for (const auto& p : parts_) {
    if (!(p.bits >= 0.0) || !std::isfinite(p.bits)) {
      throw NumericalError("codelength component '" + p.label + "' is negative or non-finite");
    }
  }
}

Codelength::Codelength(double total_bits, std::vector<CodelengthPart> parts)
    : Codelength(std::move(parts)) {
  const double scale = std::max(1.0, std::abs(total_bits));
  if (std::abs(total_bits - total_bits_) > 1e-6 * scale) {
    std::ostringstream msg;
    msg << "codelength breakdown sums to " << total_bits_ << " but total is " << total_bits;
    throw NumericalError(msg.str());
  }
  total_bits_ = total_bits;
}

double Codelength::bits_with_prefix(const std::string& prefix) const {
  CompensatedSum acc;
  for (const auto& p : parts_) {
    if (p.label.starts_with(prefix)) acc.add(p.bits);
  }
  return acc.value();
}

double log_loss_bits(const ConditionalModel& model, const LabeledDataset& data,
                     IndexRange range) {
  CompensatedSum acc;
  for_each_prediction(model, data, range, [&](std::size_t i, const auto& row) {
    acc.add(realised_bits(i, data.label(i), row));
  });
  return acc.value();
}

double log_loss_bits(const ConditionalModel& model, const LabeledDataset& data) {
  return log_loss_bits(model, data, data.all());
}

std::vector<double> per_sample_bits(const ConditionalModel& model, const LabeledDataset& data,
                                    IndexRange range) {
  std::vector<double> out;
  out.reserve(range.size());
  for_each_prediction(model, data, range, [&](std::size_t i, const auto& row) {
    out.push_back(realised_bits(i, data.label(i), row));
  });
  return out;
}

double accuracy(const ConditionalModel& model, const LabeledDataset& data, IndexRange range) {
  if (range.empty()) return 0.0;
  std::size_t correct = 0;
  for_each_prediction(model, data, range, [&](std::size_t i, const auto& row) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < row.size(); ++k) {
      if (row(k) > row(best)) best = k;
    }
    if (best == data.label(i)) ++correct;
  });
  return static_cast<double>(correct) / static_cast<double>(range.size());
}

double uniform_codelength(std::size_t n, int num_classes) {
  if (num_classes < 2) throw ConfigError("uniform code needs K >= 2");
  return static_cast<double>(n) * std::log2(static_cast<double>(num_classes));
}

double mutual_info_gain(double total_bits, std::size_t n, int num_classes) {
  if (n == 0) throw ConfigError("mutual information gain needs n >= 1");
  return (uniform_codelength(n, num_classes) - total_bits) / static_cast<double>(n);
}

double mutual_info_gain(const Codelength& code, std::size_t n, int num_classes) {
  return mutual_info_gain(code.total_bits(), n, num_classes);
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

}  // namespace mdl
