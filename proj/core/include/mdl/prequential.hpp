#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdl/codelength.hpp"
#include "mdl/dataset.hpp"
#include "mdl/mlp.hpp"
#include "mdl/training.hpp"

namespace mdl {

/// Retraining timesteps t_0 < t_1 < ... < t_S = n. The first t_0 labels are
/// sent with the uniform code; block s covers [t_s, t_{s+1}) and is encoded
/// with a model trained on [0, t_s).
class Schedule {
 public:
  explicit Schedule(std::vector<std::size_t> timesteps);
  /// 1, 2, ..., n: one label per block.
  static Schedule every_step(std::size_t n);

  const std::vector<std::size_t>& timesteps() const { return timesteps_; }
  std::size_t prefix() const { return timesteps_.front(); }
  std::size_t n() const { return timesteps_.back(); }
  std::size_t num_blocks() const { return timesteps_.size() - 1; }
  IndexRange block(std::size_t s) const { return {timesteps_[s], timesteps_[s + 1]}; }

 private:
  std::vector<std::size_t> timesteps_;
};

/// start, floor(start * growth), ... while below n, then n.
Schedule default_schedule(std::size_t n, std::size_t start, double growth);

/// The prediction strategy: how a model is obtained from a label prefix.
class PredictionStrategy {
 public:
  virtual ~PredictionStrategy() = default;
  virtual std::string name() const = 0;
  /// Model for the block after `prefix`, using only samples [0, prefix).
  /// `previous` is the model of the preceding block (null for the first).
  virtual std::unique_ptr<ConditionalModel> fit(const LabeledDataset& data, std::size_t prefix,
                                                std::uint64_t block_seed,
                                                const ConditionalModel* previous) const = 0;
};

class UniformStrategy final : public PredictionStrategy {
 public:
  explicit UniformStrategy(int num_classes) : num_classes_(num_classes) {}
  std::string name() const override { return "uniform"; }
  std::unique_ptr<ConditionalModel> fit(const LabeledDataset& data, std::size_t prefix,
                                        std::uint64_t block_seed,
                                        const ConditionalModel* previous) const override;

 private:
  int num_classes_;
};

/// Categorical-Dirichlet predictor: the exact Bayes mixture, computed sequentially.
class DirichletStrategy final : public PredictionStrategy {
 public:
  explicit DirichletStrategy(std::vector<double> pseudocounts)
      : pseudocounts_(std::move(pseudocounts)) {}
  std::string name() const override { return "dirichlet"; }
  std::unique_ptr<ConditionalModel> fit(const LabeledDataset& data, std::size_t prefix,
                                        std::uint64_t block_seed,
                                        const ConditionalModel* previous) const override;

 private:
  std::vector<double> pseudocounts_;
};

/// Trains a network on the prefix. Initialisation and training streams are
/// derived from the block seed, so the model is a function of (seed, prefix).
class NetworkStrategy final : public PredictionStrategy {
 public:
  NetworkStrategy(MlpSpec spec, TrainConfig config, bool warm_start = false)
      : spec_(std::move(spec)), config_(config), warm_start_(warm_start) {}
  std::string name() const override;
  std::unique_ptr<ConditionalModel> fit(const LabeledDataset& data, std::size_t prefix,
                                        std::uint64_t block_seed,
                                        const ConditionalModel* previous) const override;

  const MlpSpec& spec() const { return spec_; }
  const TrainConfig& config() const { return config_; }
  /// Spec and config with the seeds used for a given block.
  MlpSpec block_spec(std::uint64_t block_seed) const;
  TrainConfig block_config(std::uint64_t block_seed) const;

 private:
  MlpSpec spec_;
  TrainConfig config_;
  bool warm_start_;
};

std::uint64_t block_seed(std::uint64_t omega, std::size_t block);

struct BlockResult {
  std::size_t index = 0;
  IndexRange range;
  double bits = 0.0;
  double per_sample_bits = 0.0;
  double next_block_accuracy = 0.0;  // accuracy on the block before training on it
  std::uint64_t model_fingerprint = 0;
};

struct PrequentialRun {
  Codelength code;
  std::vector<BlockResult> blocks;
  std::size_t prefix = 0;
  int num_classes = 0;
};

/// Sender side: uniform code for the prefix, then each block with the model
/// fitted on everything before it.
PrequentialRun prequential_encode(const PredictionStrategy& strategy, const LabeledDataset& data,
                                  const Schedule& schedule, std::uint64_t omega);

/// Receiver side. Bob starts with the inputs only; labels of a block become
/// known to him only after he has built the model for that block from the
/// labels decoded so far. `message` stands for the decoded label stream.
PrequentialRun prequential_decode(const PredictionStrategy& strategy,
                                  std::shared_ptr<const Matrix> inputs, int num_classes,
                                  std::span<const Label> message, const Schedule& schedule,
                                  std::uint64_t omega);

struct VerificationReport {
  bool ok = true;
  std::vector<std::string> mismatches;
};

/// Compares every block model fingerprint, block codelength and the total,
/// bit for bit.
VerificationReport compare_runs(const PrequentialRun& sender, const PrequentialRun& receiver);

struct CurvePoint {
  std::size_t t = 0;
  double block_bits_per_sample = 0.0;  // 0 for the prefix row
  double next_block_accuracy = 0.0;
  double cumulative_bits = 0.0;
  double excess_over_uniform = 0.0;  // cumulative - t log2 K
  double ratio = 1.0;                // cumulative / (t log2 K)
};

/// First row is the uniform prefix, then one row per block ending at t.
std::vector<CurvePoint> cumulative_curves(const PrequentialRun& run);

struct CatchUp {
  std::optional<std::size_t> first_block_below_uniform;   // per-sample bits < log2 K
  std::optional<std::size_t> first_block_ratio_below_one;  // cumulative ratio < 1
};
CatchUp catch_up_points(const PrequentialRun& run);

}  // namespace mdl
