#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdl/codelength.hpp"
#include "mdl/prequential.hpp"

namespace mdl {

struct SwitchSegment {
  std::size_t start_block = 0;
  std::size_t model = 0;
  friend bool operator==(const SwitchSegment&, const SwitchSegment&) = default;
};

/// ((t_1, k_1), ..., (t_L, k_L)) over block indices: model k_l is active on
/// blocks [t_l, t_{l+1}).
class SwitchSequence {
 public:
  explicit SwitchSequence(std::vector<SwitchSegment> segments);
  static SwitchSequence single(std::size_t model) { return SwitchSequence({{0, model}}); }

  const std::vector<SwitchSegment>& segments() const { return segments_; }
  std::size_t num_segments() const { return segments_.size(); }
  /// Throws ConfigError unless starts fit in [0, num_blocks) and models in [0, num_models).
  void validate(std::size_t num_blocks, std::size_t num_models) const;
  /// Active model index per block (K_i).
  std::vector<std::size_t> active_models(std::size_t num_blocks) const;

  friend bool operator==(const SwitchSequence&, const SwitchSequence&) = default;

 private:
  std::vector<SwitchSegment> segments_;
};

/// -log2 pi(s) = (2 floor(log2 L) + 1) + (L - 1) * bits_per_switch_point
///              + L * bits_per_model_index.
struct SwitchPrior {
  double bits_per_switch_point = 0.0;
  double bits_per_model_index = 0.0;

  /// log2(#blocks) per switch point, log2(#models) per model index.
  static SwitchPrior standard(std::size_t num_blocks, std::size_t num_models);

  /// Elias-gamma length of L >= 1.
  static double bits_for_segment_count(std::size_t segments);
  double bits_for(std::size_t segments) const;
  double bits_for(const SwitchSequence& seq) const { return bits_for(seq.num_segments()); }
};

/// Matrix of per-block codelengths: row = model in the pool, column = block.
using BlockBits = Matrix;

/// Prior cost of `seq` plus the bits of the active model on each block.
Codelength switch_codelength(const BlockBits& bits, const SwitchSequence& seq,
                             const SwitchPrior& prior);

struct SwitchSolution {
  SwitchSequence sequence;
  Codelength code;
};

/// Exact minimiser of switch_codelength by dynamic programming over
/// (segments used, block, active model). Ties go to fewer segments, then
/// to lower model indices.
SwitchSolution optimal_switch(const BlockBits& bits, const SwitchPrior& prior);

/// Stacks the block codelengths of several prequential runs over the same schedule.
BlockBits block_bits_matrix(std::span<const PrequentialRun> runs);

struct SelfSwitchRun {
  PrequentialRun run;                          // chosen snapshot per block; code includes epoch indices
  std::vector<std::size_t> chosen_epochs;      // per block
  std::vector<std::vector<double>> epoch_bits; // [block][epoch] next-block bits
  std::size_t max_epochs = 0;
};

/// Prequential code that, at every block, trains for max_epochs epochs,
/// records the next-block codelength after each epoch j in {0..max_epochs},
/// and sends the best j with log2(max_epochs + 1) bits.
SelfSwitchRun self_switch_encode(const NetworkStrategy& strategy, const LabeledDataset& data,
                                 const Schedule& schedule, std::size_t max_epochs,
                                 std::uint64_t omega);

/// Receiver side: rebuilds each block model by training for the transmitted
/// number of epochs on the labels decoded so far.
PrequentialRun self_switch_decode(const NetworkStrategy& strategy,
                                  std::shared_ptr<const Matrix> inputs, int num_classes,
                                  std::span<const Label> message, const Schedule& schedule,
                                  std::span<const std::size_t> chosen_epochs,
                                  std::size_t max_epochs, std::uint64_t omega);

}  // namespace mdl
