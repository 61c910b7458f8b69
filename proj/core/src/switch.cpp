#include "mdl/switch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mdl/errors.hpp"

namespace mdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SwitchSequence::SwitchSequence(std::vector<SwitchSegment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw ConfigError("switch sequence needs at least one segment");
  if (segments_.front().start_block != 0) throw ConfigError("first segment must start at block 0");
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].start_block <= segments_[i - 1].start_block) {
      throw ConfigError("switch points must be strictly increasing");
    }
  }
}

void SwitchSequence::validate(std::size_t num_blocks, std::size_t num_models) const {
  for (const auto& seg : segments_) {
    if (seg.start_block >= num_blocks) throw ConfigError("switch point beyond the last block");
    if (seg.model >= num_models) throw ConfigError("switch sequence names an unknown model");
  }
}

std::vector<std::size_t> SwitchSequence::active_models(std::size_t num_blocks) const {
  std::vector<std::size_t> active(num_blocks);
  std::size_t seg = 0;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    while (seg + 1 < segments_.size() && segments_[seg + 1].start_block <= b) ++seg;
    active[b] = segments_[seg].model;
  }
  return active;
}

SwitchPrior SwitchPrior::standard(std::size_t num_blocks, std::size_t num_models) {
  if (num_blocks == 0 || num_models == 0) throw ConfigError("switch prior needs blocks and models");
  return {std::log2(static_cast<double>(num_blocks)), std::log2(static_cast<double>(num_models))};
}

double SwitchPrior::bits_for_segment_count(std::size_t segments) {
  if (segments == 0) throw ConfigError("segment count must be >= 1");
  const auto floor_log2 = static_cast<double>(std::bit_width(segments) - 1);
  return 2.0 * floor_log2 + 1.0;
}

double SwitchPrior::bits_for(std::size_t segments) const {
  return bits_for_segment_count(segments) +
         static_cast<double>(segments - 1) * bits_per_switch_point +
         static_cast<double>(segments) * bits_per_model_index;
}

Codelength switch_codelength(const BlockBits& bits, const SwitchSequence& seq,
                             const SwitchPrior& prior) {
  const auto num_blocks = static_cast<std::size_t>(bits.cols());
  const auto num_models = static_cast<std::size_t>(bits.rows());
  seq.validate(num_blocks, num_models);
  const auto active = seq.active_models(num_blocks);
  // Plain left fold in block order; optimal_switch reproduces it exactly.
  double data = 0.0;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    data += bits(static_cast<Eigen::Index>(active[b]), static_cast<Eigen::Index>(b));
  }
  return Codelength({{"switch sequence", prior.bits_for(seq)}, {"data", data}});
}

SwitchSolution optimal_switch(const BlockBits& bits, const SwitchPrior& prior) {
  const auto num_models = static_cast<std::size_t>(bits.rows());
  const auto num_blocks = static_cast<std::size_t>(bits.cols());
  if (num_models == 0 || num_blocks == 0) {
    throw ConfigError("optimal switch needs at least one model and one block");
  }
  const std::size_t max_segments = num_blocks;
  if (max_segments * num_blocks * num_models > (std::size_t{1} << 28)) {
    throw ConfigError("switch problem too large for exact search");
  }
  auto x = [&](std::size_t m, std::size_t b) {
    return bits(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(b));
  };
  auto at = [&](std::size_t l, std::size_t b, std::size_t m) {
    return ((l - 1) * num_blocks + b) * num_models + m;
  };
  // cost[l][b][m]: least data bits over blocks 0..b using exactly l segments,
  // the last on model m. from[...] = -1 to extend the segment, else the
  // previous segment's model.
  std::vector<double> cost(max_segments * num_blocks * num_models, kInf);
  std::vector<std::int32_t> from(cost.size(), -1);

  for (std::size_t m = 0; m < num_models; ++m) cost[at(1, 0, m)] = 0.0 + x(m, 0);
  for (std::size_t b = 1; b < num_blocks; ++b) {
    for (std::size_t m = 0; m < num_models; ++m) cost[at(1, b, m)] = cost[at(1, b - 1, m)] + x(m, b);
  }
  for (std::size_t l = 2; l <= max_segments; ++l) {
    for (std::size_t b = l - 1; b < num_blocks; ++b) {
      std::size_t best_prev = 0;
      for (std::size_t m = 1; m < num_models; ++m) {
        if (cost[at(l - 1, b - 1, m)] < cost[at(l - 1, b - 1, best_prev)]) best_prev = m;
      }
      const double switch_cost = cost[at(l - 1, b - 1, best_prev)];
      for (std::size_t m = 0; m < num_models; ++m) {
        const double extend = cost[at(l, b - 1, m)];
        const bool take_switch =
            switch_cost < extend || (switch_cost == extend && best_prev < m);
        if (take_switch) {
          cost[at(l, b, m)] = switch_cost + x(m, b);
          from[at(l, b, m)] = static_cast<std::int32_t>(best_prev);
        } else {
          cost[at(l, b, m)] = extend + x(m, b);
        }
      }
    }
  }

  std::size_t best_l = 0;
  std::size_t best_m = 0;
  double best_total = kInf;
  for (std::size_t l = 1; l <= max_segments; ++l) {
    std::size_t m_star = 0;
    for (std::size_t m = 1; m < num_models; ++m) {
      if (cost[at(l, num_blocks - 1, m)] < cost[at(l, num_blocks - 1, m_star)]) m_star = m;
    }
    const double data = cost[at(l, num_blocks - 1, m_star)];
    if (data == kInf) continue;
    const double total = prior.bits_for(l) + data;
    if (total < best_total) {
      best_total = total;
      best_l = l;
      best_m = m_star;
    }
  }

  std::vector<SwitchSegment> segments;
  std::size_t l = best_l;
  std::size_t m = best_m;
  for (std::size_t b = num_blocks; b-- > 0;) {
    const std::int32_t prev = from[at(l, b, m)];
    if (l == 1 && b == 0) {
      segments.push_back({0, m});
      break;
    }
    if (prev >= 0) {
      segments.push_back({b, m});
      m = static_cast<std::size_t>(prev);
      --l;
    }
  }
  std::reverse(segments.begin(), segments.end());
  SwitchSequence seq(std::move(segments));
  Codelength code = switch_codelength(bits, seq, prior);
  return {std::move(seq), std::move(code)};
}

BlockBits block_bits_matrix(std::span<const PrequentialRun> runs) {
  if (runs.empty()) throw ConfigError("no prequential runs to stack");
  const std::size_t num_blocks = runs.front().blocks.size();
  BlockBits out(static_cast<Eigen::Index>(runs.size()), static_cast<Eigen::Index>(num_blocks));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].blocks.size() != num_blocks || runs[r].prefix != runs.front().prefix) {
      throw ConfigError("prequential runs use different schedules");
    }
    for (std::size_t b = 0; b < num_blocks; ++b) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = runs[r].blocks[b].bits;
    }
  }
  return out;
}

namespace {

PrequentialRun assemble_self_switch(std::vector<BlockResult> blocks, const Schedule& schedule,
                                    int num_classes, std::size_t max_epochs) {
  const double index_bits = std::log2(static_cast<double>(max_epochs + 1));
  std::vector<CodelengthPart> parts;
  parts.push_back({"uniform prefix", uniform_codelength(schedule.prefix(), num_classes)});
  for (const auto& b : blocks) {
    parts.push_back({"block " + std::to_string(b.index), b.bits});
    parts.push_back({"epoch index " + std::to_string(b.index), index_bits});
  }
  return PrequentialRun{Codelength(std::move(parts)), std::move(blocks), schedule.prefix(),
                        num_classes};
}

}  // namespace

SelfSwitchRun self_switch_encode(const NetworkStrategy& strategy, const LabeledDataset& data,
                                 const Schedule& schedule, std::size_t max_epochs,
                                 std::uint64_t omega) {
  if (schedule.n() != data.size()) throw ConfigError("schedule does not match dataset size");
  SelfSwitchRun out;
  out.max_epochs = max_epochs;
  std::vector<BlockResult> blocks;
  for (std::size_t s = 0; s < schedule.num_blocks(); ++s) {
    const std::uint64_t seed = block_seed(omega, s);
    TrainConfig config = strategy.block_config(seed);
    config.epochs = max_epochs;
    const IndexRange block = schedule.block(s);
    std::vector<double> per_epoch;
    BlockResult best;
    best.index = s;
    best.range = block;
    best.bits = kInf;
    std::size_t best_epoch = 0;
    auto hook = [&](std::size_t epoch, const Mlp& snapshot) {
      double bits_j = kInf;
      try {
        bits_j = log_loss_bits(snapshot, data, block);
      } catch (const NumericalError&) {
        // A snapshot that cannot encode a label is simply never chosen.
      }
      per_epoch.push_back(bits_j);
      if (bits_j < best.bits) {
        best.bits = bits_j;
        best.next_block_accuracy = accuracy(snapshot, data, block);
        best.model_fingerprint = snapshot.fingerprint();
        best_epoch = epoch;
      }
    };
    try {
      train(strategy.block_spec(seed), config, data, IndexRange{0, schedule.timesteps()[s]}, hook);
    } catch (const NumericalError& e) {
      throw NumericalError("training on [0, " + std::to_string(schedule.timesteps()[s]) +
                           ") failed: " + e.what());
    }
    best.per_sample_bits = best.bits / static_cast<double>(block.size());
    blocks.push_back(best);
    out.chosen_epochs.push_back(best_epoch);
    out.epoch_bits.push_back(std::move(per_epoch));
  }
  out.run = assemble_self_switch(std::move(blocks), schedule, data.num_classes(), max_epochs);
  return out;
}

PrequentialRun self_switch_decode(const NetworkStrategy& strategy,
                                  std::shared_ptr<const Matrix> inputs, int num_classes,
                                  std::span<const Label> message, const Schedule& schedule,
                                  std::span<const std::size_t> chosen_epochs,
                                  std::size_t max_epochs, std::uint64_t omega) {
  if (schedule.n() != message.size() || chosen_epochs.size() != schedule.num_blocks()) {
    throw ConfigError("self-switch message does not match the schedule");
  }
  std::vector<Label> known(message.size(), 0);
  std::copy(message.begin(), message.begin() + static_cast<std::ptrdiff_t>(schedule.prefix()),
            known.begin());
  std::vector<BlockResult> blocks;
  for (std::size_t s = 0; s < schedule.num_blocks(); ++s) {
    if (chosen_epochs[s] > max_epochs) throw ConfigError("transmitted epoch index out of range");
    const std::uint64_t seed = block_seed(omega, s);
    TrainConfig config = strategy.block_config(seed);
    config.epochs = chosen_epochs[s];
    const LabeledDataset before(inputs, known, num_classes);
    const Mlp model =
        train(strategy.block_spec(seed), config, before, IndexRange{0, schedule.timesteps()[s]});
    const IndexRange r = schedule.block(s);
    std::copy(message.begin() + static_cast<std::ptrdiff_t>(r.begin),
              message.begin() + static_cast<std::ptrdiff_t>(r.end),
              known.begin() + static_cast<std::ptrdiff_t>(r.begin));
    const LabeledDataset after(inputs, known, num_classes);
    BlockResult b;
    b.index = s;
    b.range = r;
    b.bits = log_loss_bits(model, after, r);
    b.per_sample_bits = b.bits / static_cast<double>(r.size());
    b.next_block_accuracy = accuracy(model, after, r);
    b.model_fingerprint = model.fingerprint();
    blocks.push_back(b);
  }
  return assemble_self_switch(std::move(blocks), schedule, num_classes, max_epochs);
}

}  // namespace mdl
