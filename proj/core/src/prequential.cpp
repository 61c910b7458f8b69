#include "mdl/prequential.hpp"

#include <cmath>
#include <sstream>

#include "mdl/dirichlet.hpp"
#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

Schedule::Schedule(std::vector<std::size_t> timesteps) : timesteps_(std::move(timesteps)) {
  if (timesteps_.size() < 2) {
    throw ConfigError("schedule needs a uniform prefix and at least one encoded block");
  }
  if (timesteps_.front() < 1) throw ConfigError("schedule must start at t0 >= 1");
  for (std::size_t i = 1; i < timesteps_.size(); ++i) {
    if (timesteps_[i] <= timesteps_[i - 1]) {
      throw ConfigError("schedule timesteps must be strictly increasing");
    }
  }
}

Schedule Schedule::every_step(std::size_t n) {
  std::vector<std::size_t> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = i + 1;
  return Schedule(std::move(ts));
}

Schedule default_schedule(std::size_t n, std::size_t start, double growth) {
  if (start < 1) throw ConfigError("schedule start must be >= 1");
  if (!(growth > 1.0)) throw ConfigError("schedule growth must be > 1");
  if (start >= n) {
    throw ConfigError("schedule start " + std::to_string(start) + " leaves nothing to encode for n = " +
                      std::to_string(n));
  }
  std::vector<std::size_t> ts;
  std::size_t t = start;
  while (t < n) {
    ts.push_back(t);
    const auto next = static_cast<std::size_t>(std::floor(static_cast<double>(t) * growth));
    t = std::max(next, t + 1);
  }
  ts.push_back(n);
  return Schedule(std::move(ts));
}

std::unique_ptr<ConditionalModel> UniformStrategy::fit(const LabeledDataset&, std::size_t,
                                                       std::uint64_t,
                                                       const ConditionalModel*) const {
  return std::make_unique<UniformModel>(num_classes_);
}

std::unique_ptr<ConditionalModel> DirichletStrategy::fit(const LabeledDataset& data,
                                                         std::size_t prefix, std::uint64_t,
                                                         const ConditionalModel*) const {
  auto model = std::make_unique<DirichletModel>(pseudocounts_);
  model->observe(data.labels(IndexRange{0, prefix}));
  return model;
}

std::string NetworkStrategy::name() const {
  std::ostringstream out;
  out << (spec_.is_linear() ? "linear" : "mlp");
  for (std::size_t i = 1; i + 1 < spec_.layer_widths.size(); ++i) {
    out << (i == 1 ? "-" : "x") << spec_.layer_widths[i];
  }
  return out.str();
}

MlpSpec NetworkStrategy::block_spec(std::uint64_t seed) const {
  MlpSpec spec = spec_;
  spec.seed = derive_seed(seed, "init");
  return spec;
}

TrainConfig NetworkStrategy::block_config(std::uint64_t seed) const {
  TrainConfig config = config_;
  config.seed = derive_seed(seed, "train");
  return config;
}

std::unique_ptr<ConditionalModel> NetworkStrategy::fit(const LabeledDataset& data,
                                                       std::size_t prefix, std::uint64_t seed,
                                                       const ConditionalModel* previous) const {
  const IndexRange range{0, prefix};
  if (warm_start_) {
    if (const auto* prev = dynamic_cast<const Mlp*>(previous)) {
      return std::make_unique<Mlp>(train_from(*prev, block_config(seed), data, range));
    }
  }
  return std::make_unique<Mlp>(train(block_spec(seed), block_config(seed), data, range));
}

std::uint64_t block_seed(std::uint64_t omega, std::size_t block) {
  return derive_seed(omega, "prequential-block", block);
}

namespace {

void check_schedule(const Schedule& schedule, std::size_t n) {
  if (schedule.n() != n) {
    throw ConfigError("schedule ends at " + std::to_string(schedule.n()) +
                      " but the dataset has " + std::to_string(n) + " samples");
  }
}

BlockResult encode_block(const ConditionalModel& model, const LabeledDataset& data,
                         const Schedule& schedule, std::size_t s) {
  BlockResult r;
  r.index = s;
  r.range = schedule.block(s);
  r.bits = log_loss_bits(model, data, r.range);
  r.per_sample_bits = r.bits / static_cast<double>(r.range.size());
  r.next_block_accuracy = accuracy(model, data, r.range);
  r.model_fingerprint = model.fingerprint();
  return r;
}

PrequentialRun assemble(std::vector<BlockResult> blocks, const Schedule& schedule, int k) {
  std::vector<CodelengthPart> parts;
  parts.push_back({"uniform prefix", uniform_codelength(schedule.prefix(), k)});
  for (const auto& b : blocks) parts.push_back({"block " + std::to_string(b.index), b.bits});
  return PrequentialRun{Codelength(std::move(parts)), std::move(blocks), schedule.prefix(), k};
}

std::unique_ptr<ConditionalModel> fit_block(const PredictionStrategy& strategy,
                                            const LabeledDataset& data, const Schedule& schedule,
                                            std::size_t s, std::uint64_t omega,
                                            const ConditionalModel* previous) {
  try {
    return strategy.fit(data, schedule.timesteps()[s], block_seed(omega, s), previous);
  } catch (const NumericalError& e) {
    throw NumericalError("training on [0, " + std::to_string(schedule.timesteps()[s]) +
                         ") failed: " + e.what());
  }
}

}  // namespace

PrequentialRun prequential_encode(const PredictionStrategy& strategy, const LabeledDataset& data,
                                  const Schedule& schedule, std::uint64_t omega) {
  check_schedule(schedule, data.size());
  std::vector<BlockResult> blocks;
  std::unique_ptr<ConditionalModel> previous;
  for (std::size_t s = 0; s < schedule.num_blocks(); ++s) {
    auto model = fit_block(strategy, data, schedule, s, omega, previous.get());
    blocks.push_back(encode_block(*model, data, schedule, s));
    previous = std::move(model);
  }
  return assemble(std::move(blocks), schedule, data.num_classes());
}

PrequentialRun prequential_decode(const PredictionStrategy& strategy,
                                  std::shared_ptr<const Matrix> inputs, int num_classes,
                                  std::span<const Label> message, const Schedule& schedule,
                                  std::uint64_t omega) {
  check_schedule(schedule, message.size());
  // Undecoded labels are unknown to Bob; a placeholder keeps the dataset valid.
  std::vector<Label> known(message.size(), 0);
  std::copy(message.begin(), message.begin() + static_cast<std::ptrdiff_t>(schedule.prefix()),
            known.begin());
  std::vector<BlockResult> blocks;
  std::unique_ptr<ConditionalModel> previous;
  for (std::size_t s = 0; s < schedule.num_blocks(); ++s) {
    const LabeledDataset before(inputs, known, num_classes);
    auto model = fit_block(strategy, before, schedule, s, omega, previous.get());
    const IndexRange r = schedule.block(s);
    std::copy(message.begin() + static_cast<std::ptrdiff_t>(r.begin),
              message.begin() + static_cast<std::ptrdiff_t>(r.end),
              known.begin() + static_cast<std::ptrdiff_t>(r.begin));
    const LabeledDataset after(inputs, known, num_classes);
    blocks.push_back(encode_block(*model, after, schedule, s));
    previous = std::move(model);
  }
  return assemble(std::move(blocks), schedule, num_classes);
}

VerificationReport compare_runs(const PrequentialRun& sender, const PrequentialRun& receiver) {
  VerificationReport report;
  auto fail = [&](const std::string& what) {
    report.ok = false;
    report.mismatches.push_back(what);
  };
  if (sender.blocks.size() != receiver.blocks.size()) {
    fail("block counts differ");
    return report;
  }
  for (std::size_t s = 0; s < sender.blocks.size(); ++s) {
    const auto& a = sender.blocks[s];
    const auto& b = receiver.blocks[s];
    if (a.model_fingerprint != b.model_fingerprint) {
      fail("block " + std::to_string(s) + ": model fingerprints differ");
    }
    if (a.bits != b.bits) fail("block " + std::to_string(s) + ": codelengths differ");
  }
  if (sender.code.total_bits() != receiver.code.total_bits()) fail("totals differ");
  return report;
}

std::vector<CurvePoint> cumulative_curves(const PrequentialRun& run) {
  const double log_k = std::log2(static_cast<double>(run.num_classes));
  std::vector<CurvePoint> rows;
  CompensatedSum cumulative;
  cumulative.add(uniform_codelength(run.prefix, run.num_classes));
  rows.push_back({run.prefix, 0.0, 0.0, cumulative.value(), 0.0, 1.0});
  for (const auto& b : run.blocks) {
    cumulative.add(b.bits);
    CurvePoint p;
    p.t = b.range.end;
    p.block_bits_per_sample = b.per_sample_bits;
    p.next_block_accuracy = b.next_block_accuracy;
    p.cumulative_bits = cumulative.value();
    const double uniform = static_cast<double>(p.t) * log_k;
    p.excess_over_uniform = p.cumulative_bits - uniform;
    p.ratio = p.cumulative_bits / uniform;
    rows.push_back(p);
  }
  return rows;
}

CatchUp catch_up_points(const PrequentialRun& run) {
  const double log_k = std::log2(static_cast<double>(run.num_classes));
  const auto curve = cumulative_curves(run);
  CatchUp out;
  for (std::size_t s = 0; s < run.blocks.size(); ++s) {
    if (!out.first_block_below_uniform && run.blocks[s].per_sample_bits < log_k) {
      out.first_block_below_uniform = s;
    }
    if (!out.first_block_ratio_below_one && curve[s + 1].ratio < 1.0) {
      out.first_block_ratio_below_one = s;
    }
  }
  return out;
}

}  // namespace mdl
