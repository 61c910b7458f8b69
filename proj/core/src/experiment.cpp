#include "mdl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

#include "mdl/codelength.hpp"
#include "mdl/errors.hpp"
#include "mdl/prequential.hpp"
#include "mdl/report.hpp"
#include "mdl/rng.hpp"
#include "mdl/subspace.hpp"
#include "mdl/switch.hpp"
#include "mdl/variational.hpp"

namespace mdl {

namespace {

constexpr int kManifestFormat = 1;

const char* const kSchemeNames[] = {"uniform",     "two-part",    "subspace",   "variational",
                                    "prequential", "switch",      "self-switch"};

std::string fake_name(const std::optional<LabelNoise>& f) {
  if (!f) return "none";
  return *f == LabelNoise::permutation ? "permutation" : "iid";
}

std::optional<LabelNoise> parse_fake(const std::string& s) {
  if (s == "none") return std::nullopt;
  if (s == "permutation") return LabelNoise::permutation;
  if (s == "iid") return LabelNoise::iid_uniform;
  throw ConfigError("unknown fake-label mode '" + s + "' (expected none, permutation or iid)");
}

// Re-raises a library error with the stage prepended, keeping its type.
template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(stage + ": " + e.what());
  } catch (const VerificationError& e) {
    throw VerificationError(stage + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(stage + ": " + e.what());
  }
}

std::unique_ptr<PredictionStrategy> make_strategy(const ExperimentConfig& c, const LabeledDataset& d,
                                                  const std::vector<std::size_t>& widths) {
  if (c.strategy == StrategyKind::dirichlet) {
    return std::make_unique<DirichletStrategy>(
        std::vector<double>(static_cast<std::size_t>(d.num_classes()), c.dirichlet_alpha));
  }
  return std::make_unique<NetworkStrategy>(c.model_spec(d.input_dim(), d.num_classes(), widths),
                                           c.train, c.warm_start);
}

NetworkStrategy network_strategy(const ExperimentConfig& c, const LabeledDataset& d) {
  return NetworkStrategy(c.model_spec(d.input_dim(), d.num_classes(), c.hidden), c.train,
                         c.warm_start);
}

Schedule make_schedule(const ExperimentConfig& c, std::size_t n) {
  if (!c.timesteps.empty()) {
    Schedule s(c.timesteps);
    if (s.n() != n) {
      throw ConfigError("explicit schedule ends at " + std::to_string(s.n()) + ", dataset has " +
                        std::to_string(n) + " samples");
    }
    return s;
  }
  return default_schedule(n, c.schedule_start, c.schedule_growth);
}

std::size_t self_switch_epochs(const ExperimentConfig& c) {
  return c.max_epochs == 0 ? c.train.epochs : c.max_epochs;
}

Json test_accuracy_json(const ConditionalModel& model, const LoadedData& data) {
  if (!data.test) return nullptr;
  return accuracy(model, *data.test, data.test->all());
}

void record_code(Json& m, const Codelength& code, const LabeledDataset& train) {
  const double uniform = uniform_codelength(train.size(), train.num_classes());
  m["codelength"] = to_json(code);
  m["uniform_bits"] = uniform;
  m["ratio"] = code.total_bits() / uniform;
  m["mutual_info_gain_bits_per_sample"] =
      mutual_info_gain(code, train.size(), train.num_classes());
}

void record_prequential(Json& m, const PrequentialRun& run) {
  m["prefix"] = run.prefix;
  m["blocks"] = blocks_to_json(run);
  m["curve"] = curve_to_json(cumulative_curves(run));
  const CatchUp cu = catch_up_points(run);
  m["catch_up"] = {
      {"first_block_below_uniform",
       cu.first_block_below_uniform ? Json(*cu.first_block_below_uniform) : Json(nullptr)},
      {"first_block_ratio_below_one",
       cu.first_block_ratio_below_one ? Json(*cu.first_block_ratio_below_one) : Json(nullptr)}};
}

void require_ok(const VerificationReport& report) {
  if (report.ok) return;
  std::string msg = "receiver pass disagrees with the sender";
  for (const auto& s : report.mismatches) msg += "; " + s;
  throw VerificationError(msg);
}

void run_uniform(Json& m, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  record_code(m, Codelength({{"uniform", uniform_codelength(d.size(), d.num_classes())}}), d);
  m["test_accuracy"] = test_accuracy_json(UniformModel(d.num_classes()), data);
}

void run_two_part(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  MlpSpec spec = c.model_spec(d.input_dim(), d.num_classes(), c.hidden);
  spec.seed = derive_seed(c.seed, "two-part-init");
  TrainConfig train = c.train;
  train.seed = derive_seed(c.seed, "two-part-train");
  const Mlp model = in_stage("training", [&] { return mdl::train(spec, train, d, d.all()); });
  const Codelength code = in_stage("encoding", [&] {
    return two_part_codelength(model, model.num_params(), d, d.all(), c.bits_per_param);
  });
  record_code(m, code, d);
  m["num_params"] = model.num_params();
  m["model_fingerprint"] = hex64(model.fingerprint());
  m["train_accuracy"] = accuracy(model, d, d.all());
  m["test_accuracy"] = test_accuracy_json(model, data);
}

void run_subspace(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  const MlpSpec family = c.model_spec(d.input_dim(), d.num_classes(), c.hidden);
  const AffineSubspace sub = in_stage("subspace", [&] {
    return AffineSubspace::random(family, c.subspace_dim, derive_seed(c.seed, "subspace"));
  });
  TrainConfig train = c.train;
  train.seed = derive_seed(c.seed, "subspace-train");
  const auto phi =
      in_stage("training", [&] { return train_in_subspace(family, sub, train, d, d.all()); });
  const QuantizationSpec quant{c.quant_bits, c.quant_range};
  const SubspaceCode code =
      in_stage("encoding", [&] { return subspace_codelength(family, sub, phi, quant, d, d.all()); });
  record_code(m, code.code, d);
  m["subspace"] = {{"k", sub.dim()},
                   {"d", sub.full_dim()},
                   {"bits_per_coordinate", quant.bits},
                   {"parameter_cost", "k * bits_per_coordinate, bits_per_coordinate = log2(2 range / cell width)"},
                   {"range", quant.range},
                   {"clamped_coordinates", code.clamped}};
  m["model_fingerprint"] = hex64(code.model.fingerprint());
  m["train_accuracy"] = accuracy(code.model, d, d.all());
  m["test_accuracy"] = test_accuracy_json(code.model, data);
}

void run_variational(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  MlpSpec family = c.model_spec(d.input_dim(), d.num_classes(), c.hidden);
  family.seed = derive_seed(c.seed, "variational-init");
  family.dropout_prob = 0.0;
  const GaussianPrior prior{c.prior_sigma};
  TrainConfig train = c.train;
  train.seed = derive_seed(c.seed, "variational-train");
  const VariationalTraining fit =
      in_stage("training", [&] { return train_variational(family, prior, d, d.all(), train); });
  const VariationalEstimate est = in_stage("encoding", [&] {
    return variational_objective(fit.posterior, prior, family, d, d.all(), c.mc_samples,
                                 derive_seed(c.seed, "variational-eval"));
  });
  record_code(m, est.codelength(), d);
  const Mlp mean_net(family, std::vector<double>(fit.posterior.mu().begin(), fit.posterior.mu().end()));
  m["variational"] = {{"kl_bits", est.kl_bits},
                      {"data_bits", est.data_bits},
                      {"data_bits_stderr", est.data_bits_stderr},
                      {"mc_samples", est.samples},
                      {"prior_sigma", prior.sigma0},
                      {"best_epoch", fit.best_epoch},
                      {"epoch_objectives", fit.epoch_objectives}};
  const Mlp sampled = sample_network(fit.posterior, family, derive_seed(c.seed, "variational-predict"));
  m["train_accuracy"] = accuracy(sampled, d, d.all());
  m["test_accuracy"] = test_accuracy_json(sampled, data);
  m["test_accuracy_at_mean"] = test_accuracy_json(mean_net, data);
}

void run_prequential(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  const Schedule schedule = in_stage("schedule", [&] { return make_schedule(c, d.size()); });
  const auto strategy = make_strategy(c, d, c.hidden);
  m["strategy"] = strategy->name();
  const PrequentialRun run =
      in_stage("encoding", [&] { return prequential_encode(*strategy, d, schedule, c.seed); });
  record_code(m, run.code, d);
  record_prequential(m, run);
  if (c.verify) {
    in_stage("verification", [&] {
      const PrequentialRun bob = prequential_decode(*strategy, d.shared_inputs(), d.num_classes(),
                                                    d.labels(), schedule, c.seed);
      require_ok(compare_runs(run, bob));
      return 0;
    });
  }
  m["verification"] = {{"performed", c.verify}, {"ok", true}};
  const auto final_model = in_stage("final model", [&] {
    return strategy->fit(d, d.size(), block_seed(c.seed, schedule.num_blocks()), nullptr);
  });
  m["final_model_fingerprint"] = hex64(final_model->fingerprint());
  m["information_in_parameters_bits"] =
      run.code.total_bits() - log_loss_bits(*final_model, d, d.all());
  m["train_accuracy"] = accuracy(*final_model, d, d.all());
  m["test_accuracy"] = test_accuracy_json(*final_model, data);
}

void run_switch(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  const Schedule schedule = in_stage("schedule", [&] { return make_schedule(c, d.size()); });
  std::vector<PrequentialRun> runs;
  std::vector<std::unique_ptr<PredictionStrategy>> pool;
  Json members = Json::array();
  for (const auto& widths : c.switch_pool) {
    pool.push_back(make_strategy(c, d, widths));
    const auto& strategy = *pool.back();
    runs.push_back(in_stage("encoding " + strategy.name(),
                            [&] { return prequential_encode(strategy, d, schedule, c.seed); }));
    if (c.verify) {
      in_stage("verification " + strategy.name(), [&] {
        const PrequentialRun bob = prequential_decode(strategy, d.shared_inputs(), d.num_classes(),
                                                      d.labels(), schedule, c.seed);
        require_ok(compare_runs(runs.back(), bob));
        return 0;
      });
    }
    members.push_back({{"strategy", strategy.name()}, {"total_bits", runs.back().code.total_bits()}});
  }
  const BlockBits bits = block_bits_matrix(runs);
  const SwitchPrior prior = SwitchPrior::standard(schedule.num_blocks(), pool.size());
  const SwitchSolution best = in_stage("switch search", [&] { return optimal_switch(bits, prior); });
  const auto active = best.sequence.active_models(schedule.num_blocks());
  PrequentialRun combined;
  combined.prefix = schedule.prefix();
  combined.num_classes = d.num_classes();
  for (std::size_t b = 0; b < active.size(); ++b) combined.blocks.push_back(runs[active[b]].blocks[b]);
  std::vector<CodelengthPart> parts;
  parts.push_back({"uniform prefix", uniform_codelength(schedule.prefix(), d.num_classes())});
  parts.push_back({"switch sequence", best.code.breakdown()[0].bits});
  for (const auto& b : combined.blocks) parts.push_back({"block " + std::to_string(b.index), b.bits});
  combined.code = Codelength(std::move(parts));
  record_code(m, combined.code, d);
  record_prequential(m, combined);
  Json segs = Json::array();
  for (const auto& s : best.sequence.segments()) {
    segs.push_back({{"start_block", s.start_block}, {"model", s.model}});
  }
  m["switch"] = {{"pool", members},
                 {"segments", segs},
                 {"bits_per_switch_point", prior.bits_per_switch_point},
                 {"bits_per_model_index", prior.bits_per_model_index}};
  m["verification"] = {{"performed", c.verify}, {"ok", true}};
  const std::size_t last = active.back();
  const auto final_model = in_stage("final model", [&] {
    return pool[last]->fit(d, d.size(), block_seed(c.seed, schedule.num_blocks()), nullptr);
  });
  m["train_accuracy"] = accuracy(*final_model, d, d.all());
  m["test_accuracy"] = test_accuracy_json(*final_model, data);
}

void run_self_switch(Json& m, const ExperimentConfig& c, const LoadedData& data) {
  const LabeledDataset& d = data.train;
  const Schedule schedule = in_stage("schedule", [&] { return make_schedule(c, d.size()); });
  const NetworkStrategy strategy = network_strategy(c, d);
  const std::size_t max_epochs = self_switch_epochs(c);
  m["strategy"] = strategy.name();
  const SelfSwitchRun run = in_stage("encoding", [&] {
    return self_switch_encode(strategy, d, schedule, max_epochs, c.seed);
  });
  record_code(m, run.run.code, d);
  record_prequential(m, run.run);
  m["self_switch"] = {{"max_epochs", max_epochs},
                      {"chosen_epochs", run.chosen_epochs},
                      {"epoch_bits", run.epoch_bits}};
  if (c.verify) {
    in_stage("verification", [&] {
      const PrequentialRun bob =
          self_switch_decode(strategy, d.shared_inputs(), d.num_classes(), d.labels(), schedule,
                             run.chosen_epochs, max_epochs, c.seed);
      require_ok(compare_runs(run.run, bob));
      return 0;
    });
  }
  m["verification"] = {{"performed", c.verify}, {"ok", true}};
  const auto final_model = in_stage("final model", [&] {
    const std::uint64_t seed = block_seed(c.seed, schedule.num_blocks());
    TrainConfig config = strategy.block_config(seed);
    config.epochs = run.chosen_epochs.back();
    return mdl::train(strategy.block_spec(seed), config, d, d.all());
  });
  m["train_accuracy"] = accuracy(final_model, d, d.all());
  m["test_accuracy"] = test_accuracy_json(final_model, data);
}

void run_into(const ExperimentConfig& c, Json& m) {
  const auto started = std::chrono::steady_clock::now();
  m["format_version"] = kManifestFormat;
  m["library_version"] = library_version();
  m["status"] = "running";
  m["config"] = to_json(c);
  m["scheme"] = to_string(c.scheme);
  in_stage("config", [&] {
    c.validate();
    return 0;
  });
  const LoadedData data = in_stage("data", [&] { return load_data(c.data, c.data_seed); });
  m["dataset"] = {{"description", data.description},
                  {"n", data.train.size()},
                  {"n_test", data.test ? data.test->size() : 0},
                  {"input_dim", data.train.input_dim()},
                  {"num_classes", data.train.num_classes()}};
  switch (c.scheme) {
    case Scheme::uniform: run_uniform(m, data); break;
    case Scheme::two_part: run_two_part(m, c, data); break;
    case Scheme::subspace: run_subspace(m, c, data); break;
    case Scheme::variational: run_variational(m, c, data); break;
    case Scheme::prequential: run_prequential(m, c, data); break;
    case Scheme::switch_code: run_switch(m, c, data); break;
    case Scheme::self_switch: run_self_switch(m, c, data); break;
  }
  // Totals leave out the integer-rounding bit and the few numbers (seed,
  // hyperparameters) the receiver needs before decoding.
  m["accounting"] = {{"rounding_bit_included", false}, {"hyperparameter_bits_included", false}};
  m["status"] = "ok";
  m["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

}  // namespace

std::string to_string(Scheme s) { return kSchemeNames[static_cast<int>(s)]; }

Scheme parse_scheme(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kSchemeNames[i]) return static_cast<Scheme>(i);
  }
  throw ConfigError("unknown scheme '" + name +
                    "' (expected uniform, two-part, subspace, variational, prequential, switch or "
                    "self-switch)");
}

void ExperimentConfig::validate() const {
  train.validate();
  if (data.kind == SourceKind::synthetic) data.synthetic.validate();
  if (!(data.test_fraction >= 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("test fraction must be in [0, 1)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (strategy == StrategyKind::dirichlet && scheme != Scheme::prequential) {
    throw ConfigError("the dirichlet strategy is only available for the prequential scheme");
  }
  if (!(dirichlet_alpha > 0.0)) throw ConfigError("dirichlet alpha must be positive");
  switch (scheme) {
    case Scheme::subspace:
      if (quant_bits < 1 || quant_bits > 64) throw ConfigError("subspace requires b in [1, 64]");
      if (!(quant_range > 0.0)) throw ConfigError("subspace requires a positive grid range");
      break;
    case Scheme::two_part:
      if (!(bits_per_param >= 0.0)) throw ConfigError("bits per parameter must be non-negative");
      break;
    case Scheme::variational:
      if (!(prior_sigma > 0.0)) throw ConfigError("prior sigma must be positive");
      if (mc_samples == 0) throw ConfigError("variational requires at least one Monte-Carlo sample");
      break;
    case Scheme::switch_code:
      if (switch_pool.empty()) throw ConfigError("switch requires a non-empty model pool");
      break;
    case Scheme::self_switch:
      if (self_switch_epochs(*this) == 0) throw ConfigError("self-switch requires max_epochs >= 1");
      break;
    default:
      break;
  }
}

MlpSpec ExperimentConfig::model_spec(std::size_t input_dim, int num_classes,
                                     const std::vector<std::size_t>& widths) const {
  MlpSpec spec = widths.empty() ? MlpSpec::linear(input_dim, num_classes)
                                : MlpSpec::mlp(input_dim, widths, num_classes, activation, dropout);
  spec.validate();
  return spec;
}

Json to_json(const ExperimentConfig& c) {
  Json data = {{"source", c.data.kind == SourceKind::idx   ? "idx"
                          : c.data.kind == SourceKind::csv ? "csv"
                                                           : "synthetic"},
               {"test_fraction", c.data.test_fraction},
               {"max_train", c.data.max_train},
               {"fake_labels", fake_name(c.data.fake_labels)}};
  if (c.data.kind == SourceKind::idx) data["idx_dir"] = c.data.idx_dir.string();
  if (c.data.kind == SourceKind::csv) {
    data["csv_path"] = c.data.csv_path.string();
    data["label_column"] = c.data.label_column;
  }
  if (c.data.kind == SourceKind::synthetic) {
    const auto& s = c.data.synthetic;
    data["synthetic"] = {{"generator", to_string(s.generator)},
                         {"n", s.n},
                         {"input_dim", s.input_dim},
                         {"num_classes", s.num_classes},
                         {"separation", s.separation},
                         {"teacher_scale", s.teacher_scale}};
  }
  return {{"name", c.name},
          {"scheme", to_string(c.scheme)},
          {"data", data},
          {"strategy", c.strategy == StrategyKind::network ? "network" : "dirichlet"},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"dropout", c.dropout},
          {"dirichlet_alpha", c.dirichlet_alpha},
          {"optimizer", to_string(c.train.optimizer)},
          {"learning_rate", c.train.learning_rate},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"warm_start", c.warm_start},
          {"schedule_start", c.schedule_start},
          {"schedule_growth", c.schedule_growth},
          {"timesteps", c.timesteps},
          {"switch_pool", c.switch_pool},
          {"max_epochs", c.max_epochs},
          {"verify", c.verify},
          {"bits_per_param", c.bits_per_param},
          {"subspace_dim", c.subspace_dim},
          {"quant_bits", c.quant_bits},
          {"quant_range", c.quant_range},
          {"prior_sigma", c.prior_sigma},
          {"mc_samples", c.mc_samples},
          {"seed", c.seed},
          {"data_seed", c.data_seed},
          {"out_dir", c.out_dir.string()}};
}

ExperimentConfig config_from_json(const Json& j) {
  try {
    ExperimentConfig c;
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("name", c.name);
    if (!j.contains("scheme")) throw ConfigError("config has no scheme");
    c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (c.scheme == Scheme::subspace && !(j.contains("subspace_dim") && j.contains("quant_bits"))) {
      throw ConfigError("subspace requires subspace_dim (k) and quant_bits (b)");
    }
    if (j.contains("data")) {
      const Json& d = j.at("data");
      const std::string source = d.value("source", "synthetic");
      if (source == "idx") {
        c.data.kind = SourceKind::idx;
        c.data.idx_dir = d.at("idx_dir").get<std::string>();
      } else if (source == "csv") {
        c.data.kind = SourceKind::csv;
        c.data.csv_path = d.at("csv_path").get<std::string>();
        c.data.label_column = d.value("label_column", std::string("label"));
      } else if (source == "synthetic") {
        c.data.kind = SourceKind::synthetic;
        if (d.contains("synthetic")) {
          const Json& s = d.at("synthetic");
          auto& spec = c.data.synthetic;
          spec.generator = parse_generator(s.value("generator", std::string("gaussian-blobs")));
          spec.n = s.value("n", spec.n);
          spec.input_dim = s.value("input_dim", spec.input_dim);
          spec.num_classes = s.value("num_classes", spec.num_classes);
          spec.separation = s.value("separation", spec.separation);
          spec.teacher_scale = s.value("teacher_scale", spec.teacher_scale);
        }
      } else {
        throw ConfigError("unknown data source '" + source + "'");
      }
      c.data.test_fraction = d.value("test_fraction", c.data.test_fraction);
      c.data.max_train = d.value("max_train", c.data.max_train);
      c.data.fake_labels = parse_fake(d.value("fake_labels", std::string("none")));
    }
    if (j.contains("strategy")) {
      const auto s = j.at("strategy").get<std::string>();
      if (s == "network") c.strategy = StrategyKind::network;
      else if (s == "dirichlet") c.strategy = StrategyKind::dirichlet;
      else throw ConfigError("unknown strategy '" + s + "' (expected network or dirichlet)");
    }
    get("hidden", c.hidden);
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    get("dropout", c.dropout);
    get("dirichlet_alpha", c.dirichlet_alpha);
    if (j.contains("optimizer")) c.train.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    get("learning_rate", c.train.learning_rate);
    get("batch_size", c.train.batch_size);
    get("epochs", c.train.epochs);
    get("warm_start", c.warm_start);
    get("schedule_start", c.schedule_start);
    get("schedule_growth", c.schedule_growth);
    get("timesteps", c.timesteps);
    get("switch_pool", c.switch_pool);
    get("max_epochs", c.max_epochs);
    get("verify", c.verify);
    get("bits_per_param", c.bits_per_param);
    get("subspace_dim", c.subspace_dim);
    get("quant_bits", c.quant_bits);
    get("quant_range", c.quant_range);
    get("prior_sigma", c.prior_sigma);
    get("mc_samples", c.mc_samples);
    get("seed", c.seed);
    get("data_seed", c.data_seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

LoadedData load_data(const DataSource& source, std::uint64_t data_seed) {
  std::optional<LabeledDataset> train;
  std::optional<LabeledDataset> test;
  std::string description;
  auto split_off_test = [&](const LabeledDataset& all) {
    if (source.test_fraction > 0.0) {
      auto parts = split(all, {1.0 - source.test_fraction, source.test_fraction}, data_seed);
      train = std::move(parts[0]);
      test = std::move(parts[1]);
    } else {
      train = all;
    }
  };
  switch (source.kind) {
    case SourceKind::idx: {
      const auto& dir = source.idx_dir;
      train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
      if (std::filesystem::exists(dir / "t10k-images-idx3-ubyte")) {
        test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
      }
      description = "idx:" + dir.string();
      break;
    }
    case SourceKind::csv:
      split_off_test(load_csv(source.csv_path, source.label_column));
      description = "csv:" + source.csv_path.string();
      break;
    case SourceKind::synthetic: {
      SyntheticSpec spec = source.synthetic;
      spec.seed = data_seed;
      split_off_test(generate(spec).data);
      description = to_string(spec.generator);
      break;
    }
  }
  if (source.max_train > 0 && source.max_train < train->size()) {
    train = train->slice({0, source.max_train});
    description += " first " + std::to_string(source.max_train);
  }
  if (source.fake_labels) {
    train = shuffle_labels(*train, data_seed, *source.fake_labels);
    description += " fake labels (" + fake_name(source.fake_labels) + ")";
  }
  return {std::move(*train), std::move(test), description};
}

Json run(const ExperimentConfig& config) {
  Json m;
  run_into(config, m);
  return m;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const VerificationError*>(&e)) return 4;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e)) return 2;
  return 1;
}

Json run_captured(const ExperimentConfig& config) {
  Json m;
  try {
    run_into(config, m);
  } catch (const Error& e) {
    m["status"] = "failed";
    const std::string what = e.what();
    const auto colon = what.find(": ");
    m["failure"] = {{"stage", colon == std::string::npos ? "unknown" : what.substr(0, colon)},
                    {"message", what},
                    {"exit_code", exit_code_for(e)}};
  }
  return m;
}

std::vector<Json> compare(const std::vector<ExperimentConfig>& configs, std::size_t jobs) {
  std::vector<Json> out(configs.size());
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t start = 0; start < configs.size(); start += jobs) {
    const std::size_t stop = std::min(configs.size(), start + jobs);
    if (stop - start == 1) {
      out[start] = run_captured(configs[start]);
      continue;
    }
    std::vector<std::future<Json>> pending;
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(std::launch::async, [&configs, i] { return run_captured(configs[i]); }));
    }
    for (std::size_t i = start; i < stop; ++i) out[i] = pending[i - start].get();
  }
  return out;
}

std::string sweep_subspace(const ExperimentConfig& base, const std::vector<std::size_t>& ks,
                           const std::vector<unsigned>& bs, std::size_t jobs) {
  base.validate();
  const LoadedData data = load_data(base.data, base.data_seed);
  const LabeledDataset& d = data.train;
  const MlpSpec family = base.model_spec(d.input_dim(), d.num_classes(), base.hidden);
  const double uniform = uniform_codelength(d.size(), d.num_classes());
  TrainConfig train = base.train;
  train.seed = derive_seed(base.seed, "subspace-train");

  auto rows_for_k = [&](std::size_t k) {
    std::ostringstream rows;
    rows.precision(17);
    const AffineSubspace sub = AffineSubspace::random(family, k, derive_seed(base.seed, "subspace"));
    const auto phi = train_in_subspace(family, sub, train, d, d.all());
    for (unsigned b : bs) {
      const SubspaceCode code = subspace_codelength(family, sub, phi, {b, base.quant_range}, d, d.all());
      const double param_bits = code.code.bits_with_prefix("parameters");
      const double data_bits = code.code.bits_with_prefix("data");
      rows << k << ',' << b << ',' << param_bits << ',' << data_bits << ','
           << code.code.total_bits() << ',' << code.code.total_bits() / uniform << ','
           << accuracy(code.model, d, d.all()) << ',';
      if (data.test) rows << accuracy(code.model, *data.test, data.test->all());
      rows << '\n';
    }
    return rows.str();
  };

  std::vector<std::string> chunks(ks.size());
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t start = 0; start < ks.size(); start += jobs) {
    const std::size_t stop = std::min(ks.size(), start + jobs);
    std::vector<std::future<std::string>> pending;
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async,
                                   rows_for_k, ks[i]));
    }
    for (std::size_t i = start; i < stop; ++i) chunks[i] = pending[i - start].get();
  }
  std::string out = "k,b,param_bits,data_bits,total,ratio,train_acc,test_acc\n";
  for (const auto& c : chunks) out += c;
  return out;
}

VerifyResult verify_manifest(const Json& manifest) {
  const ExperimentConfig c = config_from_json(manifest.at("config"));
  if (c.scheme != Scheme::prequential && c.scheme != Scheme::self_switch) {
    throw ConfigError("verify needs a prequential or self-switch manifest");
  }
  if (manifest.value("status", std::string()) != "ok") {
    throw ConfigError("manifest did not complete; nothing to verify");
  }
  const LoadedData data = load_data(c.data, c.data_seed);
  const LabeledDataset& d = data.train;
  const Schedule schedule = make_schedule(c, d.size());
  PrequentialRun bob;
  if (c.scheme == Scheme::prequential) {
    const auto strategy = make_strategy(c, d, c.hidden);
    bob = prequential_decode(*strategy, d.shared_inputs(), d.num_classes(), d.labels(), schedule,
                             c.seed);
  } else {
    const auto chosen =
        manifest.at("self_switch").at("chosen_epochs").get<std::vector<std::size_t>>();
    bob = self_switch_decode(network_strategy(c, d), d.shared_inputs(), d.num_classes(),
                             d.labels(), schedule, chosen, self_switch_epochs(c), c.seed);
  }
  VerifyResult result;
  const Json& blocks = manifest.at("blocks");
  if (blocks.size() != bob.blocks.size()) {
    result.ok = false;
    result.mismatches.push_back("block count differs");
    return result;
  }
  for (std::size_t s = 0; s < bob.blocks.size(); ++s) {
    const Json& a = blocks[s];
    const BlockResult& b = bob.blocks[s];
    if (parse_hex64(a.at("model_fingerprint").get<std::string>()) != b.model_fingerprint) {
      result.ok = false;
      result.mismatches.push_back("block " + std::to_string(s) + ": model fingerprint differs");
    }
    if (a.at("bits").get<double>() != b.bits) {
      result.ok = false;
      result.mismatches.push_back("block " + std::to_string(s) + ": codelength differs");
    }
  }
  if (manifest.at("codelength").at("total_bits").get<double>() != bob.code.total_bits()) {
    result.ok = false;
    result.mismatches.push_back("total codelength differs");
  }
  return result;
}

}  // namespace mdl
