#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdl/data_io.hpp"
#include "mdl/dataset.hpp"
#include "mdl/mlp.hpp"
#include "mdl/training.hpp"

namespace mdl {

using Json = nlohmann::json;

enum class Scheme { uniform, two_part, subspace, variational, prequential, switch_code, self_switch };
std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

enum class SourceKind { idx, csv, synthetic };

struct DataSource {
  SourceKind kind = SourceKind::synthetic;
  // idx: directory holding train-/t10k- images and labels in the MNIST naming.
  std::filesystem::path idx_dir;
  // csv
  std::filesystem::path csv_path;
  std::string label_column = "label";
  // synthetic
  SyntheticSpec synthetic;
  /// Held-out share for sources without a separate test set.
  double test_fraction = 0.2;
  /// Keep only the first `max_train` training samples (0 keeps all).
  std::size_t max_train = 0;
  /// Replace training labels by fake ones.
  std::optional<LabelNoise> fake_labels;
};

enum class StrategyKind { network, dirichlet };

struct ExperimentConfig {
  std::string name;
  Scheme scheme = Scheme::prequential;
  DataSource data;

  StrategyKind strategy = StrategyKind::network;
  std::vector<std::size_t> hidden;  // empty = linear softmax
  Activation activation = Activation::relu;
  double dropout = 0.0;
  double dirichlet_alpha = 0.5;
  TrainConfig train;
  bool warm_start = false;

  // prequential, switch, self-switch
  std::size_t schedule_start = 64;
  double schedule_growth = 2.0;
  std::vector<std::size_t> timesteps;  // explicit schedule overrides start/growth
  std::vector<std::vector<std::size_t>> switch_pool;  // hidden widths per pool member
  std::size_t max_epochs = 0;  // self-switch; 0 uses train.epochs
  bool verify = true;

  // two-part, subspace
  double bits_per_param = 32.0;
  std::size_t subspace_dim = 0;
  unsigned quant_bits = 32;
  double quant_range = 1.0;

  // variational
  double prior_sigma = 0.05;
  std::size_t mc_samples = 64;

  std::uint64_t seed = 0;       // omega: every protocol random stream
  std::uint64_t data_seed = 0;  // synthetic generation, splits and fake labels
  std::filesystem::path out_dir = ".";

  /// Throws ConfigError when a scheme-required field is missing or invalid.
  void validate() const;
  MlpSpec model_spec(std::size_t input_dim, int num_classes,
                     const std::vector<std::size_t>& widths) const;
};

Json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const Json& j);

struct LoadedData {
  LabeledDataset train;
  std::optional<LabeledDataset> test;
  std::string description;
};

LoadedData load_data(const DataSource& source, std::uint64_t data_seed);

/// Executes one scheme end to end and returns its manifest. Errors propagate
/// as the library's exception types with the failing stage named.
Json run(const ExperimentConfig& config);

/// Like run(), but never throws a library error: the manifest carries
/// "status": "failed", the stage, the message and the exit code instead.
Json run_captured(const ExperimentConfig& config);

/// Runs every config (up to `jobs` at a time) and returns their manifests in order.
std::vector<Json> compare(const std::vector<ExperimentConfig>& configs, std::size_t jobs = 1);

/// One CSV row per (k, b): k, b, param_bits, data_bits, total, ratio, train_acc, test_acc.
std::string sweep_subspace(const ExperimentConfig& base, const std::vector<std::size_t>& ks,
                           const std::vector<unsigned>& bs, std::size_t jobs = 1);

/// Receiver-only pass for a prequential or self-switch manifest: rebuilds
/// every block model from the labels and the seed in the manifest and
/// compares fingerprints, block bits and the total bit for bit.
struct VerifyResult {
  bool ok = true;
  std::vector<std::string> mismatches;
};
VerifyResult verify_manifest(const Json& manifest);

/// Exit code for an exception escaping a run: 2 config, 3 numerical, 4 verification.
int exit_code_for(const std::exception& e);

}  // namespace mdl
