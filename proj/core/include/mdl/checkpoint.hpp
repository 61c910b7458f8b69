#pragma once

#include <filesystem>

#include "mdl/mlp.hpp"
#include "mdl/variational.hpp"

namespace mdl {

// Binary container, little-endian:
//   magic "MDLCKPT\0" | u32 version | u32 kind (1 = network, 2 = posterior)
//   u32 width count | u64 widths... | u32 activation | f64 dropout | u64 seed
//   kind 1: u64 count | f64 params[count]
//   kind 2: f64 sigma0 | u64 count | f64 mu[count] | f64 rho[count]

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Mlp& model);
Mlp load_network_checkpoint(const std::filesystem::path& path);

struct PosteriorCheckpoint {
  MlpSpec family;
  GaussianPrior prior;
  MeanFieldPosterior posterior;
};

void save_checkpoint(const std::filesystem::path& path, const MlpSpec& family,
                     const GaussianPrior& prior, const MeanFieldPosterior& posterior);
PosteriorCheckpoint load_posterior_checkpoint(const std::filesystem::path& path);

}  // namespace mdl
