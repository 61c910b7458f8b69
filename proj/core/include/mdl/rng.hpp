#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mdl {

/// Seeded pseudo-random stream shared by sender and receiver.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// The distributions are implemented here rather than taken from <random>
/// because the standard library distributions are implementation-defined,
/// and the coding protocol needs the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n).
  std::size_t index(std::size_t n);

  /// Standard normal (Box-Muller, second variate cached).
  double normal();

  void shuffle(std::span<std::size_t> values);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Derives an independent child seed from a base seed, a stream tag and an index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// 64-bit FNV-1a over raw bytes; used to fingerprint parameter vectors.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fingerprint_doubles(std::span<const double> values);

std::vector<std::size_t> iota_indices(std::size_t n);

}  // namespace mdl
