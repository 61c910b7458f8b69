#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdl/codelength.hpp"
#include "mdl/prequential.hpp"
#include "mdl/switch.hpp"

namespace mdl {

using Json = nlohmann::json;

std::string library_version();

Json to_json(const Codelength& c);
Json blocks_to_json(const PrequentialRun& run);
Json curve_to_json(const std::vector<CurvePoint>& curve);

/// Rebuilds the cumulative curve from a manifest's block table.
std::vector<CurvePoint> curve_from_manifest(const Json& manifest);

/// t, block_bits_per_sample, next_block_accuracy, cumulative_bits, excess_over_uniform, ratio.
std::string curves_csv(const std::vector<CurvePoint>& curve);

/// Per-block bits of several manifests over the same schedule, one row each,
/// so a switch code can be searched without retraining.
BlockBits block_bits_from_manifests(const std::vector<Json>& manifests);

/// Method, Codelength (kbits), Comp. Ratio, Test Acc: one row per manifest.
std::string comparison_csv(const std::vector<Json>& manifests);
std::string comparison_table(const std::vector<Json>& manifests);

/// Bit-accounting checks on a manifest: breakdown re-sums to the total,
/// ratio = total / (n log2 K), and the curve identities, all to `rel_tol`.
/// Returns the violations (empty when the manifest is consistent).
std::vector<std::string> audit_manifest(const Json& manifest, double rel_tol = 1e-6);

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

}  // namespace mdl
