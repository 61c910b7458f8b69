#include "mdl/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "mdl/errors.hpp"

namespace mdl {

namespace {

bool close(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string fmt(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

std::string library_version() { return MDL_VERSION_STRING; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw ConfigError("bad fingerprint '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad fingerprint '" + s + "'");
  }
}

Json to_json(const Codelength& c) {
  Json parts = Json::array();
  for (const auto& p : c.breakdown()) parts.push_back({{"label", p.label}, {"bits", p.bits}});
  return {{"total_bits", c.total_bits()}, {"breakdown", parts}};
}

Json blocks_to_json(const PrequentialRun& run) {
  Json out = Json::array();
  for (const auto& b : run.blocks) {
    out.push_back({{"index", b.index},
                   {"begin", b.range.begin},
                   {"end", b.range.end},
                   {"bits", b.bits},
                   {"per_sample_bits", b.per_sample_bits},
                   {"next_block_accuracy", b.next_block_accuracy},
                   {"model_fingerprint", hex64(b.model_fingerprint)}});
  }
  return out;
}

Json curve_to_json(const std::vector<CurvePoint>& curve) {
  Json out = Json::array();
  for (const auto& p : curve) {
    out.push_back({{"t", p.t},
                   {"block_bits_per_sample", p.block_bits_per_sample},
                   {"next_block_accuracy", p.next_block_accuracy},
                   {"cumulative_bits", p.cumulative_bits},
                   {"excess_over_uniform", p.excess_over_uniform},
                   {"ratio", p.ratio}});
  }
  return out;
}

std::vector<CurvePoint> curve_from_manifest(const Json& manifest) {
  if (!manifest.contains("blocks")) throw ConfigError("manifest has no block table");
  PrequentialRun run;
  run.prefix = manifest.at("prefix").get<std::size_t>();
  run.num_classes = manifest.at("dataset").at("num_classes").get<int>();
  for (const auto& b : manifest.at("blocks")) {
    BlockResult r;
    r.index = b.at("index").get<std::size_t>();
    r.range = {b.at("begin").get<std::size_t>(), b.at("end").get<std::size_t>()};
    r.bits = b.at("bits").get<double>();
    r.per_sample_bits = b.at("per_sample_bits").get<double>();
    r.next_block_accuracy = b.at("next_block_accuracy").get<double>();
    run.blocks.push_back(r);
  }
  return cumulative_curves(run);
}

BlockBits block_bits_from_manifests(const std::vector<Json>& manifests) {
  if (manifests.empty()) throw ConfigError("no manifests given");
  const Json& first = manifests.front().at("blocks");
  BlockBits out(static_cast<Eigen::Index>(manifests.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < manifests.size(); ++r) {
    const Json& blocks = manifests[r].at("blocks");
    if (blocks.size() != first.size()) throw ConfigError("manifests use different schedules");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].at("end") != first[b].at("end")) {
        throw ConfigError("manifests use different schedules");
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = blocks[b].at("bits").get<double>();
    }
  }
  return out;
}

std::string curves_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "t,block_bits_per_sample,next_block_accuracy,cumulative_bits,excess_over_uniform,ratio\n";
  for (const auto& p : curve) {
    out << p.t << ',' << p.block_bits_per_sample << ',' << p.next_block_accuracy << ','
        << p.cumulative_bits << ',' << p.excess_over_uniform << ',' << p.ratio << '\n';
  }
  return out.str();
}

namespace {

std::string method_name(const Json& m) {
  std::string name = m.at("config").value("name", std::string());
  if (name.empty()) name = m.value("scheme", std::string("?"));
  return name;
}

}  // namespace

std::string comparison_csv(const std::vector<Json>& manifests) {
  std::ostringstream out;
  out.precision(17);
  out << "method,scheme,status,codelength_kbits,ratio,test_acc\n";
  for (const auto& m : manifests) {
    out << method_name(m) << ',' << m.value("scheme", std::string()) << ','
        << m.value("status", std::string());
    if (m.value("status", std::string()) == "ok") {
      out << ',' << m.at("codelength").at("total_bits").get<double>() / 1000.0 << ','
          << m.at("ratio").get<double>() << ',';
      if (!m.at("test_accuracy").is_null()) out << m.at("test_accuracy").get<double>();
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string comparison_table(const std::vector<Json>& manifests) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "Method" << std::right << std::setw(18)
      << "Codelength (kbits)" << std::setw(14) << "Comp. Ratio" << std::setw(10) << "Test Acc"
      << '\n';
  for (const auto& m : manifests) {
    out << std::left << std::setw(28) << method_name(m) << std::right;
    if (m.value("status", std::string()) != "ok") {
      out << std::setw(42) << "failed: " + m.at("failure").value("stage", std::string()) << '\n';
      continue;
    }
    const Json& acc = m.at("test_accuracy");
    out << std::setw(18) << fmt(m.at("codelength").at("total_bits").get<double>() / 1000.0, 2)
        << std::setw(14) << fmt(m.at("ratio").get<double>(), 4) << std::setw(10)
        << (acc.is_null() ? std::string("-") : fmt(100.0 * acc.get<double>(), 2) + "%") << '\n';
  }
  return out.str();
}

std::vector<std::string> audit_manifest(const Json& m, double rel_tol) {
  std::vector<std::string> issues;
  if (m.value("status", std::string()) != "ok") {
    issues.push_back("manifest is not complete");
    return issues;
  }
  const Json& code = m.at("codelength");
  const double total = code.at("total_bits").get<double>();
  double resum = 0.0;
  double extra = 0.0;  // parts outside the block table
  for (const auto& p : code.at("breakdown")) {
    const double bits = p.at("bits").get<double>();
    const std::string label = p.at("label").get<std::string>();
    if (bits < 0.0) issues.push_back("negative part '" + label + "'");
    resum += bits;
    if (label.rfind("epoch index", 0) == 0 || label == "switch sequence") extra += bits;
  }
  if (!close(resum, total, rel_tol)) issues.push_back("breakdown does not re-sum to the total");

  const std::size_t n = m.at("dataset").at("n").get<std::size_t>();
  const int k = m.at("dataset").at("num_classes").get<int>();
  const double uniform = static_cast<double>(n) * std::log2(static_cast<double>(k));
  if (!close(m.at("uniform_bits").get<double>(), uniform, rel_tol)) {
    issues.push_back("uniform_bits is not n log2 K");
  }
  if (!close(m.at("ratio").get<double>(), total / uniform, rel_tol)) {
    issues.push_back("ratio is not total / (n log2 K)");
  }

  if (m.contains("blocks")) {
    const auto rebuilt = curve_from_manifest(m);
    const Json& stored = m.at("curve");
    if (stored.size() != rebuilt.size()) {
      issues.push_back("curve length does not match the block table");
      return issues;
    }
    const double log_k = std::log2(static_cast<double>(k));
    for (std::size_t i = 0; i < rebuilt.size(); ++i) {
      const Json& row = stored[i];
      const double cum = row.at("cumulative_bits").get<double>();
      const double t = row.at("t").get<double>();
      const std::string where = "curve row " + std::to_string(i) + ": ";
      if (!close(cum, rebuilt[i].cumulative_bits, rel_tol)) {
        issues.push_back(where + "cumulative bits do not match the blocks");
      }
      if (!close(row.at("excess_over_uniform").get<double>(), cum - t * log_k, rel_tol)) {
        issues.push_back(where + "excess is not cumulative - t log2 K");
      }
      if (!close(row.at("ratio").get<double>(), cum / (t * log_k), rel_tol)) {
        issues.push_back(where + "ratio is not cumulative / (t log2 K)");
      }
    }
    const double last = stored.back().at("cumulative_bits").get<double>();
    if (stored.back().at("t").get<std::size_t>() != n) issues.push_back("curve does not end at n");
    if (!close(last + extra, total, rel_tol)) {
      issues.push_back("final cumulative bits do not match the total");
    }
  }
  return issues;
}

}  // namespace mdl
