#include "mdl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "mdl/errors.hpp"

namespace mdl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'M', 'D', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kKindNetwork = 1;
constexpr std::uint32_t kKindPosterior = 2;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void put_doubles(std::span<const double> values) {
    put<std::uint64_t>(values.size());
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
  }
  void put_raw(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw IoError("truncated checkpoint " + path_.string());
    return value;
  }
  std::vector<double> get_doubles(std::uint64_t count) {
    if (count > (std::uint64_t{1} << 34)) throw IoError("implausible parameter count");
    std::vector<double> values(count);
    in_.read(reinterpret_cast<char*>(values.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!in_) throw IoError("truncated checkpoint " + path_.string());
    return values;
  }
  void get_raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) throw IoError("truncated checkpoint " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

void write_header(Writer& w, std::uint32_t kind, const MlpSpec& spec) {
  w.put_raw(kMagic.data(), kMagic.size());
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(kind);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layer_widths.size()));
  for (std::size_t width : spec.layer_widths) w.put<std::uint64_t>(width);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.activation));
  w.put<double>(spec.dropout_prob);
  w.put<std::uint64_t>(spec.seed);
}

MlpSpec read_header(Reader& r, std::uint32_t expected_kind, const std::filesystem::path& path) {
  std::array<char, 8> magic{};
  r.get_raw(magic.data(), magic.size());
  if (magic != kMagic) throw IoError(path.string() + " is not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = r.get<std::uint32_t>();
  if (kind != expected_kind) {
    throw IoError(path.string() + " holds checkpoint kind " + std::to_string(kind) +
                  ", expected " + std::to_string(expected_kind));
  }
  MlpSpec spec;
  const auto widths = r.get<std::uint32_t>();
  if (widths > 1024) throw IoError("implausible layer count in " + path.string());
  for (std::uint32_t i = 0; i < widths; ++i) spec.layer_widths.push_back(r.get<std::uint64_t>());
  const auto activation = r.get<std::uint32_t>();
  if (activation > 1) throw IoError("unknown activation code in " + path.string());
  spec.activation = static_cast<Activation>(activation);
  spec.dropout_prob = r.get<double>();
  spec.seed = r.get<std::uint64_t>();
  spec.validate();
  return spec;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Mlp& model) {
  Writer w(path);
  write_header(w, kKindNetwork, model.spec());
  w.put_doubles(model.params());
  w.finish(path);
}

Mlp load_network_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  MlpSpec spec = read_header(r, kKindNetwork, path);
  const auto count = r.get<std::uint64_t>();
  if (count != spec.num_params()) throw IoError("parameter count does not match architecture");
  return Mlp(std::move(spec), r.get_doubles(count));
}

void save_checkpoint(const std::filesystem::path& path, const MlpSpec& family,
                     const GaussianPrior& prior, const MeanFieldPosterior& posterior) {
  Writer w(path);
  write_header(w, kKindPosterior, family);
  w.put<double>(prior.sigma0);
  w.put_doubles(posterior.mu());
  w.put_raw(reinterpret_cast<const char*>(posterior.rho().data()), posterior.rho().size_bytes());
  w.finish(path);
}

PosteriorCheckpoint load_posterior_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  MlpSpec spec = read_header(r, kKindPosterior, path);
  GaussianPrior prior{r.get<double>()};
  prior.validate();
  const auto count = r.get<std::uint64_t>();
  if (count != spec.num_params()) throw IoError("posterior size does not match architecture");
  std::vector<double> mu = r.get_doubles(count);
  std::vector<double> rho = r.get_doubles(count);
  return {std::move(spec), prior, MeanFieldPosterior(std::move(mu), std::move(rho))};
}

}  // namespace mdl
