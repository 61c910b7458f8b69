#include "mdl/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "mdl/codelength.hpp"
#include "mdl/rng.hpp"

namespace mdl {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::open, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw IdxError(IdxError::Kind::truncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::string hex(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << v;
  return s.str();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto first = f.find_first_not_of(" \t\r");
    const auto last = f.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string() : f.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_label(const std::string& s, Label& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        int num_classes) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);
  const std::uint32_t img_magic = read_be32(img, 0, images);
  if (img_magic != kImagesMagic) {
    throw IdxError(IdxError::Kind::magic, images.string() + ": magic " + hex(img_magic) +
                                              ", expected " + hex(kImagesMagic));
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kLabelsMagic) {
    throw IdxError(IdxError::Kind::magic, labels.string() + ": magic " + hex(lab_magic) +
                                              ", expected " + hex(kLabelsMagic));
  }
  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (n != n_labels) {
    throw IdxError(IdxError::Kind::count, "image count " + std::to_string(n) +
                                              " does not match label count " +
                                              std::to_string(n_labels));
  }
  const std::size_t dim = rows * cols;
  if (img.size() < 16 + n * dim) {
    throw IdxError(IdxError::Kind::truncated,
                   images.string() + ": expected " + std::to_string(n * dim) +
                       " pixel bytes, found " + std::to_string(img.size() - 16));
  }
  if (lab.size() < 8 + n) {
    throw IdxError(IdxError::Kind::truncated, labels.string() + ": expected " +
                                                  std::to_string(n) + " labels, found " +
                                                  std::to_string(lab.size() - 8));
  }
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(img[16 + i * dim + j]) / 255.0;
    }
  }
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lab[8 + i];
    if (y[i] >= num_classes) {
      throw IdxError(IdxError::Kind::label_range,
                     labels.string() + ": label " + std::to_string(y[i]) + " at index " +
                         std::to_string(i) + " is not below " + std::to_string(num_classes));
    }
  }
  return LabeledDataset(std::move(x), std::move(y), num_classes);
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const std::vector<std::uint8_t>& pixels, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& label_bytes) {
  const std::size_t n = label_bytes.size();
  if (pixels.size() != n * rows * cols) throw ConfigError("pixel buffer does not match n x rows x cols");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw IoError("cannot open IDX output files for writing");
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(n));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(n));
  lab.write(reinterpret_cast<const char*>(label_bytes.data()),
            static_cast<std::streamsize>(label_bytes.size()));
  if (!img || !lab) throw IoError("writing IDX files failed");
}

LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw IoError(path.string() + ": no column named '" + label_column + "'");
  }
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw IoError(path.string() + ": no feature columns");

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      throw IoError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                    std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == label_idx) {
        Label y = 0;
        if (!parse_label(fields[j], y)) throw IoError(where + "label '" + fields[j] + "' is not a class index");
        labels.push_back(y);
      } else {
        double v = 0.0;
        if (!parse_double(fields[j], v)) {
          throw IoError(where + "column '" + header[j] + "' value '" + fields[j] + "' is not a finite number");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw IoError(path.string() + ": no data rows");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  if (num_classes == 0) num_classes = std::max(2, max_label + 1);
  if (max_label >= num_classes) {
    throw IoError(path.string() + ": label " + std::to_string(max_label) + " is not below " +
                  std::to_string(num_classes));
  }
  Matrix x = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()),
                                static_cast<Eigen::Index>(dim));
  return LabeledDataset(std::move(x), std::move(labels), num_classes);
}

std::string to_string(Generator g) {
  return g == Generator::gaussian_blobs ? "gaussian-blobs" : "logistic-teacher";
}

Generator parse_generator(const std::string& name) {
  if (name == "gaussian-blobs") return Generator::gaussian_blobs;
  if (name == "logistic-teacher") return Generator::logistic_teacher;
  throw ConfigError("unknown generator '" + name + "' (expected gaussian-blobs or logistic-teacher)");
}

void SyntheticSpec::validate() const {
  if (n == 0 || input_dim == 0) throw ConfigError("synthetic n and d_x must be positive");
  if (num_classes < 2) throw ConfigError("synthetic K must be at least 2");
  if (!(separation >= 0.0) || !(teacher_scale >= 0.0)) {
    throw ConfigError("synthetic scales must be non-negative");
  }
}

Matrix teacher_probs(const Matrix& teacher, const Matrix& inputs) {
  const Eigen::Index d = inputs.cols();
  if (teacher.cols() != d + 1) throw ConfigError("teacher does not match the input dimension");
  Matrix logits = inputs * teacher.leftCols(d).transpose();
  logits.rowwise() += teacher.col(d).transpose();
  return log_softmax(logits).array().exp().matrix();
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.input_dim);
  const int K = spec.num_classes;
  Matrix x(n, d);
  std::vector<Label> y(spec.n);
  if (spec.generator == Generator::gaussian_blobs) {
    Rng rng(derive_seed(spec.seed, "blobs"));
    Matrix centres(K, d);
    for (Eigen::Index c = 0; c < K; ++c) {
      for (Eigen::Index j = 0; j < d; ++j) centres(c, j) = spec.separation * rng.normal();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<Label>(rng.index(static_cast<std::size_t>(K)));
      y[static_cast<std::size_t>(i)] = c;
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = centres(c, j) + rng.normal();
    }
    return {LabeledDataset(std::move(x), std::move(y), K), Matrix(), {}};
  }

  Rng teacher_rng(derive_seed(spec.seed, "teacher"));
  Matrix teacher = Matrix::Zero(K, d + 1);
  const double scale = spec.teacher_scale / std::sqrt(static_cast<double>(d));
  for (Eigen::Index c = 1; c < K; ++c) {
    for (Eigen::Index j = 0; j <= d; ++j) teacher(c, j) = scale * teacher_rng.normal();
  }
  Rng input_rng(derive_seed(spec.seed, "inputs"));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = input_rng.normal();
  }
  const Matrix p = teacher_probs(teacher, x);
  Rng label_rng(derive_seed(spec.seed, "labels"));
  std::vector<double> draws(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = label_rng.uniform01();
    draws[static_cast<std::size_t>(i)] = u;
    Label c = 0;
    double cumulative = p(i, 0);
    while (c + 1 < K && u >= cumulative) {
      ++c;
      cumulative += p(i, c);
    }
    y[static_cast<std::size_t>(i)] = c;
  }
  return {LabeledDataset(std::move(x), std::move(y), K), std::move(teacher), std::move(draws)};
}

std::vector<LabeledDataset> split(const LabeledDataset& data, const std::vector<double>& fractions,
                                  std::uint64_t seed) {
  if (fractions.empty()) throw ConfigError("split needs at least one fraction");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  std::vector<std::size_t> order = iota_indices(data.size());
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  std::vector<LabeledDataset> parts;
  std::size_t start = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    const std::size_t stop =
        p + 1 == fractions.size()
            ? data.size()
            : std::min(data.size(), start + static_cast<std::size_t>(std::floor(
                                                fractions[p] * static_cast<double>(data.size()))));
    if (stop <= start) throw ConfigError("split part " + std::to_string(p) + " would be empty");
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
    std::sort(idx.begin(), idx.end());
    parts.push_back(data.select(idx));
    start = stop;
  }
  return parts;
}

LabeledDataset shuffle_labels(const LabeledDataset& data, std::uint64_t seed, LabelNoise mode) {
  Rng rng(derive_seed(seed, "fake-labels"));
  std::vector<Label> labels(data.size());
  if (mode == LabelNoise::permutation) {
    std::vector<std::size_t> perm = iota_indices(data.size());
    rng.shuffle(perm);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = data.label(perm[i]);
  } else {
    for (auto& y : labels) y = static_cast<Label>(rng.index(static_cast<std::size_t>(data.num_classes())));
  }
  return data.with_labels(std::move(labels));
}

}  // namespace mdl
