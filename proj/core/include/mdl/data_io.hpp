#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mdl/dataset.hpp"
#include "mdl/errors.hpp"

namespace mdl {

/// Malformed IDX input. `kind` tells the failures apart.
class IdxError : public IoError {
 public:
  enum class Kind { open, magic, count, truncated, label_range };
  IdxError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// MNIST-style IDX pair: images (magic 0x00000803, uint8 pixels scaled to
/// [0, 1], row-major) and labels (magic 0x00000801).
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        int num_classes = 10);

/// Writes raw uint8 images (n x rows*cols) and labels in IDX format.
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const std::vector<std::uint8_t>& pixels, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& label_bytes);

/// CSV with a header row; `label_column` names the integer label column and
/// every other column is a real feature. K is max label + 1 unless given.
LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        int num_classes = 0);

enum class Generator { gaussian_blobs, logistic_teacher };
std::string to_string(Generator g);
Generator parse_generator(const std::string& name);

struct SyntheticSpec {
  Generator generator = Generator::gaussian_blobs;
  std::size_t n = 1000;
  std::size_t input_dim = 2;
  int num_classes = 2;
  std::uint64_t seed = 0;
  double separation = 4.0;  // blob centre scale
  double teacher_scale = 1.0;

  void validate() const;
};

struct SyntheticData {
  LabeledDataset data;
  /// Teacher weights (K x (d_x + 1), last column the bias) for logistic-teacher;
  /// row 0 is zero so a binary teacher has exactly d_x + 1 free parameters.
  Matrix teacher;
  /// Uniform draws that decided each label (logistic-teacher only).
  std::vector<double> label_draws;
};

/// gaussian-blobs: class centres N(0, separation^2 I), points N(centre, I), labels uniform.
/// logistic-teacher: x ~ N(0, I), y ~ softmax(teacher [x; 1]).
SyntheticData generate(const SyntheticSpec& spec);

/// Teacher probabilities p(y|x) for every row, as used by the generator.
Matrix teacher_probs(const Matrix& teacher, const Matrix& inputs);

/// Splits a seeded permutation of the samples into consecutive parts of the
/// given fractions (which must sum to 1). Each part keeps the original
/// relative order of its samples, so fractions {1.0} return the data unchanged.
std::vector<LabeledDataset> split(const LabeledDataset& data, const std::vector<double>& fractions,
                                  std::uint64_t seed);

enum class LabelNoise { permutation, iid_uniform };

/// Fake labels: a seeded permutation of the label multiset, or iid uniform labels.
LabeledDataset shuffle_labels(const LabeledDataset& data, std::uint64_t seed,
                              LabelNoise mode = LabelNoise::permutation);

}  // namespace mdl
