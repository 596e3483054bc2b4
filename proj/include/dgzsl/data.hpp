#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dgzsl/classes.hpp"
#include "dgzsl/matrix.hpp"

namespace dgzsl {

enum class Split : std::uint8_t { kTrain, kTest };

/// Plain labeled examples: one feature row per label.
struct Examples {
  Matrix features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Features, labels and split tags for N examples, the attribute table of
/// all S + U classes (row = class id) and the seen / unseen partition.
///
/// Invariants, checked by validate(): every label is seen or unseen; the
/// two class sets are disjoint and cover every attribute row; attribute
/// rows are pairwise distinct; train-split labels are seen classes.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<Split> split;
  Matrix attributes;
  std::vector<int> seen;
  std::vector<int> unseen;

  void validate() const;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  std::size_t attribute_dim() const { return attributes.cols(); }

  std::vector<std::size_t> rows_in(Split s) const;
  /// Test-split rows whose label is an unseen class.
  std::vector<std::size_t> unseen_test_rows() const;
  Examples examples(std::span<const std::size_t> rows) const;
  Examples examples(Split s) const { return examples(rows_in(s)); }

  ClassSet seen_classes() const { return ClassSet::select(attributes, seen); }
  ClassSet unseen_classes() const { return ClassSet::select(attributes, unseen); }
  ClassSet all_classes() const;
};

/// Rows of `ds` in the given order; split tags and class tables carry over.
Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

// Synthetic data ---------------------------------------------------------

struct SynthSpec {
  std::size_t seen = 15;
  std::size_t unseen = 5;
  std::size_t attribute_dim = 8;
  std::size_t feature_dim = 32;
  std::size_t samples_per_class = 100;
  /// Absolute noise standard deviation. When unset, 0.1 times the mean
  /// pairwise distance between the noiseless class feature vectors.
  std::optional<double> noise_sd;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Attribute columns uniform on [-1, 1]^M, a fixed random two-layer tanh
/// map h: R^M -> R^D, and x = h(A_y) + N(0, sd^2 I). Seen classes 0..S-1
/// form the train split, unseen classes S..S+U-1 the test split.
Dataset synth_generate(const SynthSpec& spec);

/// Noise standard deviation actually used for `spec`.
double synth_noise_sd(const SynthSpec& spec);

// Few-shot sampling --------------------------------------------------------

struct FewShotSplit {
  std::vector<std::size_t> labeled_rows;
  std::vector<std::size_t> unlabeled_rows;
};

/// Draws k test examples per unseen class without replacement; every other
/// unseen-class test row lands in the unlabeled pool.
FewShotSplit fewshot_sample(const Dataset& ds, std::size_t k, std::uint64_t seed);

// Files ------------------------------------------------------------------

/// Features in the DGZSLM01 format (train rows first, then test rows),
/// attributes as CSV rows "class_id,a_1,...,a_M", and a key = value split
/// manifest naming seen / unseen ids and the per-split label files.
Dataset load_dataset(const std::filesystem::path& features,
                     const std::filesystem::path& attributes,
                     const std::filesystem::path& manifest);

/// Reads features.bin, attributes.csv and split.txt from `dir`.
Dataset load_dataset_dir(const std::filesystem::path& dir);

/// Writes the layout read by load_dataset_dir (train rows first).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace dgzsl
