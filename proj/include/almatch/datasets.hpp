// Copyright 2026 The almatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "almatch/image.hpp"
#include "almatch/rng.hpp"

namespace almatch {

class Oracle;

enum class Split { train, test };
enum class CifarVariant { cifar10, cifar100 };

/// Image-classification dataset. `labels` is the hidden ground truth: only the
/// simulated oracle and the evaluator read it.
struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;
  Split split = Split::train;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return images.size(); }

  /// Throws Error(format) if the invariants (shared shape, label range,
  /// matching lengths, pixel range) do not hold.
  void validate() const;
};

/// Reads the standard CIFAR binary batches under `dir`.
///
/// CIFAR-10 train: data_batch_1.bin .. data_batch_5.bin, test: test_batch.bin,
/// records of 1 label byte + 3072 pixel bytes. CIFAR-100 train: train.bin,
/// test: test.bin, records of 2 label bytes (coarse, fine) + 3072 pixel
/// bytes; the fine label is used. Pixels are stored planar (R, G, B planes of
/// 32x32) and converted to interleaved floats in [0, 1].
Dataset load_cifar_binary(const std::filesystem::path& dir, CifarVariant variant,
                          Split split = Split::train);

std::vector<std::string> cifar_batch_files(CifarVariant variant, Split split);

/// Class-conditional synthetic images: class k is a colored disc at a
/// class-specific position on a dim background, plus seeded pixel noise.
Dataset make_synthetic_blobs(int num_classes, int per_class, int image_side,
                             std::uint64_t seed, Split split = Split::train);

struct LabeledExample {
  std::size_t index;
  int label;
  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

/// Labeled/unlabeled partition of a training set. `pool` is kept sorted.
class SplitState {
 public:
  SplitState() = default;
  SplitState(std::size_t train_size, std::vector<LabeledExample> labeled);

  const std::vector<LabeledExample>& labeled() const noexcept { return labeled_; }
  const std::vector<std::size_t>& pool() const noexcept { return pool_; }
  std::size_t train_size() const noexcept { return train_size_; }

  bool in_pool(std::size_t index) const;

  /// Moves `index` from the pool into the labeled set. Throws Error(state) if
  /// the index is not currently in the pool.
  void add_label(std::size_t index, int label);

  /// Disjointness and coverage of labeled indices and pool.
  bool conserved() const;

 private:
  std::size_t train_size_ = 0;
  std::vector<LabeledExample> labeled_;
  std::vector<std::size_t> pool_;
};

/// Picks n0 training indices uniformly at random and asks `oracle` for each
/// label. Oracle failures surface as Error(oracle).
SplitState init_split(const Dataset& ds, std::size_t n0, Oracle& oracle,
                      std::uint64_t seed);

struct BatchSpec {
  int labeled_batch_size = 64;
  int unlabeled_batch_size = 448;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Epoch-shuffled index sampler over a set that may grow or shrink between
/// calls. Draws `batch` items: with replacement when the set is smaller than
/// the batch, otherwise without replacement from a seeded permutation. A
/// change in set size starts a fresh epoch.
class IndexSampler {
 public:
  IndexSampler() = default;
  explicit IndexSampler(Rng rng) : rng_(std::move(rng)) {}

  std::vector<std::size_t> draw(std::size_t set_size, std::size_t batch);

  std::uint64_t epoch() const noexcept { return epoch_; }

  std::string serialize() const;
  static IndexSampler deserialize(const std::string& text);

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
};

/// Seeded labeled/unlabeled batch iterators over a SplitState.
class BatchIterator {
 public:
  explicit BatchIterator(const BatchSpec& spec);

  std::vector<std::pair<const Image*, int>> next_labeled_batch(
      const Dataset& ds, const SplitState& state);
  /// Returns (dataset index, image) pairs drawn from the pool.
  std::vector<std::pair<std::size_t, const Image*>> next_unlabeled_batch(
      const Dataset& ds, const SplitState& state);

  const BatchSpec& spec() const noexcept { return spec_; }

  std::string serialize() const;
  void restore(const std::string& text);

 private:
  BatchSpec spec_;
  IndexSampler labeled_;
  IndexSampler unlabeled_;
};

}  // namespace almatch
