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
#include <map>
#include <string>

#include "almatch/active.hpp"
#include "almatch/augment.hpp"
#include "almatch/datasets.hpp"
#include "almatch/losses.hpp"
#include "almatch/model.hpp"

namespace almatch {

struct DataConfig {
  std::string dataset = "cifar10";  ///< cifar10 | cifar100 | blobs
  std::filesystem::path dir = "data/cifar-10-batches-bin";
  int blobs_classes = 3;
  int blobs_per_class = 100;
  int blobs_test_per_class = 100;
  int blobs_side = 16;
};

/// Everything a training run needs. Defaults are the CIFAR-10 / 100-label
/// setting; see README.md for the key reference.
struct TrainConfig {
  DataConfig data;
  std::uint64_t seed = 0;

  std::int64_t steps = 1 << 20;  ///< K: joint-phase steps
  double lr0 = 0.03;
  std::int64_t warmup_epochs = 15;
  int batch_labeled = 64;
  int batch_unlabeled = 448;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::int64_t eval_every = 1024;
  std::int64_t checkpoint_every = 0;  ///< 0: only at query events and the end
  std::filesystem::path out_dir = "runs/default";

  losses::LossWeights weights;
  double tau_unsup = 0.07;
  double tau_sup = 0.07;
  double confidence_threshold = 0.95;

  ActiveConfig active;
  ArchSpec arch;

  AugmentPolicy contrastive = AugmentPolicy::contrastive();
  AugmentPolicy weak = AugmentPolicy::weak();
  AugmentPolicy strong = AugmentPolicy::strong();

  std::int64_t oracle_timeout_ms = 0;  ///< 0 waits forever
  std::string oracle_bind = "127.0.0.1:8080";
  std::filesystem::path static_dir;

  /// Sets one key from its textual value. Throws Error(config) for an unknown
  /// key or an unparsable value.
  void set(const std::string& key, const std::string& value);

  /// Throws Error(config) naming the offending key.
  void validate() const;

  /// Canonical `key = value` listing of every key; parse(to_text()) == *this.
  std::string to_text() const;

  /// Reads `key = value` lines; `#` starts a comment, blank lines are
  /// ignored, a repeated key keeps the last value.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);

  BatchSpec batch_spec() const {
    return BatchSpec{batch_labeled, batch_unlabeled, seed};
  }
};

}  // namespace almatch
