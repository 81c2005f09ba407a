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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "almatch/config.hpp"
#include "almatch/datasets.hpp"
#include "almatch/label_server.hpp"
#include "almatch/model.hpp"
#include "almatch/oracle.hpp"

namespace almatch {

/// lr0 * cos(7 pi k / (16 K)). Throws Error(domain) unless 0 <= k <= K and K >= 1.
double cosine_lr(std::int64_t k, std::int64_t K, double lr0);

/// Top-1 accuracy on un-augmented images in eval mode.
double evaluate(const EncoderNet<float>& net, const Dataset& test, std::size_t chunk = 256);

/// Loads the train and test splits named by `data`. Blobs are generated from
/// `seed`.
std::pair<Dataset, Dataset> load_datasets(const DataConfig& data, std::uint64_t seed);

enum class Phase { init, warmup, joint, done };
std::string to_string(Phase p);

struct StepMetrics {
  losses::LossParts parts;
  double total = 0.0;
  double confident_fraction = 0.0;
  double lr = 0.0;
};

struct EvalRecord {
  std::int64_t step = 0;        ///< SGD steps taken so far (warm-up included)
  std::int64_t joint_step = 0;  ///< k
  Phase phase = Phase::init;
  double test_accuracy = 0.0;
  std::size_t labels = 0;
  losses::LossParts mean_parts;  ///< averaged over the steps since the last record
  double mean_total = 0.0;
  double confident_fraction = 0.0;
  double lr = 0.0;
};

struct RunMetrics {
  std::vector<EvalRecord> records;
};

struct RunResult {
  RunMetrics metrics;
  double final_accuracy = 0.0;
  std::size_t labels = 0;
  bool stopped = false;  ///< stop was requested; a resumable checkpoint was written
};

/// One training run. The trainer thread owns the net and the split; the
/// oracle may hand queries to another thread (see HumanOracle).
///
/// Files under cfg.out_dir: metrics.jsonl (one JSON object per line: "init",
/// "query" and "eval" records) and checkpoint.bin (latest state).
class Trainer {
 public:
  Trainer(TrainConfig cfg, const Dataset& train, const Dataset& test);

  /// Draws the initial n0 labels through `oracle`. Must precede stepping.
  void initialize(Oracle& oracle);

  /// Restores everything from a checkpoint written by this trainer for the
  /// same config. The metrics file is truncated to the checkpointed length.
  void resume(const std::filesystem::path& checkpoint);

  /// One warm-up update on the unsupervised contrastive loss; only trunk and
  /// projection parameters move.
  StepMetrics warmup_step();

  /// One update on the weighted sum of all four losses at cosine_lr(k).
  StepMetrics joint_step();

  /// Runs warm-up, the joint phase and the scheduled query events to
  /// completion (or until `stop` becomes true). Throws Error(timeout) after
  /// checkpointing if the oracle times out, and Error(numeric) on a
  /// non-finite loss.
  RunResult run(Oracle& oracle, StatusBoard* status = nullptr,
                const std::atomic<bool>* stop = nullptr);

  void save(const std::filesystem::path& path) const;

  const TrainConfig& config() const noexcept { return cfg_; }
  const EncoderNet<float>& net() const noexcept { return net_; }
  EncoderNet<float>& net() noexcept { return net_; }
  const SplitState& split() const noexcept { return split_; }
  Phase phase() const noexcept { return phase_; }
  std::int64_t step() const noexcept { return step_; }
  std::int64_t joint_steps() const noexcept { return k_; }
  std::int64_t warmup_steps_total() const noexcept { return warmup_total_; }
  std::int64_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  std::uint64_t query_events() const noexcept { return event_; }

  /// Called after every SGD step (tests use it to trace LR and the split).
  std::function<void(const Trainer&, const StepMetrics&)> on_step;

  std::filesystem::path checkpoint_path() const { return cfg_.out_dir / "checkpoint.bin"; }
  std::filesystem::path metrics_path() const { return cfg_.out_dir / "metrics.jsonl"; }

 private:
  void open_metrics(bool truncate);
  void write_line(const std::string& line);
  void record_eval();
  void begin_event();
  void answer_pending(Oracle& oracle);
  void accumulate(const StepMetrics& m);
  void publish(StatusBoard* status) const;
  std::chrono::milliseconds oracle_timeout() const;

  TrainConfig cfg_;
  const Dataset* train_;
  const Dataset* test_;
  EncoderNet<float> net_;
  Sgd<float> sgd_;
  SplitState split_;
  BatchIterator batches_;
  Rng aug_rng_;

  Phase phase_ = Phase::init;
  std::int64_t step_ = 0;
  std::int64_t warmup_done_ = 0;
  std::int64_t warmup_total_ = 0;
  std::int64_t steps_per_epoch_ = 1;
  std::int64_t k_ = 0;
  std::uint64_t event_ = 0;
  std::uint64_t next_query_id_ = 1;
  std::vector<std::size_t> pending_;  ///< selected at the current event, not yet labeled

  // Running sums since the last eval record.
  losses::LossParts sum_parts_;
  double sum_total_ = 0.0;
  double sum_confident_ = 0.0;
  std::int64_t sum_count_ = 0;
  double last_lr_ = 0.0;
  std::optional<double> last_accuracy_;

  RunMetrics metrics_;
  std::ofstream metrics_out_;
  std::uint64_t metrics_bytes_ = 0;
};

struct SeedSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation (n - 1); 0 for one seed
};

SeedSummary summarize(std::vector<std::uint64_t> seeds, std::vector<double> accuracies);
std::string to_json(const SeedSummary& s);

}  // namespace almatch
