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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "almatch/image.hpp"

namespace almatch {

struct Dataset;

using Clock = std::chrono::system_clock;

struct LabelQuery {
  std::uint64_t query_id = 0;
  std::size_t dataset_index = 0;
  Image image;
  Clock::time_point issued_at{};
  std::vector<std::string> class_names;
};

enum class AnswerSource { simulated, human };

struct LabelAnswer {
  std::uint64_t query_id = 0;
  int label = 0;
  Clock::time_point answered_at{};
  AnswerSource source = AnswerSource::simulated;
};

/// Answers label queries. Implementations must be callable from the trainer
/// thread; `ask` blocks until an answer is available or `timeout` elapses.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual LabelAnswer ask(const LabelQuery& query,
                          std::chrono::milliseconds timeout) = 0;
};

/// Reads hidden ground truth; never blocks.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(const Dataset& ds) : ds_(&ds) {}
  LabelAnswer ask(const LabelQuery& query, std::chrono::milliseconds) override;

 private:
  const Dataset* ds_;
};

enum class SubmitResult { accepted, unknown_query, already_answered, invalid_label };

/// Thread-safe bounded channel between the trainer (which enqueues queries and
/// waits for answers) and the label service (which hands out queries and
/// posts answers). Each query id accepts exactly one answer.
class LabelQueue {
 public:
  explicit LabelQueue(std::size_t capacity = 64) : capacity_(capacity) {}

  /// Registers a query and returns its id. Throws Error(state) when the
  /// number of unanswered queries would exceed capacity.
  std::uint64_t enqueue(LabelQuery query);

  /// Oldest unanswered query, if any. The query stays outstanding until it
  /// is answered.
  std::optional<LabelQuery> next_pending() const;
  std::optional<LabelQuery> find_pending(std::uint64_t query_id) const;
  std::size_t pending_count() const;

  /// Labels must lie in [0, class_names.size()) of the query.
  SubmitResult submit(std::uint64_t query_id, int label,
                      AnswerSource source = AnswerSource::human);

  /// Blocks until `query_id` is answered. Throws Error(timeout) on expiry and
  /// Error(state) for ids never enqueued. The answer is consumed.
  LabelAnswer wait(std::uint64_t query_id, std::chrono::milliseconds timeout);

  /// Wakes every waiter with Error(oracle).
  void close();

 private:
  struct Entry {
    LabelQuery query;
    std::optional<LabelAnswer> answer;
  };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t capacity_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, Entry> outstanding_;
  std::set<std::uint64_t> answered_;
  bool closed_ = false;
};

/// Routes queries through a LabelQueue to whoever consumes it (the HTTP
/// label service in practice).
class HumanOracle final : public Oracle {
 public:
  explicit HumanOracle(LabelQueue& queue) : queue_(&queue) {}
  LabelAnswer ask(const LabelQuery& query,
                  std::chrono::milliseconds timeout) override;

 private:
  LabelQueue* queue_;
};

}  // namespace almatch
