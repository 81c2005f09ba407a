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

#include "almatch/oracle.hpp"

#include "almatch/datasets.hpp"
#include "almatch/error.hpp"

namespace almatch {

LabelAnswer SimulatedOracle::ask(const LabelQuery& query, std::chrono::milliseconds) {
  require(query.dataset_index < ds_->size(), ErrorCode::oracle,
          "query for unknown dataset index " + std::to_string(query.dataset_index));
  LabelAnswer a;
  a.query_id = query.query_id;
  a.label = ds_->labels[query.dataset_index];
  a.answered_at = Clock::now();
  a.source = AnswerSource::simulated;
  return a;
}

std::uint64_t LabelQueue::enqueue(LabelQuery query) {
  std::lock_guard lock(mu_);
  require(!closed_, ErrorCode::oracle, "label queue is closed");
  std::size_t unanswered = 0;
  for (const auto& [id, e] : outstanding_) unanswered += e.answer ? 0 : 1;
  require(unanswered < capacity_, ErrorCode::state,
          "label queue full (" + std::to_string(capacity_) + " outstanding queries)");
  const std::uint64_t id = next_id_++;
  query.query_id = id;
  outstanding_.emplace(id, Entry{std::move(query), std::nullopt});
  cv_.notify_all();
  return id;
}

std::optional<LabelQuery> LabelQueue::next_pending() const {
  std::lock_guard lock(mu_);
  for (const auto& [id, e] : outstanding_) {
    if (!e.answer) return e.query;
  }
  return std::nullopt;
}

std::optional<LabelQuery> LabelQueue::find_pending(std::uint64_t query_id) const {
  std::lock_guard lock(mu_);
  auto it = outstanding_.find(query_id);
  if (it == outstanding_.end() || it->second.answer) return std::nullopt;
  return it->second.query;
}

std::size_t LabelQueue::pending_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, e] : outstanding_) n += e.answer ? 0 : 1;
  return n;
}

SubmitResult LabelQueue::submit(std::uint64_t query_id, int label, AnswerSource source) {
  std::lock_guard lock(mu_);
  if (answered_.count(query_id)) return SubmitResult::already_answered;
  auto it = outstanding_.find(query_id);
  if (it == outstanding_.end()) return SubmitResult::unknown_query;
  const auto classes = static_cast<int>(it->second.query.class_names.size());
  if (label < 0 || label >= classes) return SubmitResult::invalid_label;
  it->second.answer = LabelAnswer{query_id, label, Clock::now(), source};
  answered_.insert(query_id);
  cv_.notify_all();
  return SubmitResult::accepted;
}

LabelAnswer LabelQueue::wait(std::uint64_t query_id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto it = outstanding_.find(query_id);
  require(it != outstanding_.end(), ErrorCode::state,
          "query " + std::to_string(query_id) + " is not outstanding");
  auto ready = [&] { return closed_ || it->second.answer.has_value(); };
  if (timeout == std::chrono::milliseconds::max()) {
    cv_.wait(lock, ready);
  } else if (!cv_.wait_for(lock, timeout, ready)) {
    outstanding_.erase(it);
    fail(ErrorCode::timeout, "no label for query " + std::to_string(query_id) + " within " +
                                 std::to_string(timeout.count()) + " ms");
  }
  if (!it->second.answer) fail(ErrorCode::oracle, "label queue closed while waiting");
  LabelAnswer a = *it->second.answer;
  outstanding_.erase(it);
  return a;
}

void LabelQueue::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

LabelAnswer HumanOracle::ask(const LabelQuery& query, std::chrono::milliseconds timeout) {
  const std::uint64_t id = queue_->enqueue(query);
  return queue_->wait(id, timeout);
}

}  // namespace almatch
