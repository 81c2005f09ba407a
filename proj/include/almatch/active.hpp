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
#include <span>
#include <string>
#include <vector>

#include "almatch/augment.hpp"
#include "almatch/model.hpp"

namespace almatch {

struct Dataset;
class SplitState;

enum class Strategy { margin, random, entropy };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct ActiveConfig {
  std::size_t n0 = 20;
  std::int64_t b_smp = 64;           ///< joint-phase batches between query events
  std::size_t label_budget = 100;    ///< total labels, initial n0 included
  std::size_t queries_per_event = 1;
  std::size_t scoring_pool_size = 0; ///< 0 scores the whole pool
  Strategy strategy = Strategy::margin;

  /// Throws Error(config) unless n0 >= 1, b_smp >= 1, budget >= n0 and
  /// queries_per_event >= 1.
  void validate() const;
};

struct MarginScore {
  std::size_t pool_index = 0;  ///< dataset index of the candidate
  double margin = 0.0;
};

/// Top-1 minus top-2 probability. Throws Error(domain) for fewer than two
/// classes.
template <class S>
S margin(std::span<const S> probs);

/// Shannon entropy in nats.
template <class S>
S entropy(std::span<const S> probs);

/// The k entries with the smallest score; ties go to the lower pool index.
/// Result is ordered by (score, index).
std::vector<std::size_t> select_smallest(std::span<const MarginScore> scores, std::size_t k);

/// Where and how candidates are scored. Each candidate gets its own weak
/// augmentation stream keyed by (seed, event, dataset index), so scoring is
/// independent of candidate order and never touches training streams.
struct ScoringContext {
  const Dataset* dataset = nullptr;
  AugmentPolicy weak = AugmentPolicy::weak();
  std::uint64_t seed = 0;
  std::uint64_t event = 0;
  std::size_t chunk = 256;
};

/// Eval-mode class probabilities of the weakly augmented candidates, one row
/// per candidate.
Matrix<float> candidate_probs(const EncoderNet<float>& net, const ScoringContext& ctx,
                              std::span<const std::size_t> candidates);

/// Scores each candidate: margin for Strategy::margin, negated entropy for
/// Strategy::entropy (smaller is more informative for both).
std::vector<MarginScore> score_candidates(const EncoderNet<float>& net,
                                          const ScoringContext& ctx,
                                          std::span<const std::size_t> candidates,
                                          Strategy strategy);

/// Pool indices to send to the oracle at this event: the most informative
/// `queries_per_event` candidates, clipped to the remaining budget. Returns an
/// empty list when the pool is empty or the budget is spent.
std::vector<std::size_t> select_queries(const EncoderNet<float>& net, const SplitState& state,
                                        const ActiveConfig& cfg, const ScoringContext& ctx);

/// True iff warm-up is over (epoch >= warmup_epochs), labels remain in the
/// budget, and `joint_step` is a positive multiple of b_smp.
bool should_query(std::int64_t joint_step, std::int64_t epoch, const ActiveConfig& cfg,
                  std::size_t labels_so_far, std::int64_t warmup_epochs);

}  // namespace almatch
