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

#include "almatch/active.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "almatch/datasets.hpp"
#include "almatch/error.hpp"

namespace almatch {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::margin: return "margin";
    case Strategy::random: return "random";
    case Strategy::entropy: return "entropy";
  }
  return "margin";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "margin") return Strategy::margin;
  if (text == "random") return Strategy::random;
  if (text == "entropy") return Strategy::entropy;
  fail(ErrorCode::config, "unknown active.strategy '" + text + "' (margin|random|entropy)");
}

void ActiveConfig::validate() const {
  require(n0 >= 1, ErrorCode::config, "active.n0 must be at least 1");
  require(b_smp >= 1, ErrorCode::config, "active.b_smp must be at least 1");
  require(label_budget >= n0, ErrorCode::config, "active.budget must be at least active.n0");
  require(queries_per_event >= 1, ErrorCode::config,
          "active.queries_per_event must be at least 1");
}

template <class S>
S margin(std::span<const S> probs) {
  require(probs.size() >= 2, ErrorCode::domain, "margin needs at least two classes");
  S top1 = std::max(probs[0], probs[1]);
  S top2 = std::min(probs[0], probs[1]);
  for (std::size_t i = 2; i < probs.size(); ++i) {
    if (probs[i] > top1) {
      top2 = top1;
      top1 = probs[i];
    } else if (probs[i] > top2) {
      top2 = probs[i];
    }
  }
  return top1 - top2;
}

template <class S>
S entropy(std::span<const S> probs) {
  S h = S(0);
  for (S p : probs) {
    if (p > S(0)) h -= p * std::log(p);
  }
  return h;
}

template float margin<float>(std::span<const float>);
template double margin<double>(std::span<const double>);
template float entropy<float>(std::span<const float>);
template double entropy<double>(std::span<const double>);

std::vector<std::size_t> select_smallest(std::span<const MarginScore> scores, std::size_t k) {
  std::vector<MarginScore> sorted(scores.begin(), scores.end());
  k = std::min(k, sorted.size());
  auto less = [](const MarginScore& a, const MarginScore& b) {
    if (a.margin != b.margin) return a.margin < b.margin;
    return a.pool_index < b.pool_index;
  };
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                    sorted.end(), less);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[i].pool_index);
  return out;
}

Matrix<float> candidate_probs(const EncoderNet<float>& net, const ScoringContext& ctx,
                              std::span<const std::size_t> candidates) {
  require(ctx.dataset != nullptr, ErrorCode::state, "scoring context has no dataset");
  const Dataset& ds = *ctx.dataset;
  Matrix<float> probs(static_cast<Eigen::Index>(candidates.size()), net.arch().num_classes);
  const std::size_t chunk = std::max<std::size_t>(1, ctx.chunk);
  std::vector<Image> views;
  for (std::size_t start = 0; start < candidates.size(); start += chunk) {
    const std::size_t end = std::min(candidates.size(), start + chunk);
    views.clear();
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t index = candidates[i];
      require(index < ds.size(), ErrorCode::domain, "candidate index out of range");
      Rng rng = Rng::stream(ctx.seed, streams::scoring, splitmix64(ctx.event) ^ index);
      views.push_back(apply(ctx.weak, ds.images[index], rng));
    }
    const auto pass = net.forward(stack_images<float>(std::span<const Image>(views)), Mode::eval);
    probs.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
        pass.probs();
  }
  return probs;
}

std::vector<MarginScore> score_candidates(const EncoderNet<float>& net,
                                          const ScoringContext& ctx,
                                          std::span<const std::size_t> candidates,
                                          Strategy strategy) {
  require(strategy != Strategy::random, ErrorCode::config,
          "random strategy does not score candidates");
  const Matrix<float> probs = candidate_probs(net, ctx, candidates);
  std::vector<MarginScore> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::span<const float> row(probs.row(static_cast<Eigen::Index>(i)).data(),
                                     static_cast<std::size_t>(probs.cols()));
    const double s = strategy == Strategy::margin ? static_cast<double>(margin(row))
                                                  : -static_cast<double>(entropy(row));
    scores.push_back({candidates[i], s});
  }
  return scores;
}

std::vector<std::size_t> select_queries(const EncoderNet<float>& net, const SplitState& state,
                                        const ActiveConfig& cfg, const ScoringContext& ctx) {
  const std::size_t have = state.labeled().size();
  if (state.pool().empty() || have >= cfg.label_budget) return {};
  const std::size_t k =
      std::min({cfg.queries_per_event, cfg.label_budget - have, state.pool().size()});

  std::vector<std::size_t> candidates = state.pool();
  if (cfg.scoring_pool_size > 0 && cfg.scoring_pool_size < candidates.size()) {
    Rng rng = Rng::stream(ctx.seed, streams::candidate_subsample, ctx.event);
    for (std::size_t i = 0; i < cfg.scoring_pool_size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(cfg.scoring_pool_size);
    std::sort(candidates.begin(), candidates.end());
  }

  if (cfg.strategy == Strategy::random) {
    Rng rng = Rng::stream(ctx.seed, streams::random_strategy, ctx.event);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(k);
    return candidates;
  }
  const auto scores = score_candidates(net, ctx, candidates, cfg.strategy);
  return select_smallest(scores, k);
}

bool should_query(std::int64_t joint_step, std::int64_t epoch, const ActiveConfig& cfg,
                  std::size_t labels_so_far, std::int64_t warmup_epochs) {
  if (epoch < warmup_epochs) return false;
  if (labels_so_far >= cfg.label_budget) return false;
  return joint_step > 0 && joint_step % cfg.b_smp == 0;
}

}  // namespace almatch
