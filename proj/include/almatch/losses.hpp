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

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "almatch/model.hpp"

namespace almatch::losses {

/// x . y / (|x| |y|). Throws Error(domain) for a zero vector or length mismatch.
template <class S>
S cosine_sim(std::span<const S> a, std::span<const S> b);

/// One anchor's view of a batch for the generic contrastive loss.
///
/// Rows of `reps` are representations (any positive scale). For anchor a,
/// `positives[a]` and `negatives[a]` are disjoint row indices, neither
/// containing a itself.
template <class S>
struct ContrastiveBatchView {
  Matrix<S> reps;
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> negatives;
  S tau = S(0.07);

  /// Throws Error(config) for tau <= 0 and Error(domain) for a malformed
  /// positive/negative assignment.
  void validate() const;
};

/// Generic contrastive loss for a single anchor:
///
///   -1/|P| * log( sum_{p in P} exp(sim(a,p)/tau) / sum_{k in P u N} exp(sim(a,k)/tau) )
///
/// evaluated with max-shifted exponential sums. The 1/|P| factor scales the
/// log of the ratio of sums (not a sum of per-positive logs).
template <class S>
S contrastive_loss(const ContrastiveBatchView<S>& view, int anchor);

template <class S>
struct LossResult {
  S value = S(0);
  Matrix<S> grad;  ///< d(value)/d(input), same shape as the input matrix
};

/// Average of the generic loss over every row of `reps`, where positives of
/// row a are the other rows with the same group id and negatives are all rows
/// of other groups. Returns the gradient w.r.t. the raw rows of `reps`.
template <class S>
LossResult<S> grouped_contrastive_loss(const Matrix<S>& reps, std::span<const int> groups,
                                       S tau);

/// Unsupervised contrastive loss over 2B views laid out as pairs: rows 2i and
/// 2i+1 are the two augmentations of image i. Throws Error(domain) for an odd
/// row count.
template <class S>
LossResult<S> unsup_contrastive_loss(const Matrix<S>& reps, S tau);

/// Supervised contrastive loss over 2B labeled views laid out as pairs (rows
/// 2j, 2j+1 come from image j, whose label is labels[j]). Every view of the
/// same class is a positive, every view of another class a negative.
template <class S>
LossResult<S> sup_contrastive_loss(const Matrix<S>& reps, std::span<const int> labels, S tau);

/// Mean cross-entropy of softmax(logits) against integer labels, through a
/// stable log-softmax. Gradient is w.r.t. the logits.
template <class S>
LossResult<S> supervised_ce_loss(const Matrix<S>& logits, std::span<const int> labels);

/// Weak-view probabilities, strong-view logits and the confidence threshold.
template <class S>
struct PseudoLabelBatch {
  const Matrix<S>& weak_probs;
  const Matrix<S>& strong_logits;
  S threshold;
};

template <class S>
struct PseudoLabelResult {
  S value = S(0);
  int confident = 0;
  Matrix<S> grad;  ///< w.r.t. strong logits; weak probabilities are constants
};

/// (1/B) sum_i 1(max q_w_i > c) * H(argmax q_w_i, softmax(strong_logits_i)).
/// The denominator is the full batch size B, and the inequality is strict.
template <class S>
PseudoLabelResult<S> pseudo_label_loss(const PseudoLabelBatch<S>& batch);

/// Count of rows whose largest probability is strictly above `threshold`.
template <class S>
int confident_count(const Matrix<S>& probs, S threshold);

struct LossWeights {
  double lambda1 = 1.0;   ///< unsupervised contrastive
  double lambda2 = 1.0;   ///< supervised cross-entropy
  double lambda3 = 0.08;  ///< supervised contrastive
  double lambda4 = 1.0;   ///< pseudo-label

  /// Throws Error(config) for a negative weight.
  void validate() const;
};

struct LossParts {
  double unsup_contrastive = 0.0;
  double supervised = 0.0;
  double sup_contrastive = 0.0;
  double pseudo_label = 0.0;
};

inline constexpr std::array<std::string_view, 4> kLossTermNames = {
    "unsup_contrastive", "supervised", "sup_contrastive", "pseudo_label"};

/// lambda1*L_u_cl + lambda2*L_s + lambda3*L_s_cl + lambda4*L_u_ssl. Throws
/// Error(numeric) naming the first non-finite part.
double total_loss(const LossParts& parts, const LossWeights& w);

}  // namespace almatch::losses
