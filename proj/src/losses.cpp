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

#include "almatch/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "almatch/error.hpp"

namespace almatch::losses {

namespace {

// log(sum(exp(v[i]))) over the selected entries, shifted by their maximum.
template <class S, class Pred>
S masked_logsumexp(const S* v, int n, Pred keep) {
  S mx = -std::numeric_limits<S>::infinity();
  for (int i = 0; i < n; ++i) {
    if (keep(i)) mx = std::max(mx, v[i]);
  }
  if (!std::isfinite(mx)) return mx;
  S acc = S(0);
  for (int i = 0; i < n; ++i) {
    if (keep(i)) acc += std::exp(v[i] - mx);
  }
  return mx + std::log(acc);
}

template <class S>
S row_logsumexp(const Matrix<S>& m, Eigen::Index row) {
  const S mx = m.row(row).maxCoeff();
  return mx + std::log((m.row(row).array() - mx).exp().sum());
}

template <class S>
void check_tau(S tau) {
  require(tau > S(0), ErrorCode::config, "contrastive temperature must be positive");
}

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, 1> row_norms(const Matrix<S>& m) {
  Eigen::Matrix<S, Eigen::Dynamic, 1> norms = m.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    require(norms(i) > S(0), ErrorCode::domain,
            "representation " + std::to_string(i) + " is the zero vector");
  }
  return norms;
}

}  // namespace

template <class S>
S cosine_sim(std::span<const S> a, std::span<const S> b) {
  require(a.size() == b.size(), ErrorCode::domain, "cosine_sim: length mismatch");
  S dot = S(0);
  S na = S(0);
  S nb = S(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > S(0) && nb > S(0), ErrorCode::domain, "cosine_sim: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), S(-1), S(1));
}

template <class S>
void ContrastiveBatchView<S>::validate() const {
  check_tau(tau);
  const auto n = static_cast<int>(reps.rows());
  require(positives.size() == static_cast<std::size_t>(n) &&
              negatives.size() == static_cast<std::size_t>(n),
          ErrorCode::domain, "one positive and one negative set per anchor required");
  for (int a = 0; a < n; ++a) {
    std::vector<char> role(static_cast<std::size_t>(n), 0);
    for (int p : positives[a]) {
      require(p >= 0 && p < n && p != a && role[p] == 0, ErrorCode::domain,
              "bad positive index for anchor " + std::to_string(a));
      role[p] = 1;
    }
    for (int q : negatives[a]) {
      require(q >= 0 && q < n && q != a && role[q] != 1, ErrorCode::domain,
              "negative overlaps positives for anchor " + std::to_string(a));
      require(role[q] == 0, ErrorCode::domain,
              "duplicate negative for anchor " + std::to_string(a));
      role[q] = 2;
    }
  }
}

template <class S>
S contrastive_loss(const ContrastiveBatchView<S>& view, int anchor) {
  check_tau(view.tau);
  require(anchor >= 0 && anchor < view.reps.rows(), ErrorCode::domain, "anchor out of range");
  const auto& pos = view.positives.at(static_cast<std::size_t>(anchor));
  const auto& neg = view.negatives.at(static_cast<std::size_t>(anchor));
  require(!pos.empty(), ErrorCode::domain,
          "anchor " + std::to_string(anchor) + " has no positives");
  const auto n = view.reps.rows();
  for (int p : pos) {
    require(p >= 0 && p < n && p != anchor, ErrorCode::domain,
            "bad positive index for anchor " + std::to_string(anchor));
  }
  for (int q : neg) {
    require(q >= 0 && q < n && q != anchor &&
                std::find(pos.begin(), pos.end(), q) == pos.end(),
            ErrorCode::domain, "bad negative index for anchor " + std::to_string(anchor));
  }

  const auto d = static_cast<std::size_t>(view.reps.cols());
  const std::span<const S> a(view.reps.row(anchor).data(), d);
  std::vector<S> logits;
  logits.reserve(pos.size() + neg.size());
  for (int p : pos) logits.push_back(cosine_sim(a, std::span<const S>(view.reps.row(p).data(), d)) / view.tau);
  for (int q : neg) logits.push_back(cosine_sim(a, std::span<const S>(view.reps.row(q).data(), d)) / view.tau);
  const int np = static_cast<int>(pos.size());
  const int nall = static_cast<int>(logits.size());
  const S lse_pos = masked_logsumexp(logits.data(), nall, [&](int i) { return i < np; });
  const S lse_all = masked_logsumexp(logits.data(), nall, [](int) { return true; });
  return -(lse_pos - lse_all) / static_cast<S>(np);
}

template <class S>
LossResult<S> grouped_contrastive_loss(const Matrix<S>& reps, std::span<const int> groups,
                                       S tau) {
  check_tau(tau);
  const auto n = static_cast<int>(reps.rows());
  require(static_cast<std::size_t>(n) == groups.size(), ErrorCode::domain,
          "one group id per representation required");
  LossResult<S> out;
  out.grad = Matrix<S>::Zero(reps.rows(), reps.cols());
  if (n == 0) return out;

  const auto norms = row_norms(reps);
  const Matrix<S> unit = reps.array().colwise() / norms.array();
  const Matrix<S> logits = (unit * unit.transpose()) / tau;

  Matrix<S> dsim = Matrix<S>::Zero(n, n);
  S total = S(0);
  for (int a = 0; a < n; ++a) {
    const S* row = logits.row(a).data();
    auto is_pos = [&](int j) { return j != a && groups[j] == groups[a]; };
    auto is_any = [&](int j) { return j != a; };
    int np = 0;
    for (int j = 0; j < n; ++j) np += is_pos(j) ? 1 : 0;
    // Every image contributes two views, so the sibling view is always a
    // positive; an empty set means the caller broke the pair layout.
    require(np > 0, ErrorCode::domain, "anchor " + std::to_string(a) + " has no positives");
    const S lse_pos = masked_logsumexp(row, n, is_pos);
    const S lse_all = masked_logsumexp(row, n, is_any);
    total += -(lse_pos - lse_all) / static_cast<S>(np);

    const S scale = S(-1) / (static_cast<S>(np) * tau * static_cast<S>(n));
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const S p_all = std::exp(row[j] - lse_all);
      const S p_pos = is_pos(j) ? std::exp(row[j] - lse_pos) : S(0);
      dsim(a, j) = scale * (p_pos - p_all);
    }
  }
  out.value = total / static_cast<S>(n);

  const Matrix<S> dunit = (dsim + dsim.transpose()) * unit;
  const auto radial = (unit.array() * dunit.array()).rowwise().sum();
  out.grad = (dunit.array() - unit.array().colwise() * radial).colwise() / norms.array();
  return out;
}

template <class S>
LossResult<S> unsup_contrastive_loss(const Matrix<S>& reps, S tau) {
  require(reps.rows() % 2 == 0, ErrorCode::domain,
          "unsupervised contrastive loss needs an even number of views, got " +
              std::to_string(reps.rows()));
  std::vector<int> groups(static_cast<std::size_t>(reps.rows()));
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = static_cast<int>(i / 2);
  return grouped_contrastive_loss<S>(reps, groups, tau);
}

template <class S>
LossResult<S> sup_contrastive_loss(const Matrix<S>& reps, std::span<const int> labels, S tau) {
  require(reps.rows() == static_cast<Eigen::Index>(2 * labels.size()), ErrorCode::domain,
          "supervised contrastive loss needs two views per label");
  std::vector<int> groups(static_cast<std::size_t>(reps.rows()));
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = labels[i / 2];
  return grouped_contrastive_loss<S>(reps, groups, tau);
}

template <class S>
LossResult<S> supervised_ce_loss(const Matrix<S>& logits, std::span<const int> labels) {
  require(logits.rows() == static_cast<Eigen::Index>(labels.size()), ErrorCode::domain,
          "one label per prediction required");
  LossResult<S> out;
  out.grad = Matrix<S>::Zero(logits.rows(), logits.cols());
  const auto n = logits.rows();
  if (n == 0) return out;
  S total = S(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < logits.cols(), ErrorCode::domain,
            "label " + std::to_string(y) + " out of range");
    const S lse = row_logsumexp(logits, i);
    total += lse - logits(i, y);
    out.grad.row(i) = (logits.row(i).array() - lse).exp().matrix() / static_cast<S>(n);
    out.grad(i, y) -= S(1) / static_cast<S>(n);
  }
  out.value = total / static_cast<S>(n);
  return out;
}

template <class S>
int confident_count(const Matrix<S>& probs, S threshold) {
  int count = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).maxCoeff() > threshold) ++count;
  }
  return count;
}

template <class S>
PseudoLabelResult<S> pseudo_label_loss(const PseudoLabelBatch<S>& batch) {
  const auto& weak = batch.weak_probs;
  const auto& strong = batch.strong_logits;
  require(weak.rows() == strong.rows() && weak.cols() == strong.cols(), ErrorCode::domain,
          "weak and strong predictions must have the same shape");
  PseudoLabelResult<S> out;
  out.grad = Matrix<S>::Zero(strong.rows(), strong.cols());
  const auto n = weak.rows();
  if (n == 0) return out;
  S total = S(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index target = 0;
    const S confidence = weak.row(i).maxCoeff(&target);
    if (!(confidence > batch.threshold)) continue;
    ++out.confident;
    const S lse = row_logsumexp(strong, i);
    total += lse - strong(i, target);
    out.grad.row(i) = (strong.row(i).array() - lse).exp().matrix() / static_cast<S>(n);
    out.grad(i, target) -= S(1) / static_cast<S>(n);
  }
  out.value = total / static_cast<S>(n);
  return out;
}

void LossWeights::validate() const {
  require(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0 && lambda4 >= 0, ErrorCode::config,
          "loss weights must be non-negative");
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  const std::array<double, 4> values = {parts.unsup_contrastive, parts.supervised,
                                        parts.sup_contrastive, parts.pseudo_label};
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), ErrorCode::numeric,
            "non-finite loss term " + std::string(kLossTermNames[i]));
  }
  return w.lambda1 * parts.unsup_contrastive + w.lambda2 * parts.supervised +
         w.lambda3 * parts.sup_contrastive + w.lambda4 * parts.pseudo_label;
}

#define ALMATCH_INSTANTIATE_LOSSES(S)                                                          \
  template S cosine_sim<S>(std::span<const S>, std::span<const S>);                            \
  template struct ContrastiveBatchView<S>;                                                     \
  template S contrastive_loss<S>(const ContrastiveBatchView<S>&, int);                         \
  template LossResult<S> grouped_contrastive_loss<S>(const Matrix<S>&, std::span<const int>,   \
                                                     S);                                       \
  template LossResult<S> unsup_contrastive_loss<S>(const Matrix<S>&, S);                       \
  template LossResult<S> sup_contrastive_loss<S>(const Matrix<S>&, std::span<const int>, S);   \
  template LossResult<S> supervised_ce_loss<S>(const Matrix<S>&, std::span<const int>);        \
  template int confident_count<S>(const Matrix<S>&, S);                                        \
  template PseudoLabelResult<S> pseudo_label_loss<S>(const PseudoLabelBatch<S>&);

ALMATCH_INSTANTIATE_LOSSES(float)
ALMATCH_INSTANTIATE_LOSSES(double)

#undef ALMATCH_INSTANTIATE_LOSSES

}  // namespace almatch::losses
