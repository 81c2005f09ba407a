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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "almatch/error.hpp"
#include "almatch/losses.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using almatch::Error;
using almatch::ErrorCode;
using almatch::Matrix;
namespace L = almatch::losses;

using testing::code_of;

namespace {

// Unit vectors in the plane at the requested cosine to e1.
Matrix<double> at_cosines(std::initializer_list<double> sims) {
  Matrix<double> m(static_cast<Eigen::Index>(sims.size()) + 1, 2);
  m.row(0) << 1.0, 0.0;
  Eigen::Index i = 1;
  for (double s : sims) m.row(i++) << s, std::sqrt(1.0 - s * s);
  return m;
}

Matrix<double> random_probs(std::mt19937_64& gen, int n, int k) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix<double> p(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) p(i, j) = std::pow(u(gen), 6.0);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  const std::vector<double> v{0.3, -1.2, 2.0};
  const std::vector<double> neg{-0.3, 1.2, -2.0};
  CHECK(L::cosine_sim<double>(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(L::cosine_sim<double>(v, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> e1{1, 0}, e2{0, 1};
  CHECK(L::cosine_sim<double>(e1, e2) == 0.0);
  const std::vector<double> zero{0, 0};
  CHECK(code_of([&] { L::cosine_sim<double>(e1, zero); }) == ErrorCode::domain);
}

TEST_CASE("generic contrastive loss examples") {
  SUBCASE("no negatives gives zero") {
    L::ContrastiveBatchView<double> v{at_cosines({0.4, -0.2}), {{1, 2}, {}, {}}, {{}, {}, {}}, 0.07};
    CHECK(L::contrastive_loss(v, 0) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("one positive at 0.9, two negatives at 0.1, tau 0.07") {
    L::ContrastiveBatchView<double> v{at_cosines({0.9, 0.1, 0.1}), {{1}, {}, {}, {}},
                                      {{2, 3}, {}, {}, {}}, 0.07};
    const double lib = L::contrastive_loss(v, 0);
    const double ref = oracle::generic_contrastive(oracle::to_rows(v.reps), 0, {1}, {2, 3}, 0.07);
    // log(1 + 2 exp(-0.8 / 0.07)), evaluated to 30 digits.
    CHECK(std::abs(ref - 2.17600436924586508e-05) < 1e-15);
    CHECK(std::abs(lib - ref) < 1e-6);
    CHECK(std::abs(lib - 2.17600436924586508e-05) < 1e-12);
  }
  SUBCASE("equal similarities give log n") {
    for (int n : {2, 3, 7}) {
      Matrix<double> reps = Matrix<double>::Zero(n + 1, 2);
      for (int i = 0; i <= n; ++i) reps.row(i) << 1.0, 0.0;
      std::vector<int> neg(n - 1);
      std::iota(neg.begin(), neg.end(), 2);
      std::vector<std::vector<int>> pos(n + 1), negs(n + 1);
      pos[0] = {1};
      negs[0] = neg;
      L::ContrastiveBatchView<double> v{reps, pos, negs, 0.5};
      CHECK(L::contrastive_loss(v, 0) == doctest::Approx(std::log(n)).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    L::ContrastiveBatchView<double> v{at_cosines({0.4}), {{}, {}}, {{1}, {}}, 0.07};
    CHECK(code_of([&] { L::contrastive_loss(v, 0); }) == ErrorCode::domain);
    L::ContrastiveBatchView<double> t{at_cosines({0.4}), {{1}, {}}, {{}, {}}, 0.0};
    CHECK(code_of([&] { L::contrastive_loss(t, 0); }) == ErrorCode::config);
    L::ContrastiveBatchView<double> self{at_cosines({0.4}), {{0}, {}}, {{1}, {}}, 0.07};
    CHECK(code_of([&] { L::contrastive_loss(self, 0); }) == ErrorCode::domain);
  }
}

TEST_CASE("unsupervised contrastive loss") {
  std::mt19937_64 gen(11);
  SUBCASE("B_U = 2 matches the scalar oracle") {
    for (int t = 0; t < 50; ++t) {
      const auto rows = oracle::random_rows(gen, 4, 5);
      const auto r = L::unsup_contrastive_loss<double>(oracle::to_matrix(rows), 0.07);
      CHECK(std::abs(r.value - oracle::unsup_contrastive(rows, 0.07)) < 1e-6);
    }
  }
  SUBCASE("equals single-positive NT-Xent") {
    for (int t = 0; t < 50; ++t) {
      const auto rows = oracle::random_rows(gen, 8, 6);
      const auto r = L::unsup_contrastive_loss<double>(oracle::to_matrix(rows), 0.2);
      CHECK(std::abs(r.value - oracle::nt_xent(rows, 0.2)) < 1e-6);
    }
  }
  SUBCASE("pair order does not matter") {
    const auto rows = oracle::random_rows(gen, 8, 3);
    oracle::Rows swapped = {rows[4], rows[5], rows[0], rows[1], rows[6], rows[7], rows[2], rows[3]};
    const double a = L::unsup_contrastive_loss<double>(oracle::to_matrix(rows), 0.07).value;
    const double b = L::unsup_contrastive_loss<double>(oracle::to_matrix(swapped), 0.07).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  SUBCASE("positive rescaling of a row does not matter") {
    auto m = oracle::to_matrix(oracle::random_rows(gen, 6, 4));
    const double a = L::unsup_contrastive_loss<double>(m, 0.1).value;
    m.row(3) *= 17.5;
    const double b = L::unsup_contrastive_loss<double>(m, 0.1).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  SUBCASE("odd view count is rejected") {
    const auto m = oracle::to_matrix(oracle::random_rows(gen, 5, 3));
    CHECK(code_of([&] { L::unsup_contrastive_loss<double>(m, 0.07); }) == ErrorCode::domain);
  }
}

TEST_CASE("supervised cross-entropy") {
  SUBCASE("confident correct prediction is ~0") {
    Matrix<double> logits = Matrix<double>::Zero(2, 10);
    logits(0, 3) = 80.0;
    logits(1, 7) = 80.0;
    const std::vector<int> labels{3, 7};
    CHECK(L::supervised_ce_loss<double>(logits, labels).value < 1e-30);
  }
  SUBCASE("uniform prediction over 10 classes is ln 10") {
    const Matrix<double> logits = Matrix<double>::Constant(4, 10, 0.25);
    const std::vector<int> labels{0, 3, 9, 5};
    CHECK(L::supervised_ce_loss<double>(logits, labels).value ==
          doctest::Approx(2.302585092994046).epsilon(1e-14));
  }
  SUBCASE("random batches match the scalar oracle") {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 50; ++t) {
      const auto rows = oracle::random_rows(gen, 6, 4);
      std::vector<int> labels(6);
      for (int& l : labels) l = static_cast<int>(gen() % 4);
      const double lib = L::supervised_ce_loss<double>(oracle::to_matrix(rows), labels).value;
      CHECK(std::abs(lib - oracle::cross_entropy(rows, labels)) < 1e-6);
    }
  }
  SUBCASE("label out of range") {
    const Matrix<double> logits = Matrix<double>::Zero(1, 3);
    const std::vector<int> bad{3};
    CHECK(code_of([&] { L::supervised_ce_loss<double>(logits, bad); }) == ErrorCode::domain);
  }
}

TEST_CASE("supervised contrastive loss") {
  std::mt19937_64 gen(17);
  SUBCASE("a single class has no negatives") {
    const auto m = oracle::to_matrix(oracle::random_rows(gen, 8, 3));
    const std::vector<int> labels{2, 2, 2, 2};
    CHECK(L::sup_contrastive_loss<double>(m, labels, 0.07).value ==
          doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("labels (0, 0, 1) match the scalar oracle") {
    const std::vector<int> labels{0, 0, 1};
    for (int t = 0; t < 50; ++t) {
      const auto rows = oracle::random_rows(gen, 6, 4);
      const double lib = L::sup_contrastive_loss<double>(oracle::to_matrix(rows), labels, 0.07).value;
      CHECK(std::abs(lib - oracle::sup_contrastive(rows, labels, 0.07)) < 1e-6);
    }
  }
  SUBCASE("relabeling by a permutation") {
    const auto m = oracle::to_matrix(oracle::random_rows(gen, 10, 4));
    const std::vector<int> a{0, 1, 2, 1, 0}, b{2, 0, 1, 0, 2};
    CHECK(L::sup_contrastive_loss<double>(m, a, 0.1).value ==
          doctest::Approx(L::sup_contrastive_loss<double>(m, b, 0.1).value).epsilon(1e-13));
  }
  SUBCASE("non-positive temperature") {
    const auto m = oracle::to_matrix(oracle::random_rows(gen, 4, 2));
    const std::vector<int> labels{0, 1};
    CHECK(code_of([&] { L::sup_contrastive_loss<double>(m, labels, -1.0); }) == ErrorCode::config);
  }
}

TEST_CASE("pseudo-label loss") {
  SUBCASE("max weak probability 0.94 everywhere with c = 0.95") {
    Matrix<double> weak(3, 3);
    weak << 0.94, 0.03, 0.03, 0.03, 0.94, 0.03, 0.02, 0.04, 0.94;
    const Matrix<double> strong = Matrix<double>::Random(3, 3);
    const auto r = L::pseudo_label_loss<double>({weak, strong, 0.95});
    CHECK(r.value == 0.0);
    CHECK(r.confident == 0);
    CHECK(r.grad.isZero(0.0));
  }
  SUBCASE("confident sample whose strong view is one-hot on the pseudo-label") {
    Matrix<double> weak(2, 3);
    weak << 0.96, 0.02, 0.02, 0.5, 0.3, 0.2;
    Matrix<double> strong = Matrix<double>::Zero(2, 3);
    strong(0, 0) = 80.0;
    const auto r = L::pseudo_label_loss<double>({weak, strong, 0.95});
    CHECK(r.confident == 1);
    CHECK(r.value < 1e-30);
  }
  SUBCASE("denominator is the batch size") {
    Matrix<double> weak(4, 2);
    weak << 0.99, 0.01, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
    const Matrix<double> strong = Matrix<double>::Zero(4, 2);
    const auto r = L::pseudo_label_loss<double>({weak, strong, 0.95});
    CHECK(r.value == doctest::Approx(std::log(2.0) / 4.0).epsilon(1e-14));
  }
  SUBCASE("random batches of four match the scalar oracle") {
    std::mt19937_64 gen(23);
    for (int t = 0; t < 50; ++t) {
      const Matrix<double> weak = random_probs(gen, 4, 5);
      const auto strong_rows = oracle::random_rows(gen, 4, 5);
      const Matrix<double> strong = oracle::to_matrix(strong_rows);
      const double c = 0.3 + 0.1 * (t % 5);
      const auto lib = L::pseudo_label_loss<double>({weak, strong, c});
      const auto ref = oracle::pseudo_label(oracle::to_rows(weak), strong_rows, c);
      CHECK(std::abs(lib.value - ref.value) < 1e-6);
      CHECK(lib.confident == ref.confident);
    }
  }
}

TEST_CASE("threshold is a strict inequality") {
  Matrix<double> weak(2, 2);
  weak << 0.95, 0.05, 0.9500001, 0.0499999;
  CHECK(L::confident_count<double>(weak, 0.95) == 1);
  const Matrix<double> strong = Matrix<double>::Zero(2, 2);
  const auto r = L::pseudo_label_loss<double>({weak, strong, 0.95});
  CHECK(r.confident == 1);
  CHECK(r.grad.row(0).isZero(0.0));
  CHECK_FALSE(r.grad.row(1).isZero(0.0));
  Matrix<double> one(1, 2);
  one << 1.0, 0.0;
  CHECK(L::confident_count<double>(one, 1.0) == 0);
}

TEST_CASE("total loss") {
  const L::LossParts ones{1, 1, 1, 1};
  CHECK(L::total_loss(ones, {0, 0, 0, 0}) == 0.0);
  CHECK(L::total_loss(ones, {1, 1, 0.08, 1}) == doctest::Approx(3.08).epsilon(1e-15));
  CHECK(L::total_loss(ones, L::LossWeights{}) == doctest::Approx(3.08).epsilon(1e-15));
  const L::LossParts p{0.7, 1.3, 2.9, 0.4};
  const L::LossWeights w{0.5, 1.5, 0.08, 2.0};
  const L::LossWeights w2{1.0, 3.0, 0.16, 4.0};
  CHECK(L::total_loss(p, w2) == doctest::Approx(2.0 * L::total_loss(p, w)).epsilon(1e-14));

  L::LossParts bad = ones;
  bad.sup_contrastive = std::numeric_limits<double>::quiet_NaN();
  try {
    L::total_loss(bad, L::LossWeights{});
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
    CHECK(std::string(e.what()).find("sup_contrastive") != std::string::npos);
  }
  CHECK(code_of([] { L::LossWeights{1, -1, 0, 0}.validate(); }) == ErrorCode::config);
}

TEST_CASE("losses are non-negative on random batches") {
  std::mt19937_64 gen(99);
  for (int t = 0; t < 30; ++t) {
    const auto m = oracle::to_matrix(oracle::random_rows(gen, 8, 4));
    const std::vector<int> labels{0, 1, 0, 2};
    CHECK(L::unsup_contrastive_loss<double>(m, 0.07).value >= 0.0);
    CHECK(L::sup_contrastive_loss<double>(m, labels, 0.07).value >= 0.0);
    CHECK(L::supervised_ce_loss<double>(m.topRows(4).leftCols(3), labels).value >= 0.0);
  }
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 gen(2024);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    const auto reps = oracle::to_matrix(oracle::random_rows(gen, 6, 4));
    const std::vector<int> labels{0, 1, static_cast<int>(t % 2)};

    const auto u = L::unsup_contrastive_loss<double>(reps, 0.5);
    const auto nu = oracle::numeric_gradient(
        [](const Matrix<double>& x) { return L::unsup_contrastive_loss<double>(x, 0.5).value; }, reps, h);
    CHECK(oracle::max_relative_error(u.grad, nu) < 1e-4);

    const auto s = L::sup_contrastive_loss<double>(reps, labels, 0.5);
    const auto ns = oracle::numeric_gradient(
        [&](const Matrix<double>& x) { return L::sup_contrastive_loss<double>(x, labels, 0.5).value; },
        reps, h);
    CHECK(oracle::max_relative_error(s.grad, ns) < 1e-4);

    const auto logits = oracle::to_matrix(oracle::random_rows(gen, 3, 4));
    const auto ce = L::supervised_ce_loss<double>(logits, labels);
    const auto nce = oracle::numeric_gradient(
        [&](const Matrix<double>& x) { return L::supervised_ce_loss<double>(x, labels).value; }, logits, h);
    CHECK(oracle::max_relative_error(ce.grad, nce) < 1e-4);

    const Matrix<double> weak = random_probs(gen, 4, 4);
    const auto strong = oracle::to_matrix(oracle::random_rows(gen, 4, 4));
    const auto pl = L::pseudo_label_loss<double>({weak, strong, 0.4});
    const auto npl = oracle::numeric_gradient(
        [&](const Matrix<double>& x) { return L::pseudo_label_loss<double>({weak, x, 0.4}).value; },
        strong, h);
    CHECK(oracle::max_relative_error(pl.grad, npl) < 1e-4);
  }
}
