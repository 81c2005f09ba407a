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
#include <fstream>
#include <random>
#include <sstream>

#include "almatch/datasets.hpp"
#include "almatch/losses.hpp"
#include "almatch/model.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace almatch;
using testing::code_of;

namespace {

ArchSpec small_conv() {
  ArchSpec a;
  a.kind = ArchSpec::Kind::conv;
  a.image_side = 4;
  a.image_channels = 2;
  a.conv_channels = {3};
  a.proj_hidden = 8;
  a.proj_dim = 2;
  a.num_classes = 2;
  return a;
}

ArchSpec small_mlp(int side = 4) {
  ArchSpec a;
  a.kind = ArchSpec::Kind::mlp;
  a.image_side = side;
  a.image_channels = 1;
  a.mlp_hidden = {8};
  a.proj_hidden = 8;
  a.proj_dim = 3;
  a.num_classes = 3;
  return a;
}

template <class S>
Matrix<S> random_input(std::mt19937_64& gen, int n, int d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix<S> x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = static_cast<S>(u(gen));
  return x;
}

// Scalar objective <R, reps> + <Q, logits> for a fixed pair of random weights.
double objective(const EncoderNet<double>& net, const Matrix<double>& x, const Matrix<double>& r,
                 const Matrix<double>& q) {
  const auto pass = net.forward(x, Mode::eval);
  return (pass.reps.array() * r.array()).sum() + (pass.logits.array() * q.array()).sum();
}

void check_param_gradients(const ArchSpec& arch, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  EncoderNet<double> net(arch, seed);
  const auto x = random_input<double>(gen, 3, net.input_size());
  const auto r = oracle::to_matrix(oracle::random_rows(gen, 3, arch.proj_dim));
  const auto q = oracle::to_matrix(oracle::random_rows(gen, 3, arch.num_classes));
  const auto pass = net.forward(x, Mode::train);
  const auto g = net.backward(pass, r, q);
  REQUIRE(g.grads.size() == net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    CAPTURE(net.parameters()[i].name);
    auto& w = net.parameters()[i].value;
    const auto numeric = oracle::numeric_gradient(
        [&](const Matrix<double>& v) {
          const Matrix<double> saved = w;
          w = v;
          const double f = objective(net, x, r, q);
          w = saved;
          return f;
        },
        w, 1e-6);
    CHECK(oracle::max_relative_error(g.grads[i], numeric, 1e-4) < 1e-4);
  }
}

}  // namespace

TEST_CASE("heads produce unit projections and probability rows") {
  std::mt19937_64 gen(1);
  for (const auto& arch : {small_conv(), small_mlp()}) {
    EncoderNet<float> net(arch, 3);
    const auto x = random_input<float>(gen, 7, net.input_size());
    const auto pass = net.forward(x, Mode::eval);
    REQUIRE(pass.reps.rows() == 7);
    REQUIRE(pass.reps.cols() == arch.proj_dim);
    const auto probs = pass.probs();
    for (int i = 0; i < 7; ++i) {
      CHECK(pass.reps.row(i).norm() == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(probs.row(i).minCoeff() >= 0.0f);
    }
  }
}

TEST_CASE("eval forward is deterministic and row-independent") {
  std::mt19937_64 gen(2);
  EncoderNet<float> net(small_conv(), 9);
  const auto x = random_input<float>(gen, 5, net.input_size());
  const auto a = net.forward(x, Mode::eval);
  const auto b = net.forward(x, Mode::eval);
  CHECK(a.logits == b.logits);
  CHECK(a.reps == b.reps);
  const Matrix<float> one = x.topRows(1);
  const auto c = net.forward(one, Mode::eval);
  CHECK((c.logits.row(0) - a.logits.row(0)).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("same seed gives the same initial parameters") {
  EncoderNet<float> a(small_conv(), 4), b(small_conv(), 4), c(small_conv(), 5);
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
    differs = differs || a.parameters()[i].value != c.parameters()[i].value;
  }
  CHECK(differs);
}

TEST_CASE("input shape mismatch") {
  EncoderNet<float> net(small_mlp(), 0);
  const Matrix<float> x = Matrix<float>::Zero(2, net.input_size() + 1);
  CHECK(code_of([&] { net.forward(x, Mode::eval); }) == ErrorCode::config);
  ArchSpec bad = small_conv();
  bad.image_side = 6;
  bad.conv_channels = {2, 2};
  CHECK(code_of([&] { EncoderNet<float> n(bad, 0); }) == ErrorCode::config);
}

TEST_CASE("parameter gradients match central differences") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    check_param_gradients(small_conv(), s);
    check_param_gradients(small_mlp(), s);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  std::mt19937_64 gen(8);
  EncoderNet<float> net(small_mlp(), 1);
  const auto before = net.parameters();
  const auto x = random_input<float>(gen, 4, net.input_size());
  const auto pass = net.forward(x, Mode::train);
  const std::vector<int> labels{0, 1, 2, 0};
  const auto ce = losses::supervised_ce_loss<float>(pass.logits, labels);
  const auto g = net.backward(pass, Matrix<float>(), ce.grad);
  Sgd<float> opt;
  opt.step(net, g, 0.0f, kAllGroups);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(net.parameters()[i].value == before[i].value);
  }
}

TEST_CASE("groups outside the update list are untouched") {
  std::mt19937_64 gen(9);
  EncoderNet<float> net(small_mlp(), 1);
  const auto before = net.parameters();
  const auto x = random_input<float>(gen, 4, net.input_size());
  const auto pass = net.forward(x, Mode::train);
  const std::vector<int> labels{0, 1, 2, 0};
  const auto ce = losses::supervised_ce_loss<float>(pass.logits, labels);
  const auto un = losses::unsup_contrastive_loss<float>(pass.reps, 0.5f);
  const auto g = net.backward(pass, un.grad, ce.grad);
  Sgd<float> opt;
  opt.step(net, g, 0.1f, kRepresentationGroups);
  bool trunk_moved = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool same = net.parameters()[i].value == before[i].value;
    if (before[i].group == ParamGroup::classifier) CHECK(same);
    if (before[i].group == ParamGroup::trunk) trunk_moved = trunk_moved || !same;
  }
  CHECK(trunk_moved);
}

TEST_CASE("sgd descends a cross-entropy objective") {
  std::mt19937_64 gen(10);
  EncoderNet<double> net(small_mlp(), 2);
  const auto x = random_input<double>(gen, 12, net.input_size());
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) labels[i] = i % 3;
  Sgd<double> opt(0.9, 0.0);
  auto loss = [&] {
    return losses::supervised_ce_loss<double>(net.forward(x, Mode::eval).logits, labels).value;
  };
  const double start = loss();
  for (int it = 0; it < 200; ++it) {
    const auto pass = net.forward(x, Mode::train);
    const auto ce = losses::supervised_ce_loss<double>(pass.logits, labels);
    opt.step(net, net.backward(pass, Matrix<double>(), ce.grad), 0.05, kAllGroups);
  }
  CHECK(loss() < 0.5 * start);
}

TEST_CASE("non-finite gradient is rejected") {
  EncoderNet<float> net(small_mlp(), 0);
  auto g = net.zero_gradients();
  g.grads[0](0, 0) = std::numeric_limits<float>::infinity();
  Sgd<float> opt;
  CHECK(code_of([&] { opt.step(net, g, 0.1f, kAllGroups); }) == ErrorCode::numeric);
}

TEST_CASE("float and double nets agree after a cast") {
  std::mt19937_64 gen(12);
  EncoderNet<double> d(small_conv(), 6);
  const EncoderNet<float> f = d.cast<float>();
  const auto x = random_input<double>(gen, 3, d.input_size());
  const auto a = d.forward(x, Mode::eval);
  const auto b = f.forward(x.cast<float>(), Mode::eval);
  CHECK((a.logits - b.logits.cast<double>()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("embedding export") {
  testing::TempDir dir("model-export");
  const Dataset ds = make_synthetic_blobs(3, 100, 8, 5);
  ArchSpec arch = small_mlp(8);
  arch.image_channels = 3;
  const EncoderNet<float> net(arch, 1);
  export_embeddings(net, ds, dir / "a.csv", 64);
  export_embeddings(net, ds, dir / "b.csv", 64);
  const std::string a = testing::read_file(dir / "a.csv");
  CHECK(a == testing::read_file(dir / "b.csv"));

  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,label,r0,r1,r2");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto cols = std::count(line.begin(), line.end(), ',') + 1;
    CHECK(cols == arch.proj_dim + 2);
    ++rows;
  }
  CHECK(rows == 300);

  // A different chunking may change GEMM blocking, so compare numerically.
  export_embeddings(net, ds, dir / "c.csv", 17);
  std::istringstream ia(a), ic(testing::read_file(dir / "c.csv"));
  std::string la, lc;
  double worst = 0.0;
  while (std::getline(ia, la) && std::getline(ic, lc)) {
    if (la.starts_with("index")) continue;
    std::replace(la.begin(), la.end(), ',', ' ');
    std::replace(lc.begin(), lc.end(), ',', ' ');
    std::istringstream sa(la), sc(lc);
    double va = 0, vc = 0;
    while (sa >> va && sc >> vc) worst = std::max(worst, std::abs(va - vc));
  }
  CHECK(worst < 1e-5);
  CHECK(code_of([&] { export_embeddings(net, ds, dir / "missing" / "x.csv"); }) == ErrorCode::io);
}
