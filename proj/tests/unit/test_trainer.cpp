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
#include <atomic>
#include <cmath>
#include <sstream>

#include "almatch/augment.hpp"
#include "almatch/checkpoint.hpp"
#include "almatch/losses.hpp"
#include "almatch/trainer.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace almatch;
using testing::code_of;
using json = nlohmann::json;

namespace {

// 60 training images, 57 in the pool after n0 = 3, so an epoch is 8 steps.
TrainConfig tiny_config(const std::filesystem::path& out) {
  TrainConfig c = TrainConfig::parse(R"(
data.dataset = blobs
data.blobs.classes = 3
data.blobs.per_class = 20
data.blobs.test_per_class = 10
data.blobs.side = 8
train.steps = 60
train.warmup_epochs = 1
train.batch_labeled = 4
train.batch_unlabeled = 8
train.eval_every = 20
active.n0 = 3
active.budget = 9
active.b_smp = 10
model.arch = mlp
model.hidden = 16
model.proj_hidden = 8
model.proj_dim = 4
)");
  c.out_dir = out;
  return c;
}

struct Fixture {
  TrainConfig cfg;
  Dataset train, test;
  explicit Fixture(const TrainConfig& c) : cfg(c) {
    std::tie(train, test) = load_datasets(cfg.data, cfg.seed);
  }
};

std::vector<json> read_lines(const std::filesystem::path& p) {
  std::istringstream in(testing::read_file(p));
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

// Answers the first `pass` queries, then times out on every later one.
class FlakyOracle final : public Oracle {
 public:
  FlakyOracle(const Dataset& ds, int pass) : sim_(ds), pass_(pass) {}
  LabelAnswer ask(const LabelQuery& q, std::chrono::milliseconds t) override {
    if (calls_++ >= pass_) throw Error(ErrorCode::timeout, "no answer");
    return sim_.ask(q, t);
  }

 private:
  SimulatedOracle sim_;
  int pass_;
  int calls_ = 0;
};

// A linear classifier on a one-pixel image that reads the class off the
// pixel value: perfect on inputs 0.1, 0.5, 0.9 for classes 0, 1, 2.
EncoderNet<float> threshold_net() {
  ArchSpec a;
  a.kind = ArchSpec::Kind::mlp;
  a.image_side = 1;
  a.image_channels = 1;
  a.mlp_hidden = {1};
  a.proj_hidden = 2;
  a.proj_dim = 2;
  a.num_classes = 3;
  EncoderNet<float> net(a, 0);
  for (auto& p : net.parameters()) {
    if (p.name.starts_with("trunk.0.dense.weight")) p.value.setConstant(1.0f);
    if (p.name.starts_with("trunk.0.dense.bias")) p.value.setZero();
    if (p.name.starts_with("classifier.0.dense.weight")) p.value << 0.0f, 10.0f, 20.0f;
    if (p.name.starts_with("classifier.0.dense.bias")) p.value << 0.0f, -3.0f, -11.0f;
  }
  return net;
}

}  // namespace

TEST_CASE("cosine learning rate") {
  CHECK(cosine_lr(0, 1000, 0.03) == 0.03);
  CHECK(std::abs(cosine_lr(1000, 1000, 0.03) - 0.00585270966048384804) < 1e-15);
  CHECK(std::abs(cosine_lr(500, 1000, 0.03) - 0.03 * std::cos(7.0 * M_PI / 32.0)) < 1e-15);
  double prev = 1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double lr = cosine_lr(k, 1000, 0.03);
    CHECK(lr <= prev);
    CHECK(lr > 0.0);
    prev = lr;
  }
  CHECK(code_of([] { cosine_lr(1001, 1000, 0.03); }) == ErrorCode::domain);
  CHECK(code_of([] { cosine_lr(-1, 1000, 0.03); }) == ErrorCode::domain);
  CHECK(code_of([] { cosine_lr(0, 0, 0.03); }) == ErrorCode::domain);
}

TEST_CASE("evaluation") {
  Dataset ds;
  ds.num_classes = 3;
  for (int i = 0; i < 30; ++i) {
    Image img(1, 1, 1, i % 3 == 0 ? 0.1f : i % 3 == 1 ? 0.5f : 0.9f);
    ds.images.push_back(img);
    ds.labels.push_back(i % 3);
  }
  const EncoderNet<float> net = threshold_net();
  CHECK(evaluate(net, ds) == 1.0);
  CHECK(evaluate(net, ds, 7) == 1.0);

  Dataset shifted = ds;
  for (auto& l : shifted.labels) l = (l + 1) % 3;
  CHECK(evaluate(net, shifted) == 0.0);

  // An untrained net on balanced blobs sits near chance and is deterministic.
  const auto [train, test] = load_datasets(tiny_config("unused").data, 0);
  ArchSpec a;
  a.kind = ArchSpec::Kind::mlp;
  a.image_side = 8;
  a.num_classes = 3;
  const EncoderNet<float> fresh(a, 5);
  const double acc = evaluate(fresh, test);
  CHECK(acc == evaluate(fresh, test, 3));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("datasets from config") {
  DataConfig d;
  d.dataset = "blobs";
  d.blobs_classes = 4;
  d.blobs_per_class = 5;
  d.blobs_test_per_class = 3;
  d.blobs_side = 8;
  const auto [train, test] = load_datasets(d, 1);
  CHECK(train.size() == 20);
  CHECK(test.size() == 12);
  CHECK(test.split == Split::test);
  d.dataset = "cifar10";
  d.dir = "/nonexistent";
  CHECK(code_of([&] { load_datasets(d, 0); }) == ErrorCode::ingestion);
}

TEST_CASE("trainer construction checks") {
  testing::TempDir dir("trainer-ctor");
  Fixture f(tiny_config(dir.path()));
  f.cfg.active.label_budget = 60;
  f.cfg.steps = 600;
  CHECK(code_of([&] { Trainer t(f.cfg, f.train, f.test); }) == ErrorCode::config);
  Fixture g(tiny_config(dir.path()));
  Trainer t(g.cfg, g.train, g.test);
  CHECK(code_of([&] { t.joint_step(); }) == ErrorCode::state);
  CHECK(t.net().arch().num_classes == 3);
  CHECK(t.net().arch().image_side == 8);
}

TEST_CASE("warm-up leaves the classifier alone and asks nothing") {
  testing::TempDir dir("trainer-warmup");
  Fixture f(tiny_config(dir.path()));
  Trainer t(f.cfg, f.train, f.test);
  SimulatedOracle oracle(f.train);
  t.initialize(oracle);
  CHECK(t.phase() == Phase::warmup);
  CHECK(t.steps_per_epoch() == 8);
  CHECK(t.warmup_steps_total() == 8);
  const auto before = t.net().parameters();
  for (int i = 0; i < 8; ++i) {
    const auto m = t.warmup_step();
    CHECK(m.lr == f.cfg.lr0);
    CHECK(m.parts.supervised == 0.0);
    CHECK(m.parts.pseudo_label == 0.0);
  }
  CHECK(t.phase() == Phase::joint);
  CHECK(t.split().labeled().size() == 3);
  CHECK(t.query_events() == 0);
  bool trunk_moved = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool same = t.net().parameters()[i].value == before[i].value;
    if (before[i].group == ParamGroup::classifier) CHECK(same);
    if (before[i].group == ParamGroup::trunk) trunk_moved = trunk_moved || !same;
  }
  CHECK(trunk_moved);
  CHECK(code_of([&] { t.warmup_step(); }) == ErrorCode::state);
}

TEST_CASE("one warm-up epoch lowers the unsupervised contrastive loss") {
  // Fixed probe: contrastive pairs of the first 32 training images, scored
  // in eval mode before and after one epoch of warm-up.
  std::vector<double> deltas;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    testing::TempDir dir("trainer-warmup-drop-" + std::to_string(seed));
    TrainConfig c = tiny_config(dir.path());
    c.seed = seed;
    c.data.blobs_per_class = 60;
    c.batch_unlabeled = 32;
    c.active.n0 = 12;
    c.active.label_budget = 12;
    Fixture f(c);
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    t.initialize(oracle);

    std::vector<Image> views;
    Rng rng(100 + seed);
    for (int i = 0; i < 32; ++i) {
      auto [a, b] = contrastive_pair(f.cfg.contrastive, f.train.images[i], rng);
      views.push_back(std::move(a));
      views.push_back(std::move(b));
    }
    const Matrix<float> x = stack_images<float>(std::span<const Image>(views));
    auto probe = [&] {
      const auto pass = t.net().forward(x, Mode::eval);
      return static_cast<double>(losses::unsup_contrastive_loss<float>(pass.reps, 0.07f).value);
    };
    const double before = probe();
    for (std::int64_t i = 0; i < t.steps_per_epoch(); ++i) t.warmup_step();
    deltas.push_back(probe() - before);
  }
  std::sort(deltas.begin(), deltas.end());
  MESSAGE("median change in the probe loss: " << deltas[2]);
  CHECK(deltas[2] < 0.0);
}

TEST_CASE("joint step loss composition") {
  testing::TempDir dir("trainer-joint");
  SUBCASE("only the supervised weight") {
    TrainConfig c = tiny_config(dir.path());
    c.warmup_epochs = 0;
    c.weights = {0.0, 1.0, 0.0, 0.0};
    Fixture f(c);
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    t.initialize(oracle);
    REQUIRE(t.phase() == Phase::joint);
    const auto before = t.net().parameters();
    const auto m = t.joint_step();
    CHECK(m.total == m.parts.supervised);
    CHECK(m.parts.unsup_contrastive > 0.0);
    // The projection head receives no gradient, so only weight decay moves it.
    const float shrink = 1.0f - static_cast<float>(m.lr * c.weight_decay);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].group != ParamGroup::projection) continue;
      const Matrix<float> expect = before[i].value * shrink;
      CHECK((t.net().parameters()[i].value - expect).cwiseAbs().maxCoeff() < 1e-7f);
    }
  }
  SUBCASE("threshold 1 disables pseudo-labels") {
    TrainConfig c = tiny_config(dir.path());
    c.warmup_epochs = 0;
    c.confidence_threshold = 1.0;
    Fixture f(c);
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    t.initialize(oracle);
    for (int i = 0; i < 20; ++i) {
      const auto m = t.joint_step();
      CHECK(m.parts.pseudo_label == 0.0);
      CHECK(m.confident_fraction == 0.0);
    }
  }
  SUBCASE("all terms stay finite and non-negative") {
    TrainConfig c = tiny_config(dir.path());
    c.warmup_epochs = 0;
    c.steps = 200;
    c.confidence_threshold = 0.5;
    Fixture f(c);
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    t.initialize(oracle);
    int bad = 0;
    for (int i = 0; i < 200; ++i) {
      const auto m = t.joint_step();
      for (double v : {m.parts.unsup_contrastive, m.parts.supervised, m.parts.sup_contrastive,
                       m.parts.pseudo_label, m.total}) {
        if (!std::isfinite(v) || v < 0.0) ++bad;
      }
      const double expect = losses::total_loss(m.parts, c.weights);
      if (std::abs(m.total - expect) > 1e-12) ++bad;
    }
    CHECK(bad == 0);
    CHECK(t.phase() == Phase::done);
  }
}

TEST_CASE("full run bookkeeping") {
  testing::TempDir dir("trainer-run");
  Fixture f(tiny_config(dir.path()));
  Trainer t(f.cfg, f.train, f.test);
  std::vector<std::pair<Phase, double>> lrs;
  std::vector<std::size_t> label_trace;
  int conservation_failures = 0;
  t.on_step = [&](const Trainer& tr, const StepMetrics& m) {
    lrs.emplace_back(tr.phase(), m.lr);
    label_trace.push_back(tr.split().labeled().size());
    const auto& s = tr.split();
    if (!s.conserved() || s.labeled().size() + s.pool().size() != f.train.size()) ++conservation_failures;
  };
  SimulatedOracle oracle(f.train);
  const RunResult r = t.run(oracle);

  CHECK_FALSE(r.stopped);
  CHECK(r.labels == 9);
  CHECK(t.step() == 8 + 60);
  CHECK(t.joint_steps() == 60);
  CHECK(t.query_events() == 6);
  CHECK(conservation_failures == 0);
  CHECK(std::is_sorted(label_trace.begin(), label_trace.end()));
  for (const auto& ex : t.split().labeled()) CHECK(ex.label == f.train.labels[ex.index]);

  // Warm-up at lr0, then lr0 cos(7 pi k / 16K) for k = 0 .. K-1.
  REQUIRE(lrs.size() == 68);
  for (int i = 0; i < 8; ++i) CHECK(lrs[i].second == f.cfg.lr0);
  for (int k = 0; k < 60; ++k) CHECK(lrs[8 + k].second == cosine_lr(k, 60, f.cfg.lr0));

  const auto lines = read_lines(t.metrics_path());
  int evals = 0, queries = 0;
  for (const auto& l : lines) {
    if (l.at("type") == "eval") ++evals;
    if (l.at("type") == "query") ++queries;
  }
  CHECK(lines.front().at("type") == "init");
  CHECK(lines.front().at("labels") == 3);
  CHECK(queries == 6);
  CHECK(evals == 4);  // steps 20, 40, 60 and the final step 68
  CHECK(lines.back().at("type") == "eval");
  CHECK(lines.back().at("step") == 68);
  CHECK(lines.back().at("labels") == 9);
  CHECK(lines.back().at("test_accuracy") == r.final_accuracy);
  CHECK(r.metrics.records.size() == 4);
  CHECK(std::filesystem::exists(t.checkpoint_path()));
}

TEST_CASE("runs are deterministic") {
  testing::TempDir a("trainer-det-a"), b("trainer-det-b");
  auto run = [](const std::filesystem::path& out) {
    Fixture f(tiny_config(out));
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    t.run(oracle);
    return std::make_pair(testing::read_file(t.metrics_path()), t.net().parameters());
  };
  const auto [ma, pa] = run(a.path());
  const auto [mb, pb] = run(b.path());
  CHECK(ma == mb);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value == pb[i].value);
}

TEST_CASE("stop and resume reproduce an uninterrupted run") {
  testing::TempDir full("trainer-full"), part("trainer-part");
  Fixture f(tiny_config(full.path()));
  Trainer whole(f.cfg, f.train, f.test);
  SimulatedOracle oracle(f.train);
  whole.run(oracle);
  const std::string expected = testing::read_file(whole.metrics_path());

  for (int stop_at : {5, 30, 41}) {
    CAPTURE(stop_at);
    TrainConfig c = tiny_config(part.path());
    Fixture g(c);
    std::atomic<bool> stop{false};
    {
      Trainer t(g.cfg, g.train, g.test);
      t.on_step = [&](const Trainer& tr, const StepMetrics&) {
        if (tr.step() == stop_at) stop = true;
      };
      const RunResult r = t.run(oracle, nullptr, &stop);
      CHECK(r.stopped);
      CHECK(t.step() == stop_at);
    }
    Trainer resumed(g.cfg, g.train, g.test);
    resumed.resume(resumed.checkpoint_path());
    CHECK(resumed.step() == stop_at);
    const RunResult r = resumed.run(oracle);
    CHECK_FALSE(r.stopped);
    CHECK(testing::read_file(resumed.metrics_path()) == expected);
    const auto& pw = whole.net().parameters();
    for (std::size_t i = 0; i < pw.size(); ++i) CHECK(resumed.net().parameters()[i].value == pw[i].value);
  }
}

TEST_CASE("oracle failure checkpoints the pending selection") {
  testing::TempDir full("trainer-oracle-full"), part("trainer-oracle-part");
  Fixture f(tiny_config(full.path()));
  Trainer whole(f.cfg, f.train, f.test);
  SimulatedOracle sim(f.train);
  whole.run(sim);

  Fixture g(tiny_config(part.path()));
  {
    Trainer t(g.cfg, g.train, g.test);
    FlakyOracle flaky(g.train, 3 + 2);  // n0 answers, then two query events
    CHECK(code_of([&] { t.run(flaky); }) == ErrorCode::timeout);
    CHECK(t.query_events() == 3);
  }
  const Checkpoint ck = load_checkpoint(g.cfg.out_dir / "checkpoint.bin");
  CHECK(ck.state.at("pending").size() == 1);
  CHECK(ck.state.at("labeled").size() == 5);

  Trainer resumed(g.cfg, g.train, g.test);
  resumed.resume(resumed.checkpoint_path());
  SimulatedOracle oracle(g.train);
  resumed.run(oracle);
  CHECK(testing::read_file(resumed.metrics_path()) == testing::read_file(whole.metrics_path()));
}

TEST_CASE("resume rejects a different configuration") {
  testing::TempDir dir("trainer-resume-cfg");
  Fixture f(tiny_config(dir.path()));
  {
    Trainer t(f.cfg, f.train, f.test);
    SimulatedOracle oracle(f.train);
    std::atomic<bool> stop{false};
    t.on_step = [&](const Trainer& tr, const StepMetrics&) { stop = tr.step() == 10; };
    t.run(oracle, nullptr, &stop);
  }
  TrainConfig other = f.cfg;
  other.lr0 = 0.05;
  Trainer t(other, f.train, f.test);
  CHECK(code_of([&] { t.resume(t.checkpoint_path()); }) == ErrorCode::config);

  TrainConfig moved = f.cfg;
  moved.checkpoint_every = 7;
  Trainer ok(moved, f.train, f.test);
  ok.resume(ok.checkpoint_path());
  CHECK(ok.step() == 10);
  CHECK(code_of([&] { ok.resume("/nonexistent/ck.bin"); }) == ErrorCode::io);
}

TEST_CASE("status board follows the run") {
  testing::TempDir dir("trainer-status");
  Fixture f(tiny_config(dir.path()));
  Trainer t(f.cfg, f.train, f.test);
  StatusBoard board;
  std::vector<RunStatus> seen;
  t.on_step = [&](const Trainer&, const StepMetrics&) { seen.push_back(board.get()); };
  SimulatedOracle oracle(f.train);
  t.run(oracle, &board);
  const RunStatus last = board.get();
  CHECK(last.phase == "done");
  CHECK(last.labels_collected == 9);
  CHECK(last.budget == 9);
  CHECK(last.step == 68);
  CHECK(last.test_accuracy.has_value());
  CHECK(seen.front().phase == "warmup");
}

TEST_CASE("multi-seed summary") {
  const auto s = summarize({1, 2, 3}, {0.9, 0.8, 0.7});
  CHECK(s.mean == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(s.stddev == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(summarize({4}, {0.5}).stddev == 0.0);
  const auto j = json::parse(to_json(s));
  CHECK(j.at("seeds") == json::array({1, 2, 3}));
  CHECK(j.at("mean") == doctest::Approx(0.8));
}
