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
#include <fstream>
#include <set>

#include "almatch/datasets.hpp"
#include "almatch/oracle.hpp"
#include "helpers.hpp"

using namespace almatch;
using testing::code_of;

namespace {

constexpr int kPlane = 32 * 32;

// Record whose pixel at plane position i in channel c is (i * 7 + c * 50 + r) % 256.
std::vector<unsigned char> cifar_record(int r, std::vector<unsigned char> label_bytes) {
  std::vector<unsigned char> rec = std::move(label_bytes);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < kPlane; ++i) rec.push_back(static_cast<unsigned char>((i * 7 + c * 50 + r) % 256));
  return rec;
}

void write_batch(const std::filesystem::path& file, int records, int first, bool cifar100) {
  std::ofstream out(file, std::ios::binary);
  for (int r = 0; r < records; ++r) {
    const int n = first + r;
    const auto rec = cifar100 ? cifar_record(n, {static_cast<unsigned char>(n % 20),
                                                 static_cast<unsigned char>((n * 3) % 100)})
                              : cifar_record(n, {static_cast<unsigned char>(n % 10)});
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
}

void write_cifar10(const std::filesystem::path& dir, int per_batch) {
  const auto files = cifar_batch_files(CifarVariant::cifar10, Split::train);
  for (std::size_t b = 0; b < files.size(); ++b) {
    write_batch(dir / files[b], per_batch, static_cast<int>(b) * per_batch, false);
  }
  write_batch(dir / "test_batch.bin", per_batch, 1000, false);
}

// Hands back `label_of(index)` and records what it was asked.
class RecordingOracle final : public Oracle {
 public:
  explicit RecordingOracle(const Dataset& ds) : ds_(ds) {}
  LabelAnswer ask(const LabelQuery& q, std::chrono::milliseconds) override {
    asked.push_back(q.dataset_index);
    return {q.query_id, ds_.labels[q.dataset_index], Clock::now(), AnswerSource::simulated};
  }
  std::vector<std::size_t> asked;

 private:
  const Dataset& ds_;
};

class FailingOracle final : public Oracle {
 public:
  LabelAnswer ask(const LabelQuery&, std::chrono::milliseconds) override {
    throw Error(ErrorCode::timeout, "no answer");
  }
};

}  // namespace

TEST_CASE("CIFAR-10 binary batches") {
  testing::TempDir dir("cifar10");
  write_cifar10(dir.path(), 4);
  const Dataset train = load_cifar_binary(dir.path(), CifarVariant::cifar10, Split::train);
  const Dataset test = load_cifar_binary(dir.path(), CifarVariant::cifar10, Split::test);
  CHECK(train.size() == 20);
  CHECK(test.size() == 4);
  CHECK(train.num_classes == 10);
  CHECK(train.class_names.size() == 10);
  CHECK(train.class_names[0] == "airplane");
  train.validate();
  for (std::size_t n = 0; n < train.size(); ++n) CHECK(train.labels[n] == static_cast<int>(n % 10));

  // Planar R, G, B planes become interleaved HWC floats, exactly k / 255.
  const Image& img = train.images[13];
  REQUIRE(img.height == 32);
  REQUIRE(img.channels == 3);
  bool exact = true;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) {
        const int i = y * 32 + x;
        const float want = static_cast<float>((i * 7 + c * 50 + 13) % 256) / 255.0f;
        exact = exact && img.at(y, x, c) == want;
      }
  CHECK(exact);
}

TEST_CASE("CIFAR-100 uses the fine label") {
  testing::TempDir dir("cifar100");
  write_batch(dir / "train.bin", 6, 0, true);
  const Dataset ds = load_cifar_binary(dir.path(), CifarVariant::cifar100);
  REQUIRE(ds.size() == 6);
  CHECK(ds.num_classes == 100);
  for (int n = 0; n < 6; ++n) CHECK(ds.labels[n] == (n * 3) % 100);
}

TEST_CASE("CIFAR ingestion errors") {
  testing::TempDir dir("cifar-bad");
  SUBCASE("empty directory names the missing file") {
    try {
      load_cifar_binary(dir.path(), CifarVariant::cifar10);
      FAIL("expected an ingestion error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ingestion);
      CHECK(std::string(e.what()).find("data_batch_1.bin") != std::string::npos);
    }
  }
  SUBCASE("truncated record") {
    write_cifar10(dir.path(), 2);
    std::filesystem::resize_file(dir / "data_batch_3.bin", 3073 + 1536);
    CHECK(code_of([&] { load_cifar_binary(dir.path(), CifarVariant::cifar10); }) ==
          ErrorCode::format);
  }
  SUBCASE("label byte out of range") {
    write_cifar10(dir.path(), 1);
    std::fstream f(dir / "test_batch.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.put(static_cast<char>(10));
    f.close();
    CHECK(code_of([&] { load_cifar_binary(dir.path(), CifarVariant::cifar10, Split::test); }) ==
          ErrorCode::format);
  }
}

TEST_CASE("synthetic blobs") {
  const Dataset a = make_synthetic_blobs(3, 20, 16, 7);
  const Dataset b = make_synthetic_blobs(3, 20, 16, 7);
  const Dataset c = make_synthetic_blobs(3, 20, 16, 8);
  const Dataset t = make_synthetic_blobs(3, 20, 16, 7, Split::test);
  a.validate();
  CHECK(a.size() == 60);
  CHECK(a.num_classes == 3);
  CHECK(a.class_names.size() == 3);
  CHECK(a.images[0].height == 16);
  CHECK(a.images[0].channels == 3);
  for (int k = 0; k < 3; ++k) CHECK(std::count(a.labels.begin(), a.labels.end(), k) == 20);
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);
  CHECK(a.images != c.images);
  CHECK(a.images != t.images);
  CHECK(code_of([] { make_synthetic_blobs(1, 5, 16, 0); }) == ErrorCode::config);
  CHECK(code_of([] { make_synthetic_blobs(3, 5, 2, 0); }) == ErrorCode::config);
}

TEST_CASE("initial split") {
  const Dataset ds = make_synthetic_blobs(3, 10, 8, 1);
  RecordingOracle oracle(ds);
  const SplitState s = init_split(ds, 5, oracle, 42);
  CHECK(s.labeled().size() == 5);
  CHECK(s.pool().size() == 25);
  CHECK(s.conserved());
  CHECK(std::is_sorted(s.pool().begin(), s.pool().end()));
  for (const auto& ex : s.labeled()) {
    CHECK(ex.label == ds.labels[ex.index]);
    CHECK_FALSE(s.in_pool(ex.index));
  }
  CHECK(oracle.asked.size() == 5);

  RecordingOracle again(ds);
  CHECK(init_split(ds, 5, again, 42).labeled() == s.labeled());
  RecordingOracle other(ds);
  CHECK(init_split(ds, 5, other, 43).labeled() != s.labeled());

  CHECK(code_of([&] { init_split(ds, 0, oracle, 1); }) == ErrorCode::config);
  CHECK(code_of([&] { init_split(ds, 31, oracle, 1); }) == ErrorCode::config);
  FailingOracle failing;
  CHECK(code_of([&] { init_split(ds, 3, failing, 1); }) == ErrorCode::oracle);
}

TEST_CASE("split bookkeeping") {
  SplitState s(6, {{1, 0}, {4, 1}});
  CHECK(s.pool() == std::vector<std::size_t>{0, 2, 3, 5});
  s.add_label(3, 2);
  CHECK(s.pool() == std::vector<std::size_t>{0, 2, 5});
  CHECK(s.labeled().back() == LabeledExample{3, 2});
  CHECK(s.conserved());
  CHECK(code_of([&] { s.add_label(3, 1); }) == ErrorCode::state);
  CHECK(code_of([&] { s.add_label(9, 1); }) == ErrorCode::state);
  CHECK(code_of([] { SplitState(4, {{1, 0}, {1, 1}}); }) == ErrorCode::state);
  CHECK(code_of([] { SplitState(4, {{4, 0}}); }) == ErrorCode::state);
}

TEST_CASE("index sampler regimes") {
  SUBCASE("set smaller than the batch draws with replacement") {
    IndexSampler s(Rng(3));
    const auto b = s.draw(3, 10);
    CHECK(b.size() == 10);
    CHECK(std::all_of(b.begin(), b.end(), [](std::size_t i) { return i < 3; }));
  }
  SUBCASE("set at least the batch size covers an epoch without repeats") {
    IndexSampler s(Rng(4));
    std::multiset<std::size_t> seen;
    for (int i = 0; i < 5; ++i) {
      const auto b = s.draw(20, 4);
      CHECK(std::set<std::size_t>(b.begin(), b.end()).size() == 4);
      seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == 20);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 20);
    CHECK(s.epoch() == 1);
    s.draw(20, 4);
    CHECK(s.epoch() == 2);
  }
  SUBCASE("a size change starts a fresh epoch") {
    IndexSampler s(Rng(5));
    s.draw(20, 4);
    s.draw(19, 4);
    CHECK(s.epoch() == 2);
  }
  SUBCASE("state round trip") {
    IndexSampler s(Rng(6));
    s.draw(15, 4);
    IndexSampler r = IndexSampler::deserialize(s.serialize());
    for (int i = 0; i < 6; ++i) CHECK(s.draw(15, 4) == r.draw(15, 4));
    CHECK(code_of([] { IndexSampler::deserialize("{not json"); }) == ErrorCode::format);
  }
  CHECK(code_of([] { IndexSampler().draw(0, 1); }) == ErrorCode::state);
}

TEST_CASE("batch iterators") {
  const Dataset ds = make_synthetic_blobs(3, 10, 8, 2);
  SplitState s(ds.size(), {{0, ds.labels[0]}, {7, ds.labels[7]}, {12, ds.labels[12]}});
  BatchSpec spec{4, 8, 11};
  BatchIterator it(spec), same(spec);
  for (int step = 0; step < 10; ++step) {
    const auto lb = it.next_labeled_batch(ds, s);
    const auto ub = it.next_unlabeled_batch(ds, s);
    CHECK(lb.size() == 4);
    CHECK(ub.size() == 8);
    for (const auto& [img, label] : lb) {
      const auto idx = static_cast<std::size_t>(img - ds.images.data());
      CHECK_FALSE(s.in_pool(idx));
      CHECK(label == ds.labels[idx]);
    }
    for (const auto& [idx, img] : ub) {
      CHECK(s.in_pool(idx));
      CHECK(img == &ds.images[idx]);
    }
    const auto lb2 = same.next_labeled_batch(ds, s);
    const auto ub2 = same.next_unlabeled_batch(ds, s);
    CHECK(lb == lb2);
    CHECK(ub == ub2);
  }

  BatchIterator restored(spec);
  restored.restore(it.serialize());
  CHECK(restored.next_unlabeled_batch(ds, s) == it.next_unlabeled_batch(ds, s));

  SplitState empty(ds.size(), {});
  CHECK(code_of([&] { it.next_labeled_batch(ds, empty); }) == ErrorCode::state);
  CHECK(code_of([] { BatchIterator(BatchSpec{0, 4, 0}); }) == ErrorCode::config);
}

TEST_CASE("dataset validation") {
  Dataset ds = make_synthetic_blobs(2, 3, 8, 0);
  ds.labels[1] = 2;
  CHECK(code_of([&] { ds.validate(); }) == ErrorCode::format);
  ds = make_synthetic_blobs(2, 3, 8, 0);
  ds.images[2].pixels[0] = 1.5f;
  CHECK(code_of([&] { ds.validate(); }) == ErrorCode::format);
  ds = make_synthetic_blobs(2, 3, 8, 0);
  ds.images[2] = Image(4, 4, 3);
  CHECK(code_of([&] { ds.validate(); }) == ErrorCode::format);
}
