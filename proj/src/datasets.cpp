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

#include "almatch/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "almatch/error.hpp"
#include "almatch/oracle.hpp"

namespace almatch {

namespace {

constexpr int kCifarSide = 32;
constexpr int kCifarPixels = kCifarSide * kCifarSide * 3;

const std::vector<std::string>& cifar10_names() {
  static const std::vector<std::string> names = {
      "airplane", "automobile", "bird",  "cat",  "deer",
      "dog",      "frog",       "horse", "ship", "truck"};
  return names;
}

const std::vector<std::string>& cifar100_names() {
  static const std::vector<std::string> names = {
      "apple",        "aquarium_fish", "baby",       "bear",
      "beaver",       "bed",           "bee",        "beetle",
      "bicycle",      "bottle",        "bowl",       "boy",
      "bridge",       "bus",           "butterfly",  "camel",
      "can",          "castle",        "caterpillar", "cattle",
      "chair",        "chimpanzee",    "clock",      "cloud",
      "cockroach",    "couch",         "crab",       "crocodile",
      "cup",          "dinosaur",      "dolphin",    "elephant",
      "flatfish",     "forest",        "fox",        "girl",
      "hamster",      "house",         "kangaroo",   "keyboard",
      "lamp",         "lawn_mower",    "leopard",    "lion",
      "lizard",       "lobster",       "man",        "maple_tree",
      "motorcycle",   "mountain",      "mouse",      "mushroom",
      "oak_tree",     "orange",        "orchid",     "otter",
      "palm_tree",    "pear",          "pickup_truck", "pine_tree",
      "plain",        "plate",         "poppy",      "porcupine",
      "possum",       "rabbit",        "raccoon",    "ray",
      "road",         "rocket",        "rose",       "sea",
      "seal",         "shark",         "shrew",      "skunk",
      "skyscraper",   "snail",         "snake",      "spider",
      "squirrel",     "streetcar",     "sunflower",  "sweet_pepper",
      "table",        "tank",          "telephone",  "television",
      "tiger",        "tractor",       "train",      "trout",
      "tulip",        "turtle",        "wardrobe",   "whale",
      "willow_tree",  "wolf",          "woman",      "worm"};
  return names;
}

std::vector<unsigned char> read_all(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::ingestion, "cannot open CIFAR batch " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hue in [0, 1) to a saturated RGB triple.
std::array<float, 3> hue_color(double hue) {
  const double h = hue * 6.0;
  const int sector = static_cast<int>(h) % 6;
  const auto f = static_cast<float>(h - std::floor(h));
  switch (sector) {
    case 0: return {1.0f, f, 0.0f};
    case 1: return {1.0f - f, 1.0f, 0.0f};
    case 2: return {0.0f, 1.0f, f};
    case 3: return {0.0f, 1.0f - f, 1.0f};
    case 4: return {f, 0.0f, 1.0f};
    default: return {1.0f, 0.0f, 1.0f - f};
  }
}

}  // namespace

void Dataset::validate() const {
  require(images.size() == labels.size(), ErrorCode::format,
          "dataset has " + std::to_string(images.size()) + " images but " +
              std::to_string(labels.size()) + " labels");
  require(num_classes > 0, ErrorCode::format, "dataset has no classes");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    require(img.same_shape(images.front()), ErrorCode::format,
            "image " + std::to_string(i) + " has a different shape");
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorCode::format,
            "label of image " + std::to_string(i) + " out of range");
    for (float p : img.pixels) {
      require(p >= 0.0f && p <= 1.0f, ErrorCode::format,
              "pixel of image " + std::to_string(i) + " outside [0,1]");
    }
  }
}

std::vector<std::string> cifar_batch_files(CifarVariant variant, Split split) {
  if (variant == CifarVariant::cifar10) {
    if (split == Split::test) return {"test_batch.bin"};
    return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
            "data_batch_4.bin", "data_batch_5.bin"};
  }
  return {split == Split::test ? "test.bin" : "train.bin"};
}

Dataset load_cifar_binary(const std::filesystem::path& dir, CifarVariant variant,
                          Split split) {
  const std::size_t label_bytes = variant == CifarVariant::cifar10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarPixels;

  // Read and check every file before building anything, so a corrupt batch
  // never yields a partial dataset.
  std::vector<std::vector<unsigned char>> blobs;
  for (const auto& name : cifar_batch_files(variant, split)) {
    const auto file = dir / name;
    if (!std::filesystem::exists(file)) {
      fail(ErrorCode::ingestion, "missing CIFAR batch file " + file.string());
    }
    auto bytes = read_all(file);
    if (bytes.empty() || bytes.size() % record != 0) {
      fail(ErrorCode::format, file.string() + ": size " +
                                  std::to_string(bytes.size()) +
                                  " is not a positive multiple of the " +
                                  std::to_string(record) + "-byte record");
    }
    blobs.push_back(std::move(bytes));
  }

  Dataset ds;
  ds.split = split;
  ds.num_classes = variant == CifarVariant::cifar10 ? 10 : 100;
  ds.class_names = variant == CifarVariant::cifar10 ? cifar10_names() : cifar100_names();
  constexpr int plane = kCifarSide * kCifarSide;
  for (const auto& bytes : blobs) {
    for (std::size_t off = 0; off < bytes.size(); off += record) {
      const int label = bytes[off + label_bytes - 1];
      if (label >= ds.num_classes) {
        fail(ErrorCode::format, "CIFAR label " + std::to_string(label) +
                                    " out of range at byte " + std::to_string(off));
      }
      Image img(kCifarSide, kCifarSide, 3);
      const unsigned char* px = bytes.data() + off + label_bytes;
      for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < plane; ++i) {
          img.pixels[static_cast<std::size_t>(i) * 3 + c] =
              static_cast<float>(px[c * plane + i]) / 255.0f;
        }
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(label);
    }
  }
  return ds;
}

namespace {
// Chosen so a small encoder with a few dozen labels lands in the 90s rather
// than at 100%: position and hue of neighbouring classes overlap and the
// disc sits in heavy pixel noise.
constexpr double kJitter = 0.5;
constexpr double kHueSpread = 0.4;
constexpr double kContrast = 0.45;
constexpr double kNoise = 0.18;
}  // namespace

Dataset make_synthetic_blobs(int num_classes, int per_class, int image_side,
                             std::uint64_t seed, Split split) {
  require(num_classes >= 2, ErrorCode::config, "blobs need at least 2 classes");
  require(per_class >= 1, ErrorCode::config, "blobs need at least 1 image per class");
  require(image_side >= 4, ErrorCode::config, "blob images must be at least 4 px");

  Rng rng = Rng::stream(seed, streams::synthetic_data, split == Split::test ? 1 : 0);
  Dataset ds;
  ds.split = split;
  ds.num_classes = num_classes;
  for (int k = 0; k < num_classes; ++k) ds.class_names.push_back("class_" + std::to_string(k));

  const double side = image_side;
  const double orbit = side / 4.0;
  const double base_radius = side / 5.0;
  for (int n = 0; n < per_class; ++n) {
    for (int k = 0; k < num_classes; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / num_classes;
      const double cy = side / 2.0 + orbit * std::sin(angle) + rng.uniform(-kJitter, kJitter) * orbit;
      const double cx = side / 2.0 + orbit * std::cos(angle) + rng.uniform(-kJitter, kJitter) * orbit;
      const double radius = base_radius * rng.uniform(0.7, 1.3);
      const double hue = (k + rng.uniform(-kHueSpread, kHueSpread)) / num_classes;
      const auto color = hue_color(hue - std::floor(hue));
      Image img(image_side, image_side, 3);
      for (int y = 0; y < image_side; ++y) {
        for (int x = 0; x < image_side; ++x) {
          const double dy = y + 0.5 - cy;
          const double dx = x + 0.5 - cx;
          const bool inside = dy * dy + dx * dx <= radius * radius;
          for (int c = 0; c < 3; ++c) {
            const double base = inside ? 0.2 + kContrast * color[c] : 0.2;
            const double v = base + kNoise * rng.normal();
            img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(k);
    }
  }
  return ds;
}

SplitState::SplitState(std::size_t train_size, std::vector<LabeledExample> labeled)
    : train_size_(train_size), labeled_(std::move(labeled)) {
  std::vector<char> taken(train_size, 0);
  for (const auto& ex : labeled_) {
    require(ex.index < train_size, ErrorCode::state,
            "labeled index " + std::to_string(ex.index) + " out of range");
    require(!taken[ex.index], ErrorCode::state,
            "index " + std::to_string(ex.index) + " labeled twice");
    taken[ex.index] = 1;
  }
  pool_.reserve(train_size - labeled_.size());
  for (std::size_t i = 0; i < train_size; ++i) {
    if (!taken[i]) pool_.push_back(i);
  }
}

bool SplitState::in_pool(std::size_t index) const {
  return std::binary_search(pool_.begin(), pool_.end(), index);
}

void SplitState::add_label(std::size_t index, int label) {
  auto it = std::lower_bound(pool_.begin(), pool_.end(), index);
  require(it != pool_.end() && *it == index, ErrorCode::state,
          "index " + std::to_string(index) + " is not in the unlabeled pool");
  pool_.erase(it);
  labeled_.push_back({index, label});
}

bool SplitState::conserved() const {
  std::vector<char> seen(train_size_, 0);
  for (const auto& ex : labeled_) {
    if (ex.index >= train_size_ || seen[ex.index]) return false;
    seen[ex.index] = 1;
  }
  for (std::size_t i : pool_) {
    if (i >= train_size_ || seen[i]) return false;
    seen[i] = 1;
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

SplitState init_split(const Dataset& ds, std::size_t n0, Oracle& oracle,
                      std::uint64_t seed) {
  require(n0 > 0 && n0 <= ds.size(), ErrorCode::config,
          "n0 must be in [1, " + std::to_string(ds.size()) + "], got " +
              std::to_string(n0));
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(seed, streams::init_split);
  // Partial Fisher-Yates: the first n0 slots are a uniform random subset.
  for (std::size_t i = 0; i < n0; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }

  std::vector<LabeledExample> labeled;
  labeled.reserve(n0);
  for (std::size_t i = 0; i < n0; ++i) {
    LabelQuery q;
    q.query_id = i + 1;
    q.dataset_index = order[i];
    q.image = ds.images[order[i]];
    q.issued_at = Clock::now();
    q.class_names = ds.class_names;
    LabelAnswer a;
    try {
      a = oracle.ask(q, std::chrono::milliseconds::max());
    } catch (const Error& e) {
      fail(ErrorCode::oracle, std::string("split initialization failed: ") + e.what());
    }
    require(a.label >= 0 && a.label < ds.num_classes, ErrorCode::oracle,
            "split initialization failed: oracle returned label " +
                std::to_string(a.label) + " for index " + std::to_string(order[i]));
    labeled.push_back({order[i], a.label});
  }
  return SplitState(ds.size(), std::move(labeled));
}

void BatchSpec::validate() const {
  require(labeled_batch_size >= 1, ErrorCode::config, "B_L must be at least 1");
  require(unlabeled_batch_size >= 1, ErrorCode::config, "B_U must be at least 1");
}

std::vector<std::size_t> IndexSampler::draw(std::size_t set_size, std::size_t batch) {
  require(set_size > 0, ErrorCode::state, "cannot draw a batch from an empty set");
  std::vector<std::size_t> out;
  out.reserve(batch);
  if (set_size < batch) {
    for (std::size_t i = 0; i < batch; ++i) {
      out.push_back(static_cast<std::size_t>(rng_.below(set_size)));
    }
    return out;
  }
  // A batch never straddles two epochs, so its members are always distinct.
  if (order_.size() != set_size || order_.size() - cursor_ < batch) {
    order_.resize(set_size);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(std::span<std::size_t>(order_));
    cursor_ = 0;
    ++epoch_;
  }
  out.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
             order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch));
  cursor_ += batch;
  return out;
}

std::string IndexSampler::serialize() const {
  nlohmann::json j;
  j["rng"] = rng_.serialize();
  j["order"] = order_;
  j["cursor"] = cursor_;
  j["epoch"] = epoch_;
  return j.dump();
}

IndexSampler IndexSampler::deserialize(const std::string& text) {
  IndexSampler s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.rng_ = Rng::deserialize(j.at("rng").get<std::string>());
    s.order_ = j.at("order").get<std::vector<std::size_t>>();
    s.cursor_ = j.at("cursor").get<std::size_t>();
    s.epoch_ = j.at("epoch").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format, std::string("corrupt sampler state: ") + e.what());
  }
  return s;
}

BatchIterator::BatchIterator(const BatchSpec& spec)
    : spec_(spec),
      labeled_(Rng::stream(spec.seed, streams::labeled_batches)),
      unlabeled_(Rng::stream(spec.seed, streams::unlabeled_batches)) {
  spec_.validate();
}

std::vector<std::pair<const Image*, int>> BatchIterator::next_labeled_batch(
    const Dataset& ds, const SplitState& state) {
  require(!state.labeled().empty(), ErrorCode::state, "labeled set is empty");
  const auto picks = labeled_.draw(state.labeled().size(),
                                   static_cast<std::size_t>(spec_.labeled_batch_size));
  std::vector<std::pair<const Image*, int>> batch;
  batch.reserve(picks.size());
  for (std::size_t p : picks) {
    const auto& ex = state.labeled()[p];
    batch.emplace_back(&ds.images[ex.index], ex.label);
  }
  return batch;
}

std::vector<std::pair<std::size_t, const Image*>> BatchIterator::next_unlabeled_batch(
    const Dataset& ds, const SplitState& state) {
  require(!state.pool().empty(), ErrorCode::state, "unlabeled pool is empty");
  const auto picks = unlabeled_.draw(state.pool().size(),
                                     static_cast<std::size_t>(spec_.unlabeled_batch_size));
  std::vector<std::pair<std::size_t, const Image*>> batch;
  batch.reserve(picks.size());
  for (std::size_t p : picks) {
    const std::size_t index = state.pool()[p];
    batch.emplace_back(index, &ds.images[index]);
  }
  return batch;
}

std::string BatchIterator::serialize() const {
  nlohmann::json j;
  j["labeled"] = labeled_.serialize();
  j["unlabeled"] = unlabeled_.serialize();
  return j.dump();
}

void BatchIterator::restore(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    labeled_ = IndexSampler::deserialize(j.at("labeled").get<std::string>());
    unlabeled_ = IndexSampler::deserialize(j.at("unlabeled").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format, std::string("corrupt batch iterator state: ") + e.what());
  }
}

}  // namespace almatch
