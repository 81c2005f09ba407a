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

#include "almatch/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "almatch/error.hpp"

namespace almatch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && p == end, ErrorCode::config,
          "bad value '" + text + "' for " + key);
  return v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  require(!out.empty(), ErrorCode::config, key + " must list at least one size");
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <class T, class M>
Key number_key(std::string name, M member) {
  return {name,
          [member](const TrainConfig& c) {
            return format_number<T>(std::invoke(member, const_cast<TrainConfig&>(c)));
          },
          [member, name](TrainConfig& c, const std::string& v) {
            std::invoke(member, c) = parse_number<T>(name, v);
          }};
}

// Keys are listed in the order to_text() writes them.
const std::vector<Key>& keys() {
  using C = TrainConfig;
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"data.dataset", [](const C& c) { return c.data.dataset; },
                 [](C& c, const std::string& v) { c.data.dataset = v; }});
    k.push_back({"data.dir", [](const C& c) { return c.data.dir.string(); },
                 [](C& c, const std::string& v) { c.data.dir = v; }});
    k.push_back(number_key<int>("data.blobs.classes", [](C& c) -> int& { return c.data.blobs_classes; }));
    k.push_back(number_key<int>("data.blobs.per_class", [](C& c) -> int& { return c.data.blobs_per_class; }));
    k.push_back(number_key<int>("data.blobs.test_per_class", [](C& c) -> int& { return c.data.blobs_test_per_class; }));
    k.push_back(number_key<int>("data.blobs.side", [](C& c) -> int& { return c.data.blobs_side; }));
    k.push_back(number_key<std::uint64_t>("seed", [](C& c) -> std::uint64_t& { return c.seed; }));

    k.push_back(number_key<std::int64_t>("train.steps", [](C& c) -> std::int64_t& { return c.steps; }));
    k.push_back(number_key<double>("train.lr0", [](C& c) -> double& { return c.lr0; }));
    k.push_back(number_key<std::int64_t>("train.warmup_epochs", [](C& c) -> std::int64_t& { return c.warmup_epochs; }));
    k.push_back(number_key<int>("train.batch_labeled", [](C& c) -> int& { return c.batch_labeled; }));
    k.push_back(number_key<int>("train.batch_unlabeled", [](C& c) -> int& { return c.batch_unlabeled; }));
    k.push_back(number_key<double>("train.momentum", [](C& c) -> double& { return c.momentum; }));
    k.push_back(number_key<double>("train.weight_decay", [](C& c) -> double& { return c.weight_decay; }));
    k.push_back(number_key<std::int64_t>("train.eval_every", [](C& c) -> std::int64_t& { return c.eval_every; }));
    k.push_back(number_key<std::int64_t>("train.checkpoint_every", [](C& c) -> std::int64_t& { return c.checkpoint_every; }));
    k.push_back({"train.out_dir", [](const C& c) { return c.out_dir.string(); },
                 [](C& c, const std::string& v) { c.out_dir = v; }});

    k.push_back(number_key<double>("loss.lambda1", [](C& c) -> double& { return c.weights.lambda1; }));
    k.push_back(number_key<double>("loss.lambda2", [](C& c) -> double& { return c.weights.lambda2; }));
    k.push_back(number_key<double>("loss.lambda3", [](C& c) -> double& { return c.weights.lambda3; }));
    k.push_back(number_key<double>("loss.lambda4", [](C& c) -> double& { return c.weights.lambda4; }));
    k.push_back({"loss.tau", nullptr, [](C& c, const std::string& v) {
                   c.tau_unsup = c.tau_sup = parse_number<double>("loss.tau", v);
                 }});
    k.push_back(number_key<double>("loss.tau_unsup", [](C& c) -> double& { return c.tau_unsup; }));
    k.push_back(number_key<double>("loss.tau_sup", [](C& c) -> double& { return c.tau_sup; }));
    k.push_back(number_key<double>("loss.confidence_threshold", [](C& c) -> double& { return c.confidence_threshold; }));

    k.push_back(number_key<std::size_t>("active.n0", [](C& c) -> std::size_t& { return c.active.n0; }));
    k.push_back(number_key<std::int64_t>("active.b_smp", [](C& c) -> std::int64_t& { return c.active.b_smp; }));
    k.push_back(number_key<std::size_t>("active.budget", [](C& c) -> std::size_t& { return c.active.label_budget; }));
    k.push_back({"active.strategy", [](const C& c) { return to_string(c.active.strategy); },
                 [](C& c, const std::string& v) { c.active.strategy = parse_strategy(v); }});
    k.push_back(number_key<std::size_t>("active.queries_per_event", [](C& c) -> std::size_t& { return c.active.queries_per_event; }));
    k.push_back(number_key<std::size_t>("active.scoring_pool_size", [](C& c) -> std::size_t& { return c.active.scoring_pool_size; }));

    k.push_back({"model.arch",
                 [](const C& c) { return std::string(c.arch.kind == ArchSpec::Kind::conv ? "conv" : "mlp"); },
                 [](C& c, const std::string& v) {
                   if (v == "conv") c.arch.kind = ArchSpec::Kind::conv;
                   else if (v == "mlp") c.arch.kind = ArchSpec::Kind::mlp;
                   else fail(ErrorCode::config, "model.arch must be conv or mlp, got '" + v + "'");
                 }});
    k.push_back({"model.channels", [](const C& c) { return format_int_list(c.arch.conv_channels); },
                 [](C& c, const std::string& v) { c.arch.conv_channels = parse_int_list("model.channels", v); }});
    k.push_back({"model.hidden", [](const C& c) { return format_int_list(c.arch.mlp_hidden); },
                 [](C& c, const std::string& v) { c.arch.mlp_hidden = parse_int_list("model.hidden", v); }});
    k.push_back(number_key<int>("model.proj_hidden", [](C& c) -> int& { return c.arch.proj_hidden; }));
    k.push_back(number_key<int>("model.proj_dim", [](C& c) -> int& { return c.arch.proj_dim; }));

    k.push_back(number_key<int>("augment.crop_padding", [](C& c) -> int& { return c.contrastive.crop_padding; }));
    k.push_back(number_key<double>("augment.flip_prob", [](C& c) -> double& { return c.contrastive.flip_prob; }));
    k.push_back(number_key<double>("augment.color_strength", [](C& c) -> double& { return c.contrastive.color_strength; }));
    k.push_back(number_key<double>("augment.color_prob", [](C& c) -> double& { return c.contrastive.color_prob; }));
    k.push_back(number_key<double>("augment.grayscale_prob", [](C& c) -> double& { return c.contrastive.grayscale_prob; }));
    k.push_back(number_key<double>("augment.blur_prob", [](C& c) -> double& { return c.contrastive.blur_prob; }));
    k.push_back(number_key<double>("augment.weak_flip_prob", [](C& c) -> double& { return c.weak.flip_prob; }));
    k.push_back(number_key<int>("augment.randaugment_n", [](C& c) -> int& { return c.strong.randaugment_ops; }));
    k.push_back(number_key<int>("augment.randaugment_m", [](C& c) -> int& { return c.strong.randaugment_magnitude; }));
    k.push_back(number_key<int>("augment.cutout_size", [](C& c) -> int& { return c.strong.cutout_size; }));

    k.push_back(number_key<std::int64_t>("oracle.timeout_ms", [](C& c) -> std::int64_t& { return c.oracle_timeout_ms; }));
    k.push_back({"oracle.bind", [](const C& c) { return c.oracle_bind; },
                 [](C& c, const std::string& v) { c.oracle_bind = v; }});
    k.push_back({"oracle.static_dir", [](const C& c) { return c.static_dir.string(); },
                 [](C& c, const std::string& v) { c.static_dir = v; }});
    return k;
  }();
  return table;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(*this, value);
      return;
    }
  }
  fail(ErrorCode::config, "unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
  int side = 32;
  if (data.dataset == "blobs") {
    require(data.blobs_classes >= 2, ErrorCode::config, "data.blobs.classes must be at least 2");
    require(data.blobs_per_class >= 1 && data.blobs_test_per_class >= 1, ErrorCode::config,
            "data.blobs.per_class and data.blobs.test_per_class must be positive");
    require(data.blobs_side >= 8, ErrorCode::config, "data.blobs.side must be at least 8");
    side = data.blobs_side;
  } else {
    require(data.dataset == "cifar10" || data.dataset == "cifar100", ErrorCode::config,
            "data.dataset must be cifar10, cifar100 or blobs (SVHN is not supported), got '" +
                data.dataset + "'");
  }
  require(steps >= 1, ErrorCode::config, "train.steps must be at least 1");
  require(lr0 > 0, ErrorCode::config, "train.lr0 must be positive");
  require(warmup_epochs >= 0, ErrorCode::config, "train.warmup_epochs must be non-negative");
  require(batch_labeled >= 1, ErrorCode::config, "train.batch_labeled must be positive");
  require(batch_unlabeled >= 1, ErrorCode::config, "train.batch_unlabeled must be positive");
  require(momentum >= 0 && momentum < 1, ErrorCode::config, "train.momentum must be in [0, 1)");
  require(weight_decay >= 0, ErrorCode::config, "train.weight_decay must be non-negative");
  require(eval_every >= 1, ErrorCode::config, "train.eval_every must be positive");
  require(checkpoint_every >= 0, ErrorCode::config, "train.checkpoint_every must be non-negative");
  weights.validate();
  require(tau_unsup > 0, ErrorCode::config, "loss.tau_unsup must be positive");
  require(tau_sup > 0, ErrorCode::config, "loss.tau_sup must be positive");
  require(confidence_threshold >= 0 && confidence_threshold <= 1, ErrorCode::config,
          "loss.confidence_threshold must be in [0, 1]");
  active.validate();
  const std::int64_t events = static_cast<std::int64_t>(
      (active.label_budget - active.n0 + active.queries_per_event - 1) / active.queries_per_event);
  require(events * active.b_smp <= steps, ErrorCode::config,
          "active schedule needs " + std::to_string(events * active.b_smp) +
              " joint steps to reach active.budget but train.steps is " + std::to_string(steps));
  require(oracle_timeout_ms >= 0, ErrorCode::config, "oracle.timeout_ms must be non-negative");
  contrastive.validate(side);
  weak.validate(side);
  strong.validate(side);
  ArchSpec a = arch;
  a.image_side = side;
  a.validate();
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) {
    if (!k.get) continue;
    out += k.name + " = " + k.get(*this) + "\n";
  }
  return out;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::config,
            "line " + std::to_string(lineno) + ": expected 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace almatch
