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

#include "almatch/trainer.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "almatch/active.hpp"
#include "almatch/checkpoint.hpp"
#include "almatch/error.hpp"
#include "almatch/losses.hpp"

namespace almatch {

using nlohmann::json;

double cosine_lr(std::int64_t k, std::int64_t K, double lr0) {
  require(K >= 1, ErrorCode::domain, "cosine_lr needs K >= 1");
  require(k >= 0 && k <= K, ErrorCode::domain,
          "cosine_lr step " + std::to_string(k) + " outside [0, " + std::to_string(K) + "]");
  return lr0 * std::cos(7.0 * std::numbers::pi * static_cast<double>(k) /
                        (16.0 * static_cast<double>(K)));
}

double evaluate(const EncoderNet<float>& net, const Dataset& test, std::size_t chunk) {
  if (test.size() == 0) return 0.0;
  chunk = std::max<std::size_t>(chunk, 1);
  std::size_t correct = 0;
  std::vector<const Image*> rows;
  for (std::size_t start = 0; start < test.size(); start += chunk) {
    const std::size_t end = std::min(test.size(), start + chunk);
    rows.clear();
    for (std::size_t i = start; i < end; ++i) rows.push_back(&test.images[i]);
    const auto pass = net.forward(stack_images<float>(std::span<const Image* const>(rows)),
                                  Mode::eval);
    for (std::size_t i = start; i < end; ++i) {
      Eigen::Index arg = 0;
      pass.logits.row(static_cast<Eigen::Index>(i - start)).maxCoeff(&arg);
      correct += static_cast<int>(arg) == test.labels[i] ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::pair<Dataset, Dataset> load_datasets(const DataConfig& data, std::uint64_t seed) {
  if (data.dataset == "blobs") {
    return {make_synthetic_blobs(data.blobs_classes, data.blobs_per_class, data.blobs_side, seed,
                                 Split::train),
            make_synthetic_blobs(data.blobs_classes, data.blobs_test_per_class, data.blobs_side,
                                 seed, Split::test)};
  }
  const auto variant = data.dataset == "cifar100" ? CifarVariant::cifar100 : CifarVariant::cifar10;
  require(data.dataset == "cifar10" || data.dataset == "cifar100", ErrorCode::config,
          "unsupported dataset '" + data.dataset + "'");
  return {load_cifar_binary(data.dir, variant, Split::train),
          load_cifar_binary(data.dir, variant, Split::test)};
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::init: return "init";
    case Phase::warmup: return "warmup";
    case Phase::joint: return "joint";
    case Phase::done: return "done";
  }
  return "init";
}

namespace {

Phase parse_phase(const std::string& s) {
  if (s == "warmup") return Phase::warmup;
  if (s == "joint") return Phase::joint;
  if (s == "done") return Phase::done;
  if (s == "init") return Phase::init;
  fail(ErrorCode::format, "unknown phase '" + s + "' in checkpoint");
}

Matrix<float> softmax_rows(const Matrix<float>& logits) {
  Matrix<float> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const float m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

json parts_json(const losses::LossParts& p) {
  return {{"unsup_contrastive", p.unsup_contrastive},
          {"supervised", p.supervised},
          {"sup_contrastive", p.sup_contrastive},
          {"pseudo_label", p.pseudo_label}};
}

losses::LossParts parts_from_json(const json& j) {
  losses::LossParts p;
  p.unsup_contrastive = j.at("unsup_contrastive").get<double>();
  p.supervised = j.at("supervised").get<double>();
  p.sup_contrastive = j.at("sup_contrastive").get<double>();
  p.pseudo_label = j.at("pseudo_label").get<double>();
  return p;
}

// Fields that may legitimately change between a run and its resumption.
std::string resumable_identity(TrainConfig c) {
  c.out_dir.clear();
  c.data.dir.clear();
  c.oracle_timeout_ms = 0;
  c.oracle_bind.clear();
  c.static_dir.clear();
  c.checkpoint_every = 0;
  return c.to_text();
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, const Dataset& train, const Dataset& test)
    : cfg_(std::move(cfg)),
      train_(&train),
      test_(&test),
      sgd_(static_cast<float>(cfg_.momentum), static_cast<float>(cfg_.weight_decay)),
      batches_(cfg_.batch_spec()),
      aug_rng_(Rng::stream(cfg_.seed, streams::augmentation)) {
  cfg_.validate();
  require(train.size() > 0 && test.size() > 0, ErrorCode::ingestion,
          "train and test splits must be non-empty");
  require(cfg_.active.label_budget < train.size(), ErrorCode::config,
          "active.budget must be smaller than the training set (" +
              std::to_string(train.size()) + " images)");
  const Image& first = train.images.front();
  require(first.height == first.width, ErrorCode::ingestion, "images must be square");
  cfg_.arch.image_side = first.height;
  cfg_.arch.image_channels = first.channels;
  cfg_.arch.num_classes = train.num_classes;
  cfg_.contrastive.validate(first.height);
  cfg_.weak.validate(first.height);
  cfg_.strong.validate(first.height);
  net_ = EncoderNet<float>(cfg_.arch, cfg_.seed);
}

std::chrono::milliseconds Trainer::oracle_timeout() const {
  return cfg_.oracle_timeout_ms > 0 ? std::chrono::milliseconds(cfg_.oracle_timeout_ms)
                                    : std::chrono::milliseconds::max();
}

void Trainer::initialize(Oracle& oracle) {
  require(phase_ == Phase::init, ErrorCode::state, "trainer already initialized");
  split_ = init_split(*train_, cfg_.active.n0, oracle, cfg_.seed);
  next_query_id_ = cfg_.active.n0 + 1;
  const auto pool = static_cast<std::int64_t>(split_.pool().size());
  steps_per_epoch_ = std::max<std::int64_t>(1, (pool + cfg_.batch_unlabeled - 1) / cfg_.batch_unlabeled);
  warmup_total_ = cfg_.warmup_epochs * steps_per_epoch_;
  phase_ = warmup_total_ > 0 ? Phase::warmup : Phase::joint;
  last_lr_ = cfg_.lr0;

  open_metrics(true);
  json line = {{"type", "init"}, {"labels", split_.labeled().size()}};
  json idx = json::array();
  for (const auto& ex : split_.labeled()) idx.push_back(ex.index);
  line["dataset_indices"] = idx;
  write_line(line.dump());
}

void Trainer::open_metrics(bool truncate) {
  std::filesystem::create_directories(cfg_.out_dir);
  metrics_out_.close();
  metrics_out_.open(metrics_path(), std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
  require(metrics_out_.good(), ErrorCode::io, "cannot open " + metrics_path().string());
  if (truncate) metrics_bytes_ = 0;
}

void Trainer::write_line(const std::string& line) {
  metrics_out_ << line << '\n';
  metrics_out_.flush();
  require(metrics_out_.good(), ErrorCode::io, "cannot write " + metrics_path().string());
  metrics_bytes_ += line.size() + 1;
}

StepMetrics Trainer::warmup_step() {
  require(phase_ == Phase::warmup, ErrorCode::state, "warmup_step outside the warm-up phase");
  const auto ub = batches_.next_unlabeled_batch(*train_, split_);
  std::vector<Image> views;
  views.reserve(2 * ub.size());
  for (const auto& [index, img] : ub) {
    auto [a, b] = contrastive_pair(cfg_.contrastive, *img, aug_rng_);
    views.push_back(std::move(a));
    views.push_back(std::move(b));
  }
  const auto pass = net_.forward(stack_images<float>(std::span<const Image>(views)), Mode::train);
  const auto u = losses::unsup_contrastive_loss<float>(pass.reps, static_cast<float>(cfg_.tau_unsup));

  StepMetrics m;
  m.parts.unsup_contrastive = u.value;
  losses::LossWeights only_unsup{cfg_.weights.lambda1, 0.0, 0.0, 0.0};
  m.total = losses::total_loss(m.parts, only_unsup);
  m.lr = cfg_.lr0;

  const Matrix<float> d_reps = u.grad * static_cast<float>(cfg_.weights.lambda1);
  const auto g = net_.backward(pass, d_reps, Matrix<float>());
  sgd_.step(net_, g, static_cast<float>(m.lr), kRepresentationGroups);

  ++warmup_done_;
  ++step_;
  if (warmup_done_ >= warmup_total_) phase_ = Phase::joint;
  return m;
}

StepMetrics Trainer::joint_step() {
  require(phase_ == Phase::joint, ErrorCode::state, "joint_step outside the joint phase");
  const auto lb = batches_.next_labeled_batch(*train_, split_);
  const auto ub = batches_.next_unlabeled_batch(*train_, split_);
  const auto bu = static_cast<Eigen::Index>(ub.size());
  const auto bl = static_cast<Eigen::Index>(lb.size());

  // Row layout: [unlabeled contrastive pairs | weak | strong | labeled weak |
  // labeled contrastive pairs].
  std::vector<Image> views(static_cast<std::size_t>(4 * bu + 3 * bl));
  for (Eigen::Index i = 0; i < bu; ++i) {
    auto [a, b] = contrastive_pair(cfg_.contrastive, *ub[i].second, aug_rng_);
    views[2 * i] = std::move(a);
    views[2 * i + 1] = std::move(b);
  }
  for (Eigen::Index i = 0; i < bu; ++i) {
    auto [w, s] = weak_strong_pair(cfg_.weak, cfg_.strong, *ub[i].second, aug_rng_);
    views[2 * bu + i] = std::move(w);
    views[3 * bu + i] = std::move(s);
  }
  std::vector<int> labels(static_cast<std::size_t>(bl));
  for (Eigen::Index j = 0; j < bl; ++j) {
    views[4 * bu + j] = apply(cfg_.weak, *lb[j].first, aug_rng_);
    labels[j] = lb[j].second;
  }
  const Eigen::Index lcl = 4 * bu + bl;
  for (Eigen::Index j = 0; j < bl; ++j) {
    auto [a, b] = contrastive_pair(cfg_.contrastive, *lb[j].first, aug_rng_);
    views[lcl + 2 * j] = std::move(a);
    views[lcl + 2 * j + 1] = std::move(b);
  }

  const auto pass = net_.forward(stack_images<float>(std::span<const Image>(views)), Mode::train);
  const auto tau_u = static_cast<float>(cfg_.tau_unsup);
  const auto tau_s = static_cast<float>(cfg_.tau_sup);

  const auto u = losses::unsup_contrastive_loss<float>(Matrix<float>(pass.reps.topRows(2 * bu)), tau_u);
  const auto ce = losses::supervised_ce_loss<float>(Matrix<float>(pass.logits.middleRows(4 * bu, bl)), labels);
  const auto scl = losses::sup_contrastive_loss<float>(Matrix<float>(pass.reps.bottomRows(2 * bl)), labels, tau_s);
  const Matrix<float> weak_probs = softmax_rows(pass.logits.middleRows(2 * bu, bu));
  const Matrix<float> strong_logits = pass.logits.middleRows(3 * bu, bu);
  const auto pl = losses::pseudo_label_loss<float>(
      {weak_probs, strong_logits, static_cast<float>(cfg_.confidence_threshold)});

  StepMetrics m;
  m.parts = {u.value, ce.value, scl.value, pl.value};
  m.total = losses::total_loss(m.parts, cfg_.weights);
  m.confident_fraction = static_cast<double>(pl.confident) / static_cast<double>(bu);
  m.lr = cosine_lr(k_, cfg_.steps, cfg_.lr0);

  const auto& w = cfg_.weights;
  Matrix<float> d_reps = Matrix<float>::Zero(pass.reps.rows(), pass.reps.cols());
  d_reps.topRows(2 * bu) = u.grad * static_cast<float>(w.lambda1);
  d_reps.bottomRows(2 * bl) = scl.grad * static_cast<float>(w.lambda3);
  Matrix<float> d_logits = Matrix<float>::Zero(pass.logits.rows(), pass.logits.cols());
  d_logits.middleRows(3 * bu, bu) = pl.grad * static_cast<float>(w.lambda4);
  d_logits.middleRows(4 * bu, bl) = ce.grad * static_cast<float>(w.lambda2);
  const auto g = net_.backward(pass, d_reps, d_logits);
  sgd_.step(net_, g, static_cast<float>(m.lr), kAllGroups);

  ++k_;
  ++step_;
  if (k_ >= cfg_.steps) phase_ = Phase::done;
  return m;
}

void Trainer::accumulate(const StepMetrics& m) {
  sum_parts_.unsup_contrastive += m.parts.unsup_contrastive;
  sum_parts_.supervised += m.parts.supervised;
  sum_parts_.sup_contrastive += m.parts.sup_contrastive;
  sum_parts_.pseudo_label += m.parts.pseudo_label;
  sum_total_ += m.total;
  sum_confident_ += m.confident_fraction;
  ++sum_count_;
  last_lr_ = m.lr;
}

void Trainer::record_eval() {
  EvalRecord r;
  r.step = step_;
  r.joint_step = k_;
  r.phase = phase_;
  r.test_accuracy = evaluate(net_, *test_);
  r.labels = split_.labeled().size();
  const double n = sum_count_ > 0 ? static_cast<double>(sum_count_) : 1.0;
  r.mean_parts = {sum_parts_.unsup_contrastive / n, sum_parts_.supervised / n,
                  sum_parts_.sup_contrastive / n, sum_parts_.pseudo_label / n};
  r.mean_total = sum_total_ / n;
  r.confident_fraction = sum_confident_ / n;
  r.lr = last_lr_;
  sum_parts_ = {};
  sum_total_ = sum_confident_ = 0.0;
  sum_count_ = 0;
  last_accuracy_ = r.test_accuracy;

  json line = {{"type", "eval"},
               {"step", r.step},
               {"joint_step", r.joint_step},
               {"phase", to_string(r.phase)},
               {"test_accuracy", r.test_accuracy},
               {"labels", r.labels},
               {"lr", r.lr},
               {"losses", parts_json(r.mean_parts)},
               {"total_loss", r.mean_total},
               {"confident_fraction", r.confident_fraction}};
  write_line(line.dump());
  metrics_.records.push_back(r);
}

void Trainer::begin_event() {
  ++event_;
  ScoringContext ctx;
  ctx.dataset = train_;
  ctx.weak = cfg_.weak;
  ctx.seed = cfg_.seed;
  ctx.event = event_;
  pending_ = select_queries(net_, split_, cfg_.active, ctx);
  save(checkpoint_path());
}

void Trainer::answer_pending(Oracle& oracle) {
  if (pending_.empty()) return;
  while (!pending_.empty()) {
    const std::size_t index = pending_.front();
    LabelQuery q;
    q.query_id = next_query_id_;
    q.dataset_index = index;
    q.image = train_->images[index];
    q.issued_at = Clock::now();
    q.class_names = train_->class_names;
    LabelAnswer a;
    try {
      a = oracle.ask(q, oracle_timeout());
    } catch (const Error&) {
      save(checkpoint_path());
      throw;
    }
    ++next_query_id_;
    require(a.label >= 0 && a.label < train_->num_classes, ErrorCode::oracle,
            "oracle returned label " + std::to_string(a.label) + " outside [0, " +
                std::to_string(train_->num_classes) + ")");
    split_.add_label(index, a.label);
    pending_.erase(pending_.begin());
    json line = {{"type", "query"},         {"event", event_},
                 {"step", step_},           {"joint_step", k_},
                 {"query_id", q.query_id},  {"dataset_index", index},
                 {"label", a.label},        {"labels", split_.labeled().size()}};
    write_line(line.dump());
  }
  save(checkpoint_path());
}

void Trainer::publish(StatusBoard* status) const {
  if (!status) return;
  RunStatus s;
  s.labels_collected = split_.labeled().size();
  s.budget = cfg_.active.label_budget;
  s.test_accuracy = last_accuracy_;
  s.step = step_;
  s.phase = to_string(phase_);
  status->set(s);
}

RunResult Trainer::run(Oracle& oracle, StatusBoard* status, const std::atomic<bool>* stop) {
  if (phase_ == Phase::init) initialize(oracle);
  if (!metrics_out_.is_open()) open_metrics(false);
  publish(status);
  answer_pending(oracle);
  publish(status);

  RunResult result;
  while (phase_ == Phase::warmup || phase_ == Phase::joint) {
    if (stop && stop->load()) {
      save(checkpoint_path());
      result.stopped = true;
      break;
    }
    const bool joint = phase_ == Phase::joint;
    const StepMetrics m = joint ? joint_step() : warmup_step();
    accumulate(m);
    if (on_step) on_step(*this, m);

    if (joint) {
      const std::int64_t epoch = cfg_.warmup_epochs + k_ / steps_per_epoch_;
      if (should_query(k_, epoch, cfg_.active, split_.labeled().size(), cfg_.warmup_epochs)) {
        publish(status);
        begin_event();
        answer_pending(oracle);
      }
    }
    if (step_ % cfg_.eval_every == 0 || phase_ == Phase::done) record_eval();
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) save(checkpoint_path());
    publish(status);
  }
  if (phase_ == Phase::done) save(checkpoint_path());
  publish(status);

  result.metrics = metrics_;
  result.final_accuracy = last_accuracy_.value_or(0.0);
  result.labels = split_.labeled().size();
  return result;
}

void Trainer::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  store_parameters(ckpt, net_);
  const auto& params = net_.parameters();
  const auto& vel = sgd_.velocity();
  for (std::size_t i = 0; i < vel.size(); ++i) {
    NamedArray a{"velocity/" + params[i].name, vel[i].rows(), vel[i].cols(), {}};
    a.data.assign(vel[i].data(), vel[i].data() + vel[i].size());
    ckpt.arrays.push_back(std::move(a));
  }
  json labeled = json::array();
  for (const auto& ex : split_.labeled()) labeled.push_back({ex.index, ex.label});
  ckpt.state = {{"config", cfg_.to_text()},
                {"phase", to_string(phase_)},
                {"step", step_},
                {"warmup_done", warmup_done_},
                {"warmup_total", warmup_total_},
                {"steps_per_epoch", steps_per_epoch_},
                {"joint_step", k_},
                {"event", event_},
                {"next_query_id", next_query_id_},
                {"pending", pending_},
                {"train_size", split_.train_size()},
                {"labeled", labeled},
                {"batches", batches_.serialize()},
                {"aug_rng", aug_rng_.serialize()},
                {"sum_parts", parts_json(sum_parts_)},
                {"sum_total", sum_total_},
                {"sum_confident", sum_confident_},
                {"sum_count", sum_count_},
                {"last_lr", last_lr_},
                {"last_accuracy", last_accuracy_ ? json(*last_accuracy_) : json(nullptr)},
                {"metrics_bytes", metrics_bytes_}};
  save_checkpoint(path, ckpt);
}

void Trainer::resume(const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  require(ckpt.arch == net_.arch(), ErrorCode::config,
          "checkpoint architecture does not match the configured model");
  const json& s = ckpt.state;
  try {
    const TrainConfig saved = TrainConfig::parse(s.at("config").get<std::string>());
    require(resumable_identity(saved) == resumable_identity(cfg_), ErrorCode::config,
            "checkpoint was written with a different configuration");

    net_ = restore_net(ckpt);
    auto& vel = sgd_.velocity();
    vel.clear();
    if (ckpt.find("velocity/" + net_.parameters().front().name)) {
      for (const auto& p : net_.parameters()) {
        const NamedArray* a = ckpt.find("velocity/" + p.name);
        require(a && a->rows == p.value.rows() && a->cols == p.value.cols(), ErrorCode::format,
                "checkpoint velocity for " + p.name + " is missing or misshapen");
        vel.push_back(Eigen::Map<const Matrix<float>>(a->data.data(), a->rows, a->cols));
      }
    }

    std::vector<LabeledExample> labeled;
    for (const auto& e : s.at("labeled")) labeled.push_back({e.at(0).get<std::size_t>(), e.at(1).get<int>()});
    require(s.at("train_size").get<std::size_t>() == train_->size(), ErrorCode::config,
            "checkpoint was written for a training set of a different size");
    split_ = SplitState(train_->size(), std::move(labeled));

    phase_ = parse_phase(s.at("phase").get<std::string>());
    step_ = s.at("step").get<std::int64_t>();
    warmup_done_ = s.at("warmup_done").get<std::int64_t>();
    warmup_total_ = s.at("warmup_total").get<std::int64_t>();
    steps_per_epoch_ = s.at("steps_per_epoch").get<std::int64_t>();
    k_ = s.at("joint_step").get<std::int64_t>();
    event_ = s.at("event").get<std::uint64_t>();
    next_query_id_ = s.at("next_query_id").get<std::uint64_t>();
    pending_ = s.at("pending").get<std::vector<std::size_t>>();
    batches_.restore(s.at("batches").get<std::string>());
    aug_rng_ = Rng::deserialize(s.at("aug_rng").get<std::string>());
    sum_parts_ = parts_from_json(s.at("sum_parts"));
    sum_total_ = s.at("sum_total").get<double>();
    sum_confident_ = s.at("sum_confident").get<double>();
    sum_count_ = s.at("sum_count").get<std::int64_t>();
    last_lr_ = s.at("last_lr").get<double>();
    last_accuracy_.reset();
    if (!s.at("last_accuracy").is_null()) last_accuracy_ = s.at("last_accuracy").get<double>();
    metrics_bytes_ = s.at("metrics_bytes").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "malformed checkpoint state: " + std::string(e.what()));
  }

  // Drop metrics written after the checkpoint, then reload the eval records.
  const auto path = metrics_path();
  require(std::filesystem::exists(path) && std::filesystem::file_size(path) >= metrics_bytes_,
          ErrorCode::state, "metrics file " + path.string() + " is shorter than the checkpoint expects");
  std::filesystem::resize_file(path, metrics_bytes_);
  metrics_.records.clear();
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      const auto j = json::parse(line);
      if (j.at("type") != "eval") continue;
      EvalRecord r;
      r.step = j.at("step").get<std::int64_t>();
      r.joint_step = j.at("joint_step").get<std::int64_t>();
      r.phase = parse_phase(j.at("phase").get<std::string>());
      r.test_accuracy = j.at("test_accuracy").get<double>();
      r.labels = j.at("labels").get<std::size_t>();
      r.lr = j.at("lr").get<double>();
      r.mean_parts = parts_from_json(j.at("losses"));
      r.mean_total = j.at("total_loss").get<double>();
      r.confident_fraction = j.at("confident_fraction").get<double>();
      metrics_.records.push_back(r);
    }
  }
  const auto bytes = metrics_bytes_;
  open_metrics(false);
  metrics_bytes_ = bytes;
}

SeedSummary summarize(std::vector<std::uint64_t> seeds, std::vector<double> accuracies) {
  require(seeds.size() == accuracies.size() && !seeds.empty(), ErrorCode::domain,
          "summary needs one accuracy per seed");
  SeedSummary s;
  s.seeds = std::move(seeds);
  s.final_accuracy = std::move(accuracies);
  const double n = static_cast<double>(s.final_accuracy.size());
  s.mean = std::accumulate(s.final_accuracy.begin(), s.final_accuracy.end(), 0.0) / n;
  if (s.final_accuracy.size() > 1) {
    double ss = 0.0;
    for (double a : s.final_accuracy) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::string to_json(const SeedSummary& s) {
  return json{{"seeds", s.seeds},
              {"final_accuracy", s.final_accuracy},
              {"mean", s.mean},
              {"stddev", s.stddev}}
      .dump(2);
}

}  // namespace almatch
