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

#include "almatch/almatch.h"

#include <atomic>
#include <cstring>
#include <fstream>
#include <string>
#include <thread>

#include "almatch/active.hpp"
#include "almatch/checkpoint.hpp"
#include "almatch/config.hpp"
#include "almatch/error.hpp"
#include "almatch/label_server.hpp"
#include "almatch/trainer.hpp"

struct almatch_config {
  almatch::TrainConfig cfg;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop{false};

template <class F>
almatch_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return ALMATCH_OK;
  } catch (const almatch::Error& e) {
    g_last_error = e.what();
    return static_cast<almatch_status>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return ALMATCH_E_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ALMATCH_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ALMATCH_E_INTERNAL;
  }
}

almatch_status bad_argument(const char* what) {
  g_last_error = what;
  return ALMATCH_E_ARGUMENT;
}

void log(const almatch_run_options& o, const std::string& msg) {
  if (o.log) o.log(msg.c_str(), o.log_user);
}

almatch_run_report train_one(const almatch::TrainConfig& cfg, const almatch_run_options& opts) {
  using namespace almatch;
  cfg.validate();
  auto [train, test] = load_datasets(cfg.data, cfg.seed);
  Trainer trainer(cfg, train, test);
  if (opts.resume) {
    trainer.resume(trainer.checkpoint_path());
    log(opts, "resumed at step " + std::to_string(trainer.step()) + " (" +
                  to_string(trainer.phase()) + ")");
  }
  trainer.on_step = [&](const Trainer& t, const StepMetrics& m) {
    if (t.step() % cfg.eval_every != 0) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "step %lld  %s  labels %zu  loss %.4f  lr %.5f",
                  static_cast<long long>(t.step()), to_string(t.phase()).c_str(),
                  t.split().labeled().size(), m.total, m.lr);
    log(opts, buf);
  };

  RunResult result;
  if (opts.oracle == ALMATCH_ORACLE_HUMAN) {
    LabelQueue queue;
    StatusBoard board;
    LabelServer server(queue, board, cfg.static_dir);
    server.start(cfg.oracle_bind);
    log(opts, "label service listening on port " + std::to_string(server.port()));
    std::atomic<bool> finished{false};
    std::thread watcher([&] {
      while (!finished.load()) {
        if (g_stop.load()) {
          queue.close();
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    });
    HumanOracle oracle(queue);
    try {
      result = trainer.run(oracle, &board, &g_stop);
    } catch (const Error& e) {
      finished = true;
      watcher.join();
      if (!(g_stop.load() && e.code() == ErrorCode::oracle)) throw;
      result.stopped = true;
      result.labels = trainer.split().labeled().size();
    }
    if (watcher.joinable()) {
      finished = true;
      watcher.join();
    }
    server.stop();
  } else {
    SimulatedOracle oracle(train);
    result = trainer.run(oracle, nullptr, &g_stop);
  }

  almatch_run_report report{};
  report.final_accuracy = result.final_accuracy;
  report.labels = result.labels;
  report.steps = trainer.step();
  report.stopped = result.stopped ? 1 : 0;
  if (!result.stopped) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "finished: test accuracy %.4f with %zu labels",
                  result.final_accuracy, result.labels);
    log(opts, buf);
  }
  return report;
}

almatch::Checkpoint load_for_eval(const char* checkpoint, const char* data_dir,
                                  almatch::TrainConfig& cfg) {
  auto ckpt = almatch::load_checkpoint(checkpoint);
  try {
    cfg = almatch::TrainConfig::parse(ckpt.state.at("config").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    almatch::fail(almatch::ErrorCode::format, "checkpoint has no stored config");
  }
  if (data_dir && *data_dir) cfg.data.dir = data_dir;
  return ckpt;
}

}  // namespace

extern "C" {

const char* almatch_version(void) { return "1.0.0"; }

const char* almatch_last_error(void) { return g_last_error.c_str(); }

const char* almatch_status_name(almatch_status status) {
  if (status == ALMATCH_OK) return "ok";
  if (status == ALMATCH_E_ARGUMENT) return "argument";
  return almatch::to_string(static_cast<almatch::ErrorCode>(status));
}

almatch_status almatch_config_new(almatch_config** out) {
  if (!out) return bad_argument("out is NULL");
  return guarded([&] { *out = new almatch_config{}; });
}

almatch_status almatch_config_load(const char* path, almatch_config** out) {
  if (!path || !out) return bad_argument("path and out must be non-NULL");
  return guarded([&] { *out = new almatch_config{almatch::TrainConfig::load(path)}; });
}

almatch_status almatch_config_set(almatch_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return bad_argument("cfg, key and value must be non-NULL");
  return guarded([&] { cfg->cfg.set(key, value); });
}

almatch_status almatch_config_validate(const almatch_config* cfg) {
  if (!cfg) return bad_argument("cfg is NULL");
  return guarded([&] { cfg->cfg.validate(); });
}

almatch_status almatch_config_to_text(const almatch_config* cfg, char* buf, size_t capacity,
                                      size_t* needed) {
  if (!cfg) return bad_argument("cfg is NULL");
  return guarded([&] {
    const std::string text = cfg->cfg.to_text();
    if (needed) *needed = text.size() + 1;
    if (!buf) return;
    if (capacity < text.size() + 1) {
      almatch::fail(almatch::ErrorCode::domain, "buffer too small for config text");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

void almatch_config_free(almatch_config* cfg) { delete cfg; }

void almatch_run_options_init(almatch_run_options* opts) {
  if (!opts) return;
  *opts = almatch_run_options{ALMATCH_ORACLE_SIMULATED, 0, nullptr, nullptr};
}

almatch_status almatch_train(const almatch_config* cfg, const almatch_run_options* opts,
                             almatch_run_report* report) {
  if (!cfg) return bad_argument("cfg is NULL");
  almatch_run_options o;
  almatch_run_options_init(&o);
  if (opts) o = *opts;
  g_stop = false;
  return guarded([&] {
    const auto r = train_one(cfg->cfg, o);
    if (report) *report = r;
  });
}

almatch_status almatch_train_seeds(const almatch_config* cfg, const uint64_t* seeds, size_t count,
                                   const almatch_run_options* opts, almatch_summary* summary) {
  if (!cfg || !seeds || count == 0) return bad_argument("cfg and a non-empty seed list are required");
  almatch_run_options o;
  almatch_run_options_init(&o);
  if (opts) o = *opts;
  g_stop = false;
  return guarded([&] {
    std::vector<std::uint64_t> done;
    std::vector<double> acc;
    for (size_t i = 0; i < count; ++i) {
      almatch::TrainConfig c = cfg->cfg;
      c.seed = seeds[i];
      c.out_dir = cfg->cfg.out_dir / ("seed-" + std::to_string(seeds[i]));
      log(o, "seed " + std::to_string(seeds[i]));
      const auto r = train_one(c, o);
      if (r.stopped) {
        almatch::fail(almatch::ErrorCode::state, "stopped during seed " + std::to_string(seeds[i]));
      }
      done.push_back(seeds[i]);
      acc.push_back(r.final_accuracy);
    }
    const auto s = almatch::summarize(done, acc);
    std::filesystem::create_directories(cfg->cfg.out_dir);
    std::ofstream out(cfg->cfg.out_dir / "summary.json");
    out << almatch::to_json(s) << '\n';
    if (!out) almatch::fail(almatch::ErrorCode::io, "cannot write summary.json");
    if (summary) *summary = almatch_summary{s.mean, s.stddev, done.size()};
  });
}

void almatch_request_stop(void) { g_stop = true; }

almatch_status almatch_evaluate_checkpoint(const char* checkpoint, const char* data_dir,
                                           double* accuracy) {
  if (!checkpoint || !accuracy) return bad_argument("checkpoint and accuracy must be non-NULL");
  return guarded([&] {
    almatch::TrainConfig cfg;
    const auto ckpt = load_for_eval(checkpoint, data_dir, cfg);
    const auto net = almatch::restore_net(ckpt);
    const auto [train, test] = almatch::load_datasets(cfg.data, cfg.seed);
    *accuracy = almatch::evaluate(net, test);
  });
}

almatch_status almatch_export_embeddings(const char* checkpoint, const char* data_dir,
                                         almatch_split split, const char* out_csv) {
  if (!checkpoint || !out_csv) return bad_argument("checkpoint and out_csv must be non-NULL");
  return guarded([&] {
    almatch::TrainConfig cfg;
    const auto ckpt = load_for_eval(checkpoint, data_dir, cfg);
    const auto net = almatch::restore_net(ckpt);
    const auto [train, test] = almatch::load_datasets(cfg.data, cfg.seed);
    almatch::export_embeddings(net, split == ALMATCH_SPLIT_TEST ? test : train, out_csv);
  });
}

almatch_status almatch_cosine_lr(int64_t k, int64_t total, double lr0, double* out) {
  if (!out) return bad_argument("out is NULL");
  return guarded([&] { *out = almatch::cosine_lr(k, total, lr0); });
}

almatch_status almatch_margin(const double* probs, size_t n, double* out) {
  if (!probs || !out) return bad_argument("probs and out must be non-NULL");
  return guarded([&] { *out = almatch::margin<double>(std::span<const double>(probs, n)); });
}

}  // extern "C"
