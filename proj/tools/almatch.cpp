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

// almatch command-line front end. Talks to the engine only through the C API.

#include <csignal>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "almatch/almatch.h"

namespace {

void on_signal(int) { almatch_request_stop(); }

void print_line(const char* message, void*) {
  std::fprintf(stderr, "%s\n", message);
}

int report(almatch_status st) {
  if (st != ALMATCH_OK) {
    std::fprintf(stderr, "error (%s): %s\n", almatch_status_name(st), almatch_last_error());
  }
  return static_cast<int>(st);
}

struct Overrides {
  std::string data_dir;
  std::string dataset;
  std::string seed;
  std::vector<std::string> sets;
};

// Loads the config file and applies --set pairs, then the global flags.
almatch_status build_config(const std::string& path, const Overrides& ov, almatch_config** out) {
  almatch_status st = almatch_config_load(path.c_str(), out);
  if (st != ALMATCH_OK) return st;
  for (const auto& kv : ov.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
      return ALMATCH_E_ARGUMENT;
    }
    st = almatch_config_set(*out, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != ALMATCH_OK) return st;
  }
  if (!ov.dataset.empty() && (st = almatch_config_set(*out, "data.dataset", ov.dataset.c_str())))
    return st;
  if (!ov.data_dir.empty() && (st = almatch_config_set(*out, "data.dir", ov.data_dir.c_str())))
    return st;
  if (!ov.seed.empty() && (st = almatch_config_set(*out, "seed", ov.seed.c_str()))) return st;
  return almatch_config_validate(*out);
}

int run_training(const std::string& config_path, const Overrides& ov, bool human, bool resume,
                 const std::vector<std::uint64_t>& seeds) {
  almatch_config* cfg = nullptr;
  almatch_status st = build_config(config_path, ov, &cfg);
  if (st != ALMATCH_OK) {
    almatch_config_free(cfg);
    return report(st);
  }
  almatch_run_options opts;
  almatch_run_options_init(&opts);
  opts.oracle = human ? ALMATCH_ORACLE_HUMAN : ALMATCH_ORACLE_SIMULATED;
  opts.resume = resume ? 1 : 0;
  opts.log = print_line;

  if (seeds.empty()) {
    almatch_run_report r{};
    st = almatch_train(cfg, &opts, &r);
    if (st == ALMATCH_OK) {
      std::printf("{\"final_accuracy\": %.6f, \"labels\": %llu, \"steps\": %lld, \"stopped\": %s}\n",
                  r.final_accuracy, static_cast<unsigned long long>(r.labels),
                  static_cast<long long>(r.steps), r.stopped ? "true" : "false");
    }
  } else {
    almatch_summary s{};
    st = almatch_train_seeds(cfg, seeds.data(), seeds.size(), &opts, &s);
    if (st == ALMATCH_OK) {
      std::printf("{\"runs\": %llu, \"mean\": %.6f, \"stddev\": %.6f}\n",
                  static_cast<unsigned long long>(s.runs), s.mean, s.stddev);
    }
  }
  almatch_config_free(cfg);
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"almatch: semi-supervised training with active label acquisition"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", almatch_version());

  Overrides ov;
  app.add_option("--data-dir", ov.data_dir, "Directory with the CIFAR binary batches");
  app.add_option("--dataset", ov.dataset, "cifar10, cifar100 or blobs (SVHN is not supported)")
      ->check(CLI::IsMember({"cifar10", "cifar100", "blobs"}));
  app.add_option("--seed", ov.seed, "Run seed");

  std::string config_path, oracle = "sim";
  bool resume = false;
  std::vector<std::uint64_t> seeds;
  auto* train = app.add_subcommand("train", "Run warm-up, joint training and label queries");
  train->add_option("--config", config_path, "Config file (key = value lines)")->required();
  train->add_option("--oracle", oracle, "Label source")->check(CLI::IsMember({"sim", "human"}));
  train->add_option("--seeds", seeds, "Run once per seed and write summary.json")->delimiter(',');
  train->add_option("--set", ov.sets, "Override a config key (key=value), repeatable");
  train->add_flag("--resume", resume, "Continue from <out_dir>/checkpoint.bin");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Test accuracy of a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  std::string out_csv, split = "train";
  auto* exp = app.add_subcommand("export-embeddings", "Write projection vectors as CSV");
  exp->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  exp->add_option("--out", out_csv, "Output CSV")->required();
  exp->add_option("--split", split, "Which split to embed")->check(CLI::IsMember({"train", "test"}));

  std::string bind;
  auto* serve = app.add_subcommand(
      "serve-labeler", "Train with a human oracle answering over HTTP at --bind");
  serve->add_option("--bind", bind, "host:port (bare port binds 127.0.0.1)")->required();
  serve->add_option("--config", config_path, "Config file")->required();
  serve->add_option("--set", ov.sets, "Override a config key (key=value), repeatable");
  serve->add_flag("--resume", resume, "Continue from <out_dir>/checkpoint.bin");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  if (*train) return run_training(config_path, ov, oracle == "human", resume, seeds);
  if (*serve) {
    ov.sets.push_back("oracle.bind=" + bind);
    return run_training(config_path, ov, true, resume, {});
  }
  if (*eval) {
    double acc = 0.0;
    const almatch_status st =
        almatch_evaluate_checkpoint(checkpoint.c_str(), ov.data_dir.c_str(), &acc);
    if (st == ALMATCH_OK) std::printf("{\"test_accuracy\": %.6f}\n", acc);
    return report(st);
  }
  if (*exp) {
    return report(almatch_export_embeddings(checkpoint.c_str(), ov.data_dir.c_str(),
                                            split == "test" ? ALMATCH_SPLIT_TEST : ALMATCH_SPLIT_TRAIN,
                                            out_csv.c_str()));
  }
  return 0;
}
