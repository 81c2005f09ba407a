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

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "almatch/image.hpp"
#include "almatch/oracle.hpp"

namespace httplib {
class Server;
}

namespace almatch {

/// 8-bit PNG (grayscale for 1 channel, RGB for 3) of an image in [0, 1].
std::vector<unsigned char> encode_png(const Image& img);

struct RunStatus {
  std::size_t labels_collected = 0;
  std::size_t budget = 0;
  std::optional<double> test_accuracy;
  std::int64_t step = 0;
  std::string phase = "init";
};

/// Latest run metrics, written by the trainer and read by the label service.
class StatusBoard {
 public:
  void set(const RunStatus& s) {
    std::lock_guard lock(mu_);
    status_ = s;
  }
  RunStatus get() const {
    std::lock_guard lock(mu_);
    return status_;
  }

 private:
  mutable std::mutex mu_;
  RunStatus status_;
};

/// HTTP front of a LabelQueue, under /api/v1 (also answered at /api):
///
///   GET  /api/v1/queries/next     200 query JSON | 204 when idle
///   GET  /api/v1/images/{id}      200 image/png | 404
///   POST /api/v1/labels           {"query_id", "label"} -> 200 | 404 | 409 | 422
///   GET  /api/v1/status           run metrics JSON
///
/// Optional static files (the labeling UI build) are served from `/`.
class LabelServer {
 public:
  LabelServer(LabelQueue& queue, const StatusBoard& status,
              std::filesystem::path static_dir = {});
  ~LabelServer();

  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and serves on a background
  /// thread. Throws Error(io) if the address cannot be bound.
  void start(const std::string& bind_address);
  void stop();

  int port() const noexcept { return port_; }

 private:
  void install_routes();

  LabelQueue* queue_;
  const StatusBoard* status_;
  std::filesystem::path static_dir_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

/// Splits "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, int> parse_bind_address(const std::string& text);

}  // namespace almatch
