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

#include "almatch/label_server.hpp"

#include <chrono>
#include <cmath>
#include <string_view>

#include <httplib.h>
#include <zlib.h>

#include <nlohmann/json.hpp>

#include "almatch/error.hpp"

namespace almatch {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, std::string_view type,
               const std::vector<unsigned char>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::int64_t epoch_millis(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

}  // namespace

std::vector<unsigned char> encode_png(const Image& img) {
  require(img.channels == 1 || img.channels == 3, ErrorCode::domain,
          "PNG export supports 1 or 3 channels");
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<unsigned char> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    for (std::size_t i = 0; i < stride; ++i) {
      const float v = img.pixels[y * stride + i];
      raw.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK) {
    fail(ErrorCode::internal, "zlib compression failed");
  }
  packed.resize(packed_size);

  std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                          // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);  // colour type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

std::pair<std::string, int> parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : text.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? text : text.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  require(port >= 0 && port <= 65535, ErrorCode::config, "bad bind address '" + text + "'");
  return {host, port};
}

LabelServer::LabelServer(LabelQueue& queue, const StatusBoard& status,
                         std::filesystem::path static_dir)
    : queue_(&queue),
      status_(&status),
      static_dir_(std::move(static_dir)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

LabelServer::~LabelServer() { stop(); }

void LabelServer::install_routes() {
  using nlohmann::json;
  auto& svr = *server_;
  for (const std::string prefix : {"/api/v1", "/api"}) {
    svr.Get(prefix + "/queries/next", [this](const httplib::Request&, httplib::Response& res) {
      const auto q = queue_->next_pending();
      if (!q) {
        res.status = 204;
        return;
      }
      json j;
      j["query_id"] = q->query_id;
      j["dataset_index"] = q->dataset_index;
      j["image_url"] = "/api/v1/images/" + std::to_string(q->query_id);
      j["issued_at"] = epoch_millis(q->issued_at);
      j["class_names"] = q->class_names;
      j["pending"] = queue_->pending_count();
      res.set_content(j.dump(), "application/json");
    });

    svr.Get(prefix + R"(/images/(\d+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
      const auto id = std::stoull(req.matches[1].str());
      const auto q = queue_->find_pending(id);
      if (!q) {
        res.status = 404;
        return;
      }
      const auto png = encode_png(q->image);
      res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    });

    svr.Post(prefix + "/labels", [this](const httplib::Request& req, httplib::Response& res) {
      std::uint64_t id = 0;
      int label = 0;
      try {
        const auto body = json::parse(req.body);
        const auto& qid = body.at("query_id");
        const auto& lab = body.at("label");
        if (!qid.is_number_integer() || !lab.is_number_integer()) throw std::invalid_argument("type");
        id = qid.get<std::uint64_t>();
        label = lab.get<int>();
      } catch (const std::exception&) {
        res.status = 422;
        res.set_content(R"({"error":"body must be {\"query_id\": int, \"label\": int}"})",
                        "application/json");
        return;
      }
      switch (queue_->submit(id, label)) {
        case SubmitResult::accepted:
          res.status = 200;
          res.set_content(R"({"status":"accepted"})", "application/json");
          break;
        case SubmitResult::unknown_query:
          res.status = 404;
          res.set_content(R"({"error":"unknown query_id"})", "application/json");
          break;
        case SubmitResult::already_answered:
          res.status = 409;
          res.set_content(R"({"error":"query already answered"})", "application/json");
          break;
        case SubmitResult::invalid_label:
          res.status = 422;
          res.set_content(R"({"error":"label out of range"})", "application/json");
          break;
      }
    });

    svr.Get(prefix + "/status", [this](const httplib::Request&, httplib::Response& res) {
      const RunStatus s = status_->get();
      json j;
      j["schema_version"] = 1;
      j["labels_collected"] = s.labels_collected;
      j["budget"] = s.budget;
      j["test_accuracy"] = s.test_accuracy ? json(*s.test_accuracy) : json(nullptr);
      j["step"] = s.step;
      j["phase"] = s.phase;
      j["pending_queries"] = queue_->pending_count();
      res.set_content(j.dump(), "application/json");
    });
  }
  if (!static_dir_.empty()) svr.set_mount_point("/", static_dir_.string());
}

void LabelServer::start(const std::string& bind_address) {
  require(!thread_.joinable(), ErrorCode::state, "label server already running");
  const auto [host, port] = parse_bind_address(bind_address);
  // SO_REUSEADDR only: httplib's default adds SO_REUSEPORT, which would let a
  // second server share an address that is already in use.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) fail(ErrorCode::io, "cannot bind label server to " + bind_address);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void LabelServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace almatch
