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

#include "almatch/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "almatch/error.hpp"

namespace almatch {

namespace {

constexpr char kMagic[8] = {'A', 'L', 'M', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["arch"] = nlohmann::json::parse(ckpt.arch.to_json());
  header["state"] = ckpt.state;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    require(static_cast<std::size_t>(a.rows * a.cols) == a.data.size(), ErrorCode::internal,
            "array " + a.name + " has inconsistent extents");
    header["arrays"].push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols},
                                {"offset", offset}});
    offset += a.data.size() * sizeof(float);
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : ckpt.arrays) {
      out.write(reinterpret_cast<const char*>(a.data.data()),
                static_cast<std::streamsize>(a.data.size() * sizeof(float)));
    }
    require(out.good(), ErrorCode::io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  require(in.good() && std::memcmp(magic, kMagic, sizeof magic) == 0, ErrorCode::format,
          path.string() + " is not a checkpoint");
  const auto version = read_pod<std::uint32_t>(in);
  require(version == kCheckpointVersion, ErrorCode::format,
          "unsupported checkpoint version " + std::to_string(version));
  const auto header_len = read_pod<std::uint64_t>(in);
  require(in.good() && header_len < (1ull << 32), ErrorCode::format, "corrupt checkpoint header");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  require(in.good(), ErrorCode::format, "truncated checkpoint header");

  Checkpoint ckpt;
  const std::streamoff payload_start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::streamoff payload_size = in.tellg() - payload_start;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.arch = ArchSpec::from_json(header.at("arch").dump());
    ckpt.state = header.at("state");
    for (const auto& entry : header.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      a.rows = entry.at("rows").get<std::int64_t>();
      a.cols = entry.at("cols").get<std::int64_t>();
      const auto offset = entry.at("offset").get<std::int64_t>();
      require(a.rows >= 0 && a.cols >= 0 && offset >= 0, ErrorCode::format,
              "bad extents for array " + a.name);
      const std::int64_t bytes = a.rows * a.cols * static_cast<std::int64_t>(sizeof(float));
      require(offset + bytes <= payload_size, ErrorCode::format,
              "array " + a.name + " runs past the end of the checkpoint");
      a.data.resize(static_cast<std::size_t>(a.rows * a.cols));
      in.seekg(payload_start + offset);
      in.read(reinterpret_cast<char*>(a.data.data()), bytes);
      ckpt.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format, "malformed checkpoint header: " + std::string(e.what()));
  }
  require(in.good(), ErrorCode::io, "failed reading " + path.string());
  return ckpt;
}

void store_parameters(Checkpoint& ckpt, const EncoderNet<float>& net) {
  ckpt.arch = net.arch();
  for (const auto& p : net.parameters()) {
    NamedArray a{"param/" + p.name, p.value.rows(), p.value.cols(), {}};
    a.data.assign(p.value.data(), p.value.data() + p.value.size());
    ckpt.arrays.push_back(std::move(a));
  }
}

EncoderNet<float> restore_net(const Checkpoint& ckpt) {
  EncoderNet<float> net(ckpt.arch, 0);
  for (auto& p : net.parameters()) {
    const NamedArray* a = ckpt.find("param/" + p.name);
    require(a != nullptr, ErrorCode::format, "checkpoint lacks parameter " + p.name);
    require(a->rows == p.value.rows() && a->cols == p.value.cols(), ErrorCode::format,
            "shape mismatch for parameter " + p.name);
    std::memcpy(p.value.data(), a->data.data(), a->data.size() * sizeof(float));
  }
  return net;
}

}  // namespace almatch
