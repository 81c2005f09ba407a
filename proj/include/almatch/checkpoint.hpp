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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "almatch/model.hpp"

namespace almatch {

struct NamedArray {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> data;  ///< row-major
};

/// Named-array container.
///
/// Layout (all integers little-endian):
///
///   bytes 0..7    magic "ALMCKPT1"
///   u32           format version (1)
///   u64           header length H
///   H bytes       UTF-8 JSON header: {"format_version", "arch", "state",
///                 "arrays": [{"name", "rows", "cols", "offset"}]}
///   payload       float32 array data; offsets count bytes from the payload
///                 start
///
/// `state` is free-form JSON owned by the writer (the trainer stores its
/// counters, RNG states, split and config there).
struct Checkpoint {
  ArchSpec arch;
  nlohmann::json state = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes to a sibling temporary file and renames it into place, so a crash
/// never leaves a truncated checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws Error(io) if unreadable, Error(format) for a bad magic, an unknown
/// version or inconsistent array extents.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Stores parameters as "param/<name>" arrays.
void store_parameters(Checkpoint& ckpt, const EncoderNet<float>& net);

/// Rebuilds a net from `ckpt.arch` and its "param/<name>" arrays. Throws
/// Error(format) on a missing array or a shape mismatch.
EncoderNet<float> restore_net(const Checkpoint& ckpt);

}  // namespace almatch
