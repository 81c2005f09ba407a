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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "almatch/image.hpp"

namespace almatch {

struct Dataset;

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Encoder architecture. The trunk is either `conv` (3x3 conv, per-sample
/// norm, ReLU, 2x2 max-pool per block) or `mlp` (dense + ReLU per hidden
/// layer). Both heads sit on the trunk features: a two-layer projection head
/// whose output is L2-normalised, and a linear classification head.
struct ArchSpec {
  enum class Kind { conv, mlp };

  Kind kind = Kind::conv;
  int image_side = 32;
  int image_channels = 3;
  std::vector<int> conv_channels = {16, 32, 64, 64};
  std::vector<int> mlp_hidden = {128};
  int proj_hidden = 128;
  int proj_dim = 128;
  int num_classes = 10;

  /// Throws Error(config) for empty/non-positive sizes or a side that the
  /// conv blocks cannot halve cleanly.
  void validate() const;

  std::string to_json() const;
  static ArchSpec from_json(const std::string& text);

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

enum class Mode { train, eval };
enum class ParamGroup { trunk, projection, classifier };

template <class S>
struct Param {
  std::string name;
  ParamGroup group = ParamGroup::trunk;
  Matrix<S> value;
};

namespace layers {

struct Shape {
  int h = 1;
  int w = 1;
  int c = 1;
  int per_sample() const { return h * w * c; }
};

template <class S>
struct Cache {
  Matrix<S> m;
  Matrix<S> aux;
  std::vector<int> idx;
};

template <class S>
struct Conv3x3 {
  Shape in;
  int out_channels = 0;
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>> p, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>> p, const Cache<S>& cache,
                     std::span<Matrix<S>> grads) const;
};

/// Normalises each sample over all of its (h, w, c) entries, then applies a
/// per-channel scale and shift. No batch statistics, so train and eval agree.
template <class S>
struct SampleNorm {
  Shape in;
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>> p, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>> p, const Cache<S>& cache,
                     std::span<Matrix<S>> grads) const;
};

template <class S>
struct Relu {
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>>, const Cache<S>& cache,
                     std::span<Matrix<S>>) const;
};

template <class S>
struct MaxPool2 {
  Shape in;
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>>, const Cache<S>& cache,
                     std::span<Matrix<S>>) const;
};

/// (n*h*w) x c spatial rows to n x (h*w*c); a pure reshape in row-major order.
template <class S>
struct Flatten {
  Shape in;
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>*) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>>, const Cache<S>&,
                     std::span<Matrix<S>>) const;
};

template <class S>
struct Dense {
  int in_features = 0;
  int out_features = 0;
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>> p, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>> p, const Cache<S>& cache,
                     std::span<Matrix<S>> grads) const;
};

template <class S>
struct L2Normalize {
  Matrix<S> forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>* cache) const;
  Matrix<S> backward(const Matrix<S>& dy, std::span<const Param<S>>, const Cache<S>& cache,
                     std::span<Matrix<S>>) const;
};

template <class S>
using Layer = std::variant<Conv3x3<S>, SampleNorm<S>, Relu<S>, MaxPool2<S>, Flatten<S>,
                           Dense<S>, L2Normalize<S>>;

}  // namespace layers

/// Intermediate values of one forward pass, kept for the backward pass.
template <class S>
struct ForwardPass {
  Matrix<S> reps;    ///< n x proj_dim, unit rows
  Matrix<S> logits;  ///< n x num_classes
  std::vector<layers::Cache<S>> trunk, projection, classifier;
  Matrix<S> features;
  bool has_cache = false;

  /// Row-wise softmax of `logits`.
  Matrix<S> probs() const;
};

/// Gradient buffers aligned with EncoderNet::parameters().
template <class S>
struct Gradients {
  std::vector<Matrix<S>> grads;
};

/// Encoder with projection and classification heads.
///
/// forward() and backward() are const: parameters change only through
/// Sgd::step, so concurrent forwards on a shared net are safe.
template <class S>
class EncoderNet {
 public:
  EncoderNet() = default;
  EncoderNet(const ArchSpec& arch, std::uint64_t seed);

  const ArchSpec& arch() const noexcept { return arch_; }
  int input_size() const { return arch_.image_side * arch_.image_side * arch_.image_channels; }

  /// `x` is n x (side*side*channels), one interleaved image per row. Train
  /// mode keeps the caches needed by backward().
  ForwardPass<S> forward(const Matrix<S>& x, Mode mode) const;

  /// Back-propagates d(loss)/d(reps) and d(loss)/d(logits) from a train-mode
  /// pass. Either matrix may be empty (treated as zero).
  Gradients<S> backward(const ForwardPass<S>& pass, const Matrix<S>& d_reps,
                        const Matrix<S>& d_logits) const;

  std::vector<Param<S>>& parameters() noexcept { return params_; }
  const std::vector<Param<S>>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  Gradients<S> zero_gradients() const;

  template <class T>
  EncoderNet<T> cast() const;

 private:
  template <class T>
  friend class EncoderNet;

  struct Stage {
    std::vector<layers::Layer<S>> layers;
    std::vector<std::size_t> param_offset;  // first parameter index per layer
    std::vector<std::size_t> param_count;
  };

  Matrix<S> run_stage(const Stage& stage, const Matrix<S>& x,
                      std::vector<layers::Cache<S>>* caches) const;
  Matrix<S> back_stage(const Stage& stage, const Matrix<S>& dy,
                       const std::vector<layers::Cache<S>>& caches, Gradients<S>& g) const;

  ArchSpec arch_;
  std::vector<Param<S>> params_;
  Stage trunk_, projection_, classifier_;
};

extern template class EncoderNet<float>;
extern template class EncoderNet<double>;

/// Stacks images into the row layout expected by EncoderNet::forward.
template <class S>
Matrix<S> stack_images(std::span<const Image* const> images);
template <class S>
Matrix<S> stack_images(std::span<const Image> images);

/// SGD with momentum and decoupled weight decay:
///   v <- momentum * v + g;   w <- w - lr * v - lr * weight_decay * w.
template <class S>
class Sgd {
 public:
  Sgd(S momentum = S(0.9), S weight_decay = S(5e-4))
      : momentum_(momentum), weight_decay_(weight_decay) {}

  /// Updates the parameters whose group is listed in `groups`; others are
  /// left untouched (including their momentum). Throws Error(numeric) on a
  /// non-finite gradient.
  void step(EncoderNet<S>& net, const Gradients<S>& g, S lr,
            std::span<const ParamGroup> groups);

  std::vector<Matrix<S>>& velocity() noexcept { return velocity_; }
  const std::vector<Matrix<S>>& velocity() const noexcept { return velocity_; }

 private:
  S momentum_;
  S weight_decay_;
  std::vector<Matrix<S>> velocity_;
};

inline constexpr ParamGroup kAllGroups[] = {ParamGroup::trunk, ParamGroup::projection,
                                            ParamGroup::classifier};
inline constexpr ParamGroup kRepresentationGroups[] = {ParamGroup::trunk,
                                                       ParamGroup::projection};

/// Writes `index,label,r0,...,r{d-1}` rows (header line first) with the
/// projection of every image, evaluated in eval mode without augmentation.
void export_embeddings(const EncoderNet<float>& net, const Dataset& ds,
                       const std::filesystem::path& out, std::size_t chunk = 256);

}  // namespace almatch
