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

#include <array>
#include <string_view>
#include <utility>

#include "almatch/image.hpp"
#include "almatch/rng.hpp"

namespace almatch {

enum class AugmentKind { contrastive, weak, strong };

/// Augmentation regime and its knobs. Build with the factory functions and
/// call `validate(image_side)` before use (the trainer does this once, so
/// per-call application never throws on configuration).
struct AugmentPolicy {
  AugmentKind kind = AugmentKind::weak;

  // contrastive
  int crop_padding = 4;
  double color_strength = 0.5;
  double color_prob = 0.8;
  double grayscale_prob = 0.2;
  double blur_prob = 0.5;

  // shared (contrastive + weak)
  double flip_prob = 0.5;

  // strong
  int randaugment_ops = 2;
  int randaugment_magnitude = 10;
  /// Side of the zeroed square; 0 means side/2 (16 px for 32-px images).
  int cutout_size = 0;

  static AugmentPolicy contrastive();
  static AugmentPolicy weak();
  static AugmentPolicy strong();

  /// Throws Error(config) if a probability is outside [0, 1], the cutout is
  /// larger than the image, or a strong policy has no RandAugment ops.
  void validate(int image_side) const;

  int effective_cutout(int image_side) const {
    return cutout_size > 0 ? cutout_size : image_side / 2;
  }
};

/// Applies `policy` to `img`, drawing from `rng`. Output has the input's
/// shape and lies in [0, 1].
Image apply(const AugmentPolicy& policy, const Image& img, Rng& rng);

/// Two independent draws of the contrastive policy.
std::pair<Image, Image> contrastive_pair(const AugmentPolicy& policy,
                                         const Image& img, Rng& rng);

/// One weak and one strong draw.
std::pair<Image, Image> weak_strong_pair(const AugmentPolicy& weak,
                                         const AugmentPolicy& strong,
                                         const Image& img, Rng& rng);

// Individual operations, exposed for tests and for the RandAugment pool.
namespace ops {

Image hflip(const Image& img);
/// Reflect-pads by `pad` and crops the original size at (dy, dx) in
/// [0, 2*pad].
Image padded_crop(const Image& img, int pad, int dy, int dx);
Image grayscale(const Image& img);
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_saturation(const Image& img, double factor);
Image gaussian_blur(const Image& img, double sigma);
Image cutout(const Image& img, int size, int top, int left);

Image auto_contrast(const Image& img);
Image equalize(const Image& img);
Image rotate(const Image& img, double degrees);
Image solarize(const Image& img, double threshold);
Image posterize(const Image& img, int bits);
Image sharpness(const Image& img, double factor);
Image shear_x(const Image& img, double shear);
Image shear_y(const Image& img, double shear);
Image translate_x(const Image& img, int pixels);
Image translate_y(const Image& img, int pixels);

enum class RandOp {
  identity,
  auto_contrast,
  equalize,
  rotate,
  solarize,
  color,
  posterize,
  contrast,
  brightness,
  sharpness,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
};
inline constexpr int kRandOpCount = 14;

std::string_view name(RandOp op);

/// Applies one RandAugment op at magnitude in [0, 30]; signed ops draw their
/// direction from `rng`.
Image apply_rand_op(RandOp op, const Image& img, int magnitude, Rng& rng);

}  // namespace ops

}  // namespace almatch
