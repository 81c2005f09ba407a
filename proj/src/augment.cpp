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

#include "almatch/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "almatch/error.hpp"

namespace almatch {

namespace {

constexpr float kFill = 0.5f;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

float luma(const Image& img, int y, int x) {
  if (img.channels < 3) return img.at(y, x, 0);
  return 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
         0.114f * img.at(y, x, 2);
}

// Blends `img` toward `base` by `factor` (factor 1 keeps img, 0 gives base).
Image blend(const Image& base, const Image& img, double factor) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.pixels[i] = clamp01(base.pixels[i] + factor * (img.pixels[i] - base.pixels[i]));
  }
  return out;
}

// Nearest-neighbour inverse warp; `src_of` maps a destination pixel centre to
// a source position.
template <class F>
Image warp(const Image& img, F src_of) {
  Image out(img.height, img.width, img.channels, kFill);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto [sy, sx] = src_of(y + 0.5, x + 0.5);
      const int iy = static_cast<int>(std::floor(sy));
      const int ix = static_cast<int>(std::floor(sx));
      if (iy < 0 || iy >= img.height || ix < 0 || ix >= img.width) continue;
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(iy, ix, c);
    }
  }
  return out;
}

double signed_level(int magnitude, Rng& rng) {
  const double level = magnitude / 30.0;
  return rng.bernoulli(0.5) ? -level : level;
}

Image color_jitter(const Image& img, double strength, Rng& rng) {
  const double lo = std::max(0.0, 1.0 - 0.8 * strength);
  const double hi = 1.0 + 0.8 * strength;
  const double fb = rng.uniform(lo, hi);
  const double fc = rng.uniform(lo, hi);
  const double fs = rng.uniform(lo, hi);
  std::array<int, 3> order = {0, 1, 2};
  rng.shuffle(std::span<int>(order));
  Image out = img;
  for (int op : order) {
    switch (op) {
      case 0: out = ops::adjust_brightness(out, fb); break;
      case 1: out = ops::adjust_contrast(out, fc); break;
      default: out = ops::adjust_saturation(out, fs); break;
    }
  }
  return out;
}

}  // namespace

AugmentPolicy AugmentPolicy::contrastive() {
  AugmentPolicy p;
  p.kind = AugmentKind::contrastive;
  return p;
}

AugmentPolicy AugmentPolicy::weak() {
  AugmentPolicy p;
  p.kind = AugmentKind::weak;
  return p;
}

AugmentPolicy AugmentPolicy::strong() {
  AugmentPolicy p;
  p.kind = AugmentKind::strong;
  return p;
}

void AugmentPolicy::validate(int image_side) const {
  auto prob = [](double p, const char* name) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::config,
            std::string("augment.") + name + " must be in [0,1]");
  };
  prob(flip_prob, "flip_prob");
  prob(color_prob, "color_prob");
  prob(grayscale_prob, "grayscale_prob");
  prob(blur_prob, "blur_prob");
  require(color_strength >= 0.0, ErrorCode::config, "augment.color_strength must be >= 0");
  require(crop_padding >= 0 && crop_padding < image_side, ErrorCode::config,
          "augment.crop_padding must be in [0, image side)");
  require(cutout_size >= 0, ErrorCode::config, "augment.cutout_size must be >= 0");
  require(effective_cutout(image_side) <= image_side, ErrorCode::config,
          "augment.cutout_size " + std::to_string(cutout_size) +
              " exceeds image side " + std::to_string(image_side));
  require(randaugment_magnitude >= 0 && randaugment_magnitude <= 30, ErrorCode::config,
          "augment.randaugment_m must be in [0,30]");
  if (kind == AugmentKind::strong) {
    require(randaugment_ops >= 1, ErrorCode::config, "augment.randaugment_n must be >= 1");
  }
}

Image apply(const AugmentPolicy& policy, const Image& img, Rng& rng) {
  switch (policy.kind) {
    case AugmentKind::weak: {
      return rng.bernoulli(policy.flip_prob) ? ops::hflip(img) : img;
    }
    case AugmentKind::contrastive: {
      const int pad = policy.crop_padding;
      const int dy = static_cast<int>(rng.between(0, 2 * pad));
      const int dx = static_cast<int>(rng.between(0, 2 * pad));
      Image out = pad > 0 ? ops::padded_crop(img, pad, dy, dx) : img;
      if (rng.bernoulli(policy.flip_prob)) out = ops::hflip(out);
      if (rng.bernoulli(policy.color_prob)) out = color_jitter(out, policy.color_strength, rng);
      if (rng.bernoulli(policy.grayscale_prob)) out = ops::grayscale(out);
      if (rng.bernoulli(policy.blur_prob)) out = ops::gaussian_blur(out, rng.uniform(0.1, 2.0));
      return out;
    }
    case AugmentKind::strong: {
      Image out = img;
      for (int i = 0; i < policy.randaugment_ops; ++i) {
        const auto op = static_cast<ops::RandOp>(rng.below(ops::kRandOpCount));
        out = ops::apply_rand_op(op, out, policy.randaugment_magnitude, rng);
      }
      const int side = std::min(img.height, img.width);
      const int size = policy.effective_cutout(side);
      const int top = static_cast<int>(rng.between(0, img.height - size));
      const int left = static_cast<int>(rng.between(0, img.width - size));
      return ops::cutout(out, size, top, left);
    }
  }
  return img;
}

std::pair<Image, Image> contrastive_pair(const AugmentPolicy& policy,
                                         const Image& img, Rng& rng) {
  Image first = apply(policy, img, rng);
  Image second = apply(policy, img, rng);
  return {std::move(first), std::move(second)};
}

std::pair<Image, Image> weak_strong_pair(const AugmentPolicy& weak,
                                         const AugmentPolicy& strong,
                                         const Image& img, Rng& rng) {
  Image w = apply(weak, img, rng);
  Image s = apply(strong, img, rng);
  return {std::move(w), std::move(s)};
}

namespace ops {

Image hflip(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
      }
    }
  }
  return out;
}

Image padded_crop(const Image& img, int pad, int dy, int dx) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    const int sy = reflect(y + dy - pad, img.height);
    for (int x = 0; x < img.width; ++x) {
      const int sx = reflect(x + dx - pad, img.width);
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

Image grayscale(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float l = luma(img, y, x);
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = clamp01(l);
    }
  }
  return out;
}

Image adjust_brightness(const Image& img, double factor) {
  return blend(Image(img.height, img.width, img.channels, 0.0f), img, factor);
}

Image adjust_contrast(const Image& img, double factor) {
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) mean += luma(img, y, x);
  }
  mean /= static_cast<double>(img.height) * img.width;
  return blend(Image(img.height, img.width, img.channels, static_cast<float>(mean)), img,
               factor);
}

Image adjust_saturation(const Image& img, double factor) {
  return blend(grayscale(img), img, factor);
}

Image gaussian_blur(const Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::lround(0.05 * img.width)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;

  Image tmp(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * img.at(y, reflect(x + i, img.width), c);
        }
        tmp.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(reflect(y + i, img.height), x, c);
        }
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

Image cutout(const Image& img, int size, int top, int left) {
  Image out = img;
  for (int y = std::max(0, top); y < std::min(img.height, top + size); ++y) {
    for (int x = std::max(0, left); x < std::min(img.width, left + size); ++x) {
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = 0.0f;
    }
  }
  return out;
}

Image auto_contrast(const Image& img) {
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    float lo = 1.0f;
    float hi = 0.0f;
    for (std::size_t i = c; i < img.size(); i += img.channels) {
      lo = std::min(lo, img.pixels[i]);
      hi = std::max(hi, img.pixels[i]);
    }
    if (hi <= lo) continue;
    for (std::size_t i = c; i < img.size(); i += img.channels) {
      out.pixels[i] = clamp01((img.pixels[i] - lo) / (hi - lo));
    }
  }
  return out;
}

Image equalize(const Image& img) {
  Image out = img;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < img.channels; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = c; i < img.size(); i += img.channels) {
      ++hist[static_cast<std::size_t>(std::lround(img.pixels[i] * 255.0f))];
    }
    std::array<std::size_t, 256> cdf{};
    std::size_t run = 0;
    for (std::size_t b = 0; b < 256; ++b) cdf[b] = run += hist[b];
    const std::size_t first = *std::find_if(cdf.begin(), cdf.end(),
                                            [](std::size_t v) { return v > 0; });
    if (n == first) continue;
    for (std::size_t i = c; i < img.size(); i += img.channels) {
      const auto b = static_cast<std::size_t>(std::lround(img.pixels[i] * 255.0f));
      out.pixels[i] = clamp01(static_cast<double>(cdf[b] - first) / (n - first));
    }
  }
  return out;
}

Image rotate(const Image& img, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cy = img.height / 2.0;
  const double cx = img.width / 2.0;
  return warp(img, [&](double y, double x) {
    const double ry = y - cy;
    const double rx = x - cx;
    return std::pair{cy + cs * ry - sn * rx, cx + sn * ry + cs * rx};
  });
}

Image solarize(const Image& img, double threshold) {
  Image out = img;
  for (float& p : out.pixels) {
    if (p >= threshold) p = 1.0f - p;
  }
  return out;
}

Image posterize(const Image& img, int bits) {
  bits = std::clamp(bits, 1, 8);
  const int mask = 0xff & ~((1 << (8 - bits)) - 1);
  Image out = img;
  for (float& p : out.pixels) {
    const int q = static_cast<int>(std::lround(p * 255.0f)) & mask;
    p = static_cast<float>(q) / 255.0f;
  }
  return out;
}

Image sharpness(const Image& img, double factor) {
  // 3x3 smoothing kernel (centre weight 5, neighbours 1, normalised by 13).
  Image smooth = img;
  for (int y = 1; y + 1 < img.height; ++y) {
    for (int x = 1; x + 1 < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 4.0 * img.at(y, x, c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) acc += img.at(y + dy, x + dx, c);
        }
        smooth.at(y, x, c) = static_cast<float>(acc / 13.0);
      }
    }
  }
  return blend(smooth, img, factor);
}

Image shear_x(const Image& img, double shear) {
  const double cy = img.height / 2.0;
  return warp(img, [&](double y, double x) { return std::pair{y, x + shear * (y - cy)}; });
}

Image shear_y(const Image& img, double shear) {
  const double cx = img.width / 2.0;
  return warp(img, [&](double y, double x) { return std::pair{y + shear * (x - cx), x}; });
}

Image translate_x(const Image& img, int pixels) {
  return warp(img, [&](double y, double x) { return std::pair{y, x - pixels}; });
}

Image translate_y(const Image& img, int pixels) {
  return warp(img, [&](double y, double x) { return std::pair{y - pixels, x}; });
}

std::string_view name(RandOp op) {
  switch (op) {
    case RandOp::identity: return "identity";
    case RandOp::auto_contrast: return "auto_contrast";
    case RandOp::equalize: return "equalize";
    case RandOp::rotate: return "rotate";
    case RandOp::solarize: return "solarize";
    case RandOp::color: return "color";
    case RandOp::posterize: return "posterize";
    case RandOp::contrast: return "contrast";
    case RandOp::brightness: return "brightness";
    case RandOp::sharpness: return "sharpness";
    case RandOp::shear_x: return "shear_x";
    case RandOp::shear_y: return "shear_y";
    case RandOp::translate_x: return "translate_x";
    case RandOp::translate_y: return "translate_y";
  }
  return "unknown";
}

Image apply_rand_op(RandOp op, const Image& img, int magnitude, Rng& rng) {
  const double level = magnitude / 30.0;
  switch (op) {
    case RandOp::identity: return img;
    case RandOp::auto_contrast: return auto_contrast(img);
    case RandOp::equalize: return equalize(img);
    case RandOp::rotate: return rotate(img, 30.0 * signed_level(magnitude, rng));
    case RandOp::solarize: return solarize(img, 1.0 - level);
    case RandOp::color:
      return adjust_saturation(img, 1.0 + 0.9 * signed_level(magnitude, rng));
    case RandOp::posterize: return posterize(img, 8 - static_cast<int>(4.0 * level));
    case RandOp::contrast:
      return adjust_contrast(img, 1.0 + 0.9 * signed_level(magnitude, rng));
    case RandOp::brightness:
      return adjust_brightness(img, 1.0 + 0.9 * signed_level(magnitude, rng));
    case RandOp::sharpness: return sharpness(img, 1.0 + 0.9 * signed_level(magnitude, rng));
    case RandOp::shear_x: return shear_x(img, 0.3 * signed_level(magnitude, rng));
    case RandOp::shear_y: return shear_y(img, 0.3 * signed_level(magnitude, rng));
    case RandOp::translate_x:
      return translate_x(
          img, static_cast<int>(std::lround(0.45 * img.width * signed_level(magnitude, rng))));
    case RandOp::translate_y:
      return translate_y(
          img, static_cast<int>(std::lround(0.45 * img.height * signed_level(magnitude, rng))));
  }
  return img;
}

}  // namespace ops

}  // namespace almatch
