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

#include "almatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "almatch/datasets.hpp"
#include "almatch/error.hpp"
#include "almatch/rng.hpp"

namespace almatch {

void ArchSpec::validate() const {
  require(image_side >= 1 && image_channels >= 1, ErrorCode::config,
          "model input shape must be positive");
  require(proj_hidden >= 1 && proj_dim >= 1, ErrorCode::config,
          "projection head sizes must be positive");
  require(num_classes >= 2, ErrorCode::config, "model needs at least 2 classes");
  if (kind == Kind::conv) {
    require(!conv_channels.empty(), ErrorCode::config, "conv trunk needs at least one block");
    int side = image_side;
    for (int c : conv_channels) {
      require(c >= 1, ErrorCode::config, "conv channel counts must be positive");
      require(side % 2 == 0, ErrorCode::config,
              "image side " + std::to_string(image_side) + " cannot be halved " +
                  std::to_string(conv_channels.size()) + " times");
      side /= 2;
    }
  } else {
    for (int h : mlp_hidden) {
      require(h >= 1, ErrorCode::config, "mlp hidden sizes must be positive");
    }
  }
}

std::string ArchSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == Kind::conv ? "conv" : "mlp";
  j["image_side"] = image_side;
  j["image_channels"] = image_channels;
  j["conv_channels"] = conv_channels;
  j["mlp_hidden"] = mlp_hidden;
  j["proj_hidden"] = proj_hidden;
  j["proj_dim"] = proj_dim;
  j["num_classes"] = num_classes;
  return j.dump();
}

ArchSpec ArchSpec::from_json(const std::string& text) {
  ArchSpec a;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto kind = j.at("kind").get<std::string>();
    require(kind == "conv" || kind == "mlp", ErrorCode::format, "unknown arch kind " + kind);
    a.kind = kind == "conv" ? Kind::conv : Kind::mlp;
    a.image_side = j.at("image_side").get<int>();
    a.image_channels = j.at("image_channels").get<int>();
    a.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    a.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
    a.proj_hidden = j.at("proj_hidden").get<int>();
    a.proj_dim = j.at("proj_dim").get<int>();
    a.num_classes = j.at("num_classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format, std::string("corrupt architecture descriptor: ") + e.what());
  }
  return a;
}

namespace layers {

template <class S>
Matrix<S> Conv3x3<S>::forward(const Matrix<S>& x, std::span<const Param<S>> p,
                              Cache<S>* cache) const {
  const int n = static_cast<int>(x.rows()) / (in.h * in.w);
  Matrix<S> cols = Matrix<S>::Zero(x.rows(), 9 * in.c);
  for (int s = 0; s < n; ++s) {
    for (int y = 0; y < in.h; ++y) {
      for (int xx = 0; xx < in.w; ++xx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(s) * in.h + y) * in.w + xx;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= in.h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= in.w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(s) * in.h + sy) * in.w + sx;
            cols.row(row).segment((ky * 3 + kx) * in.c, in.c) = x.row(src);
          }
        }
      }
    }
  }
  Matrix<S> y = cols * p[0].value;
  y.rowwise() += p[1].value.row(0);
  if (cache) cache->m = std::move(cols);
  return y;
}

template <class S>
Matrix<S> Conv3x3<S>::backward(const Matrix<S>& dy, std::span<const Param<S>> p,
                               const Cache<S>& cache, std::span<Matrix<S>> grads) const {
  grads[0].noalias() += cache.m.transpose() * dy;
  grads[1] += dy.colwise().sum();
  const Matrix<S> dcols = dy * p[0].value.transpose();
  Matrix<S> dx = Matrix<S>::Zero(dy.rows(), in.c);
  const int n = static_cast<int>(dy.rows()) / (in.h * in.w);
  for (int s = 0; s < n; ++s) {
    for (int y = 0; y < in.h; ++y) {
      for (int xx = 0; xx < in.w; ++xx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(s) * in.h + y) * in.w + xx;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= in.h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= in.w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(s) * in.h + sy) * in.w + sx;
            dx.row(src) += dcols.row(row).segment((ky * 3 + kx) * in.c, in.c);
          }
        }
      }
    }
  }
  return dx;
}

template <class S>
Matrix<S> SampleNorm<S>::forward(const Matrix<S>& x, std::span<const Param<S>> p,
                                 Cache<S>* cache) const {
  constexpr S eps = S(1e-5);
  const Eigen::Index hw = static_cast<Eigen::Index>(in.h) * in.w;
  const Eigen::Index n = x.rows() / hw;
  Matrix<S> xhat(x.rows(), x.cols());
  Matrix<S> inv(n, 1);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto block = x.middleRows(s * hw, hw);
    const S mean = block.mean();
    const S var = (block.array() - mean).square().mean();
    inv(s, 0) = S(1) / std::sqrt(var + eps);
    xhat.middleRows(s * hw, hw) = (block.array() - mean) * inv(s, 0);
  }
  Matrix<S> y = (xhat.array().rowwise() * p[0].value.row(0).array()).matrix();
  y.rowwise() += p[1].value.row(0);
  if (cache) {
    cache->m = std::move(xhat);
    cache->aux = std::move(inv);
  }
  return y;
}

template <class S>
Matrix<S> SampleNorm<S>::backward(const Matrix<S>& dy, std::span<const Param<S>> p,
                                  const Cache<S>& cache, std::span<Matrix<S>> grads) const {
  const Matrix<S>& xhat = cache.m;
  grads[0] += (dy.array() * xhat.array()).colwise().sum().matrix();
  grads[1] += dy.colwise().sum();
  const Matrix<S> dxhat = (dy.array().rowwise() * p[0].value.row(0).array()).matrix();
  const Eigen::Index hw = static_cast<Eigen::Index>(in.h) * in.w;
  const Eigen::Index n = dy.rows() / hw;
  const S m = static_cast<S>(hw * in.c);
  Matrix<S> dx(dy.rows(), dy.cols());
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto g = dxhat.middleRows(s * hw, hw).array();
    const auto xh = xhat.middleRows(s * hw, hw).array();
    const S sum_g = g.sum();
    const S sum_gx = (g * xh).sum();
    dx.middleRows(s * hw, hw) = (cache.aux(s, 0) / m) * (m * g - sum_g - xh * sum_gx);
  }
  return dx;
}

template <class S>
Matrix<S> Relu<S>::forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>* cache) const {
  Matrix<S> y = x.cwiseMax(S(0));
  if (cache) cache->m = y;
  return y;
}

template <class S>
Matrix<S> Relu<S>::backward(const Matrix<S>& dy, std::span<const Param<S>>,
                            const Cache<S>& cache, std::span<Matrix<S>>) const {
  return (cache.m.array() > S(0)).select(dy, S(0));
}

template <class S>
Matrix<S> MaxPool2<S>::forward(const Matrix<S>& x, std::span<const Param<S>>,
                               Cache<S>* cache) const {
  const int oh = in.h / 2;
  const int ow = in.w / 2;
  const Eigen::Index n = x.rows() / (static_cast<Eigen::Index>(in.h) * in.w);
  Matrix<S> y(n * oh * ow, in.c);
  std::vector<int> idx;
  if (cache) idx.resize(static_cast<std::size_t>(y.size()));
  for (Eigen::Index s = 0; s < n; ++s) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index orow = (s * oh + oy) * ow + ox;
        for (int c = 0; c < in.c; ++c) {
          Eigen::Index best = (s * in.h + 2 * oy) * in.w + 2 * ox;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index r = (s * in.h + 2 * oy + dy) * in.w + 2 * ox + dx;
              if (x(r, c) > x(best, c)) best = r;
            }
          }
          y(orow, c) = x(best, c);
          if (cache) idx[static_cast<std::size_t>(orow * in.c + c)] = static_cast<int>(best);
        }
      }
    }
  }
  if (cache) cache->idx = std::move(idx);
  return y;
}

template <class S>
Matrix<S> MaxPool2<S>::backward(const Matrix<S>& dy, std::span<const Param<S>>,
                                const Cache<S>& cache, std::span<Matrix<S>>) const {
  const Eigen::Index n = dy.rows() / ((in.h / 2) * (in.w / 2));
  Matrix<S> dx = Matrix<S>::Zero(n * in.h * in.w, in.c);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    for (int c = 0; c < in.c; ++c) {
      dx(cache.idx[static_cast<std::size_t>(r * in.c + c)], c) += dy(r, c);
    }
  }
  return dx;
}

template <class S>
Matrix<S> Flatten<S>::forward(const Matrix<S>& x, std::span<const Param<S>>, Cache<S>*) const {
  const Eigen::Index n = x.rows() / (static_cast<Eigen::Index>(in.h) * in.w);
  return Eigen::Map<const Matrix<S>>(x.data(), n, in.per_sample());
}

template <class S>
Matrix<S> Flatten<S>::backward(const Matrix<S>& dy, std::span<const Param<S>>, const Cache<S>&,
                               std::span<Matrix<S>>) const {
  return Eigen::Map<const Matrix<S>>(dy.data(), dy.rows() * in.h * in.w, in.c);
}

template <class S>
Matrix<S> Dense<S>::forward(const Matrix<S>& x, std::span<const Param<S>> p,
                            Cache<S>* cache) const {
  Matrix<S> y = x * p[0].value;
  y.rowwise() += p[1].value.row(0);
  if (cache) cache->m = x;
  return y;
}

template <class S>
Matrix<S> Dense<S>::backward(const Matrix<S>& dy, std::span<const Param<S>> p,
                             const Cache<S>& cache, std::span<Matrix<S>> grads) const {
  grads[0].noalias() += cache.m.transpose() * dy;
  grads[1] += dy.colwise().sum();
  return dy * p[0].value.transpose();
}

template <class S>
Matrix<S> L2Normalize<S>::forward(const Matrix<S>& x, std::span<const Param<S>>,
                                  Cache<S>* cache) const {
  Matrix<S> norms = x.rowwise().norm().cwiseMax(S(1e-12));
  Matrix<S> y = x.array().colwise() / norms.col(0).array();
  if (cache) {
    cache->m = y;
    cache->aux = std::move(norms);
  }
  return y;
}

template <class S>
Matrix<S> L2Normalize<S>::backward(const Matrix<S>& dy, std::span<const Param<S>>,
                                   const Cache<S>& cache, std::span<Matrix<S>>) const {
  const Matrix<S>& y = cache.m;
  const auto radial = (y.array() * dy.array()).rowwise().sum();
  Matrix<S> dx = dy.array() - y.array().colwise() * radial;
  return dx.array().colwise() / cache.aux.col(0).array();
}

template struct Conv3x3<float>;
template struct Conv3x3<double>;
template struct SampleNorm<float>;
template struct SampleNorm<double>;
template struct Relu<float>;
template struct Relu<double>;
template struct MaxPool2<float>;
template struct MaxPool2<double>;
template struct Flatten<float>;
template struct Flatten<double>;
template struct Dense<float>;
template struct Dense<double>;
template struct L2Normalize<float>;
template struct L2Normalize<double>;

}  // namespace layers

template <class S>
Matrix<S> ForwardPass<S>::probs() const {
  Matrix<S> p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const S mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

template struct ForwardPass<float>;
template struct ForwardPass<double>;

namespace {

template <class S>
Matrix<S> normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Matrix<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<S>(stddev * rng.normal());
  }
  return m;
}

}  // namespace

template <class S>
EncoderNet<S>::EncoderNet(const ArchSpec& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  Rng rng = Rng::stream(seed, streams::model_init);

  auto add_layer = [&](Stage& stage, layers::Layer<S> layer, std::vector<Param<S>> ps) {
    stage.layers.push_back(std::move(layer));
    stage.param_offset.push_back(params_.size());
    stage.param_count.push_back(ps.size());
    for (auto& p : ps) params_.push_back(std::move(p));
  };
  auto dense = [&](Stage& stage, const std::string& prefix, ParamGroup group, int in, int out,
                   double gain) {
    std::vector<Param<S>> ps;
    ps.push_back({prefix + ".weight", group, normal_matrix<S>(in, out, std::sqrt(gain / in), rng)});
    ps.push_back({prefix + ".bias", group, Matrix<S>::Zero(1, out)});
    add_layer(stage, layers::Dense<S>{in, out}, std::move(ps));
  };

  int features = 0;
  if (arch_.kind == ArchSpec::Kind::conv) {
    layers::Shape shape{arch_.image_side, arch_.image_side, arch_.image_channels};
    for (std::size_t b = 0; b < arch_.conv_channels.size(); ++b) {
      const int co = arch_.conv_channels[b];
      const std::string prefix = "trunk." + std::to_string(b);
      std::vector<Param<S>> conv;
      conv.push_back({prefix + ".conv.weight", ParamGroup::trunk,
                      normal_matrix<S>(9 * shape.c, co, std::sqrt(2.0 / (9 * shape.c)), rng)});
      conv.push_back({prefix + ".conv.bias", ParamGroup::trunk, Matrix<S>::Zero(1, co)});
      add_layer(trunk_, layers::Conv3x3<S>{shape, co}, std::move(conv));
      shape.c = co;
      std::vector<Param<S>> norm;
      norm.push_back({prefix + ".norm.gamma", ParamGroup::trunk, Matrix<S>::Ones(1, co)});
      norm.push_back({prefix + ".norm.beta", ParamGroup::trunk, Matrix<S>::Zero(1, co)});
      add_layer(trunk_, layers::SampleNorm<S>{shape}, std::move(norm));
      add_layer(trunk_, layers::Relu<S>{}, {});
      add_layer(trunk_, layers::MaxPool2<S>{shape}, {});
      shape.h /= 2;
      shape.w /= 2;
    }
    add_layer(trunk_, layers::Flatten<S>{shape}, {});
    features = shape.per_sample();
  } else {
    int in = input_size();
    for (std::size_t i = 0; i < arch_.mlp_hidden.size(); ++i) {
      dense(trunk_, "trunk." + std::to_string(i) + ".dense", ParamGroup::trunk, in,
            arch_.mlp_hidden[i], 2.0);
      add_layer(trunk_, layers::Relu<S>{}, {});
      in = arch_.mlp_hidden[i];
    }
    features = in;
  }

  dense(projection_, "projection.0.dense", ParamGroup::projection, features, arch_.proj_hidden,
        2.0);
  add_layer(projection_, layers::Relu<S>{}, {});
  dense(projection_, "projection.1.dense", ParamGroup::projection, arch_.proj_hidden,
        arch_.proj_dim, 1.0);
  add_layer(projection_, layers::L2Normalize<S>{}, {});

  dense(classifier_, "classifier.0.dense", ParamGroup::classifier, features, arch_.num_classes,
        1.0);
}

template <class S>
Matrix<S> EncoderNet<S>::run_stage(const Stage& stage, const Matrix<S>& x,
                                   std::vector<layers::Cache<S>>* caches) const {
  if (caches) caches->assign(stage.layers.size(), {});
  Matrix<S> h = x;
  for (std::size_t i = 0; i < stage.layers.size(); ++i) {
    const std::span<const Param<S>> ps(params_.data() + stage.param_offset[i],
                                       stage.param_count[i]);
    layers::Cache<S>* cache = caches ? &(*caches)[i] : nullptr;
    h = std::visit([&](const auto& layer) { return layer.forward(h, ps, cache); },
                   stage.layers[i]);
  }
  return h;
}

template <class S>
Matrix<S> EncoderNet<S>::back_stage(const Stage& stage, const Matrix<S>& dy,
                                    const std::vector<layers::Cache<S>>& caches,
                                    Gradients<S>& g) const {
  Matrix<S> d = dy;
  for (std::size_t i = stage.layers.size(); i-- > 0;) {
    const std::span<const Param<S>> ps(params_.data() + stage.param_offset[i],
                                       stage.param_count[i]);
    const std::span<Matrix<S>> gs(g.grads.data() + stage.param_offset[i], stage.param_count[i]);
    d = std::visit([&](const auto& layer) { return layer.backward(d, ps, caches[i], gs); },
                   stage.layers[i]);
  }
  return d;
}

template <class S>
ForwardPass<S> EncoderNet<S>::forward(const Matrix<S>& x, Mode mode) const {
  require(x.cols() == input_size(), ErrorCode::config,
          "input has " + std::to_string(x.cols()) + " values per image, model expects " +
              std::to_string(input_size()));
  const bool keep = mode == Mode::train;
  ForwardPass<S> pass;
  Matrix<S> h;
  if (arch_.kind == ArchSpec::Kind::conv) {
    h = Eigen::Map<const Matrix<S>>(x.data(),
                                    x.rows() * arch_.image_side * arch_.image_side,
                                    arch_.image_channels);
  } else {
    h = x;
  }
  pass.features = run_stage(trunk_, h, keep ? &pass.trunk : nullptr);
  pass.reps = run_stage(projection_, pass.features, keep ? &pass.projection : nullptr);
  pass.logits = run_stage(classifier_, pass.features, keep ? &pass.classifier : nullptr);
  pass.has_cache = keep;
  return pass;
}

template <class S>
Gradients<S> EncoderNet<S>::backward(const ForwardPass<S>& pass, const Matrix<S>& d_reps,
                                     const Matrix<S>& d_logits) const {
  require(pass.has_cache, ErrorCode::state, "backward needs a train-mode forward pass");
  Gradients<S> g = zero_gradients();
  Matrix<S> d_features = Matrix<S>::Zero(pass.features.rows(), pass.features.cols());
  if (d_reps.size() > 0) d_features += back_stage(projection_, d_reps, pass.projection, g);
  if (d_logits.size() > 0) d_features += back_stage(classifier_, d_logits, pass.classifier, g);
  back_stage(trunk_, d_features, pass.trunk, g);
  return g;
}

template <class S>
std::size_t EncoderNet<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

template <class S>
Gradients<S> EncoderNet<S>::zero_gradients() const {
  Gradients<S> g;
  g.grads.reserve(params_.size());
  for (const auto& p : params_) g.grads.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
  return g;
}

template <class S>
template <class T>
EncoderNet<T> EncoderNet<S>::cast() const {
  EncoderNet<T> out(arch_, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.params_[i].value = params_[i].value.template cast<T>();
  }
  return out;
}

template class EncoderNet<float>;
template class EncoderNet<double>;
template EncoderNet<double> EncoderNet<float>::cast<double>() const;
template EncoderNet<float> EncoderNet<double>::cast<float>() const;
template EncoderNet<float> EncoderNet<float>::cast<float>() const;
template EncoderNet<double> EncoderNet<double>::cast<double>() const;

template <class S>
Matrix<S> stack_images(std::span<const Image* const> images) {
  if (images.empty()) return {};
  const auto cols = static_cast<Eigen::Index>(images.front()->size());
  Matrix<S> x(static_cast<Eigen::Index>(images.size()), cols);
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(static_cast<Eigen::Index>(images[i]->size()) == cols, ErrorCode::config,
            "images in a batch must share one shape");
    for (Eigen::Index j = 0; j < cols; ++j) {
      x(static_cast<Eigen::Index>(i), j) = static_cast<S>(images[i]->pixels[j]);
    }
  }
  return x;
}

template <class S>
Matrix<S> stack_images(std::span<const Image> images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return stack_images<S>(std::span<const Image* const>(ptrs));
}

template Matrix<float> stack_images<float>(std::span<const Image* const>);
template Matrix<double> stack_images<double>(std::span<const Image* const>);
template Matrix<float> stack_images<float>(std::span<const Image>);
template Matrix<double> stack_images<double>(std::span<const Image>);

template <class S>
void Sgd<S>::step(EncoderNet<S>& net, const Gradients<S>& g, S lr,
                  std::span<const ParamGroup> groups) {
  auto& params = net.parameters();
  require(g.grads.size() == params.size(), ErrorCode::state, "gradient/parameter mismatch");
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params) {
      velocity_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (std::find(groups.begin(), groups.end(), params[i].group) == groups.end()) continue;
    require(g.grads[i].allFinite(), ErrorCode::numeric,
            "non-finite gradient for parameter " + params[i].name);
    velocity_[i] = momentum_ * velocity_[i] + g.grads[i];
    params[i].value -= lr * (velocity_[i] + weight_decay_ * params[i].value);
  }
}

template class Sgd<float>;
template class Sgd<double>;

void export_embeddings(const EncoderNet<float>& net, const Dataset& ds,
                       const std::filesystem::path& out, std::size_t chunk) {
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open " + out.string() + " for writing");
  os << "index,label";
  for (int d = 0; d < net.arch().proj_dim; ++d) os << ",r" << d;
  os << '\n';
  char buf[32];
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    const auto x = stack_images<float>(
        std::span<const Image>(ds.images.data() + start, end - start));
    const auto pass = net.forward(x, Mode::eval);
    for (std::size_t i = start; i < end; ++i) {
      os << i << ',' << ds.labels[i];
      for (Eigen::Index d = 0; d < pass.reps.cols(); ++d) {
        std::snprintf(buf, sizeof buf, ",%.9g",
                      static_cast<double>(pass.reps(static_cast<Eigen::Index>(i - start), d)));
        os << buf;
      }
      os << '\n';
    }
  }
  os.flush();
  if (!os) fail(ErrorCode::io, "failed writing embeddings to " + out.string());
}

}  // namespace almatch
