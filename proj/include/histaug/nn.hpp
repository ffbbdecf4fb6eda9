// Copyright 2026 The histaug Authors. All Rights Reserved.
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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "histaug/autodiff.hpp"

namespace histaug::nn {

template <typename Scalar>
using Param = ad::Parameter<Scalar>;

template <typename Scalar>
using ParamList = std::vector<Param<Scalar>*>;

template <typename Scalar>
Tensor<Scalar> he_normal(Shape s, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  Tensor<Scalar> t(s);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<Scalar>(normal(rng));
  return t;
}

template <typename Scalar>
struct Conv2d {
  Param<Scalar> weight;
  Param<Scalar> bias;
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(const std::string& name, int in, int out, int kernel, int stride_, int pad_, std::mt19937_64& rng)
      : weight(name + ".weight", he_normal<Scalar>(Shape{out, in, kernel, kernel}, in * kernel * kernel, rng)),
        bias(name + ".bias", Tensor<Scalar>(Shape{1, out, 1, 1})),
        stride(stride_),
        pad(pad_) {}

  int in_channels() const { return weight.value.shape.c; }
  int out_channels() const { return weight.value.shape.n; }

  ad::Var<Scalar> operator()(ad::Var<Scalar> x) {
    auto& g = *x.graph;
    return ad::conv2d(x, g.parameter(weight), g.parameter(bias), stride, pad);
  }

  void collect(ParamList<Scalar>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

template <typename Scalar>
struct Linear {
  Param<Scalar> weight;
  Param<Scalar> bias;

  Linear() = default;
  Linear(const std::string& name, int in, int out, std::mt19937_64& rng, double gain = 1.0)
      : weight(name + ".weight", he_normal<Scalar>(Shape{out, in, 1, 1}, in, rng)),
        bias(name + ".bias", Tensor<Scalar>(Shape{1, out, 1, 1})) {
    weight.value.data *= static_cast<Scalar>(gain);
  }

  ad::Var<Scalar> operator()(ad::Var<Scalar> x) {
    auto& g = *x.graph;
    return ad::linear(x, g.parameter(weight), g.parameter(bias));
  }

  void collect(ParamList<Scalar>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

/// Adaptive-moment optimizer with optional coupled L2 weight decay.
template <typename Scalar>
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };

  Adam() = default;
  Adam(ParamList<Scalar> params, Options options) : params_(std::move(params)), options_(options) {
    for (auto* p : params_) {
      m_.push_back(ArrayX<Scalar>::Zero(p->value.size()));
      v_.push_back(ArrayX<Scalar>::Zero(p->value.size()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++steps_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    const auto b1 = static_cast<Scalar>(options_.beta1);
    const auto b2 = static_cast<Scalar>(options_.beta2);
    const auto step_size = static_cast<Scalar>(options_.lr / c1);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    const auto eps = static_cast<Scalar>(options_.eps);
    const auto wd = static_cast<Scalar>(options_.weight_decay);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      ArrayX<Scalar> grad = p.grad;
      if (wd != Scalar(0)) grad += wd * p.value.data;
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grad;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grad.square();
      p.value.data -= step_size * m_[i] / ((v_[i] * inv_c2).sqrt() + eps);
    }
  }

  const ParamList<Scalar>& params() const { return params_; }
  std::vector<ArrayX<Scalar>>& first_moments() { return m_; }
  std::vector<ArrayX<Scalar>>& second_moments() { return v_; }
  const std::vector<ArrayX<Scalar>>& first_moments() const { return m_; }
  const std::vector<ArrayX<Scalar>>& second_moments() const { return v_; }
  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  const Options& options() const { return options_; }

 private:
  ParamList<Scalar> params_;
  Options options_;
  std::vector<ArrayX<Scalar>> m_;
  std::vector<ArrayX<Scalar>> v_;
  std::int64_t steps_ = 0;
};

/// FNV-1a over the raw bytes of every parameter value.
template <typename Scalar>
std::uint64_t fingerprint(const ParamList<Scalar>& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.ptr());
    for (std::size_t i = 0; i < static_cast<std::size_t>(p->value.size()) * sizeof(Scalar); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

template <typename Scalar>
std::size_t parameter_count(const ParamList<Scalar>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace histaug::nn
