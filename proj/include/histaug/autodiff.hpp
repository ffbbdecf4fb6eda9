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

// Minimal reverse-mode automatic differentiation over NCHW tensors.
//
// A Graph records every intermediate value together with a closure that
// propagates its gradient to its inputs. Var is a cheap handle into the
// graph. Parameters live outside the graph and receive accumulated
// gradients when backward() runs.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "histaug/error.hpp"
#include "histaug/tensor.hpp"

namespace histaug::ad {

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  ArrayX<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v)
      : name(std::move(n)), value(std::move(v)), grad(ArrayX<Scalar>::Zero(value.size())) {}

  void zero_grad() { grad.setZero(value.size()); }
};

template <typename Scalar>
class Graph;

template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Tensor<Scalar>& value() const { return graph->value(id); }
  const Shape& shape() const { return graph->value(id).shape; }
  Scalar item() const { return graph->value(id).data[0]; }
};

template <typename Scalar>
class Graph {
 public:
  using Array = ArrayX<Scalar>;
  using Backward = std::function<void(Graph&, int self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Scalar> constant(Tensor<Scalar> t) { return push(std::move(t), false, {}); }

  /// Leaf bound to `p`; frozen parameters enter as constants.
  Var<Scalar> parameter(Parameter<Scalar>& p) {
    if (frozen_.contains(&p)) return constant(p.value);
    auto v = push(p.value, true, {});
    nodes_[v.id].param = &p;
    return v;
  }

  /// Records an op result; `inputs` decide whether the node is differentiable.
  Var<Scalar> record(Tensor<Scalar> value, std::initializer_list<Var<Scalar>> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_[in.id].requires_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
  }

  /// Stops gradient flow into these parameters for the rest of the graph's life.
  void freeze(const std::vector<Parameter<Scalar>*>& params) {
    for (auto* p : params) frozen_.insert(p);
  }

  const Tensor<Scalar>& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of node `id`, zero-initialized on first touch.
  Array& grad(int id) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Array::Zero(n.value.size());
    return n.grad;
  }
  bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }

  /// Reverse sweep from a scalar root; parameter gradients are accumulated.
  /// Node gradients from an earlier sweep on the same graph are discarded first.
  void backward(Var<Scalar> root) {
    require(root.graph == this, ErrorKind::Shape, "backward root belongs to another graph");
    require(nodes_[root.id].value.size() == 1, ErrorKind::Shape, "backward root must be a scalar");
    if (!nodes_[root.id].requires_grad) return;
    for (auto& n : nodes_) n.grad.resize(0);
    grad(root.id).setConstant(Scalar(1));
    for (int id = root.id; id >= 0; --id) {
      auto& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.param != nullptr) {
        n.param->grad += n.grad;
      } else if (n.backward) {
        n.backward(*this, id);
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    Array grad;
    bool requires_grad = false;
    Parameter<Scalar>* param = nullptr;
    Backward backward;
  };

  Var<Scalar> push(Tensor<Scalar> value, bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_set<const Parameter<Scalar>*> frozen_;
};

namespace detail {

template <typename Scalar>
void check_same(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::Shape,
          std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <typename Scalar, typename F, typename D>
Var<Scalar> unary(Var<Scalar> x, F forward, D derivative) {
  auto& g = *x.graph;
  Tensor<Scalar> out(x.shape(), x.value().data.unaryExpr(forward));
  return g.record(std::move(out), {x}, [x, derivative](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const auto& in = g.value(x.id).data;
    const auto& y = g.value(self).data;
    g.grad(x.id) += g.grad(self) * in.binaryExpr(y, derivative);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename Scalar>
Var<Scalar> detach(Var<Scalar> x) {
  return x.graph->constant(x.value());
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same(a, b, "add");
  auto& g = *a.graph;
  Tensor<Scalar> out(a.shape(), a.value().data + b.value().data);
  return g.record(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    if (g.requires_grad(a.id)) g.grad(a.id) += g.grad(self);
    if (g.requires_grad(b.id)) g.grad(b.id) += g.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same(a, b, "sub");
  auto& g = *a.graph;
  Tensor<Scalar> out(a.shape(), a.value().data - b.value().data);
  return g.record(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    if (g.requires_grad(a.id)) g.grad(a.id) += g.grad(self);
    if (g.requires_grad(b.id)) g.grad(b.id) -= g.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same(a, b, "mul");
  auto& g = *a.graph;
  Tensor<Scalar> out(a.shape(), a.value().data * b.value().data);
  return g.record(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    if (g.requires_grad(a.id)) g.grad(a.id) += g.grad(self) * g.value(b.id).data;
    if (g.requires_grad(b.id)) g.grad(b.id) += g.grad(self) * g.value(a.id).data;
  });
}

template <typename Scalar>
Var<Scalar> operator*(Scalar s, Var<Scalar> x) {
  auto& g = *x.graph;
  Tensor<Scalar> out(x.shape(), x.value().data * s);
  return g.record(std::move(out), {x}, [x, s](Graph<Scalar>& g, int self) {
    if (g.requires_grad(x.id)) g.grad(x.id) += g.grad(self) * s;
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> x, Scalar s) {
  auto& g = *x.graph;
  Tensor<Scalar> out(x.shape(), x.value().data + s);
  return g.record(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    if (g.requires_grad(x.id)) g.grad(x.id) += g.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> leaky_relu(Var<Scalar> x, Scalar slope) {
  return detail::unary(
      x, [slope](Scalar v) { return v > 0 ? v : slope * v; },
      [slope](Scalar v, Scalar) { return v > 0 ? Scalar(1) : slope; });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  return leaky_relu(x, Scalar(0));
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  return detail::unary(
      x, [](Scalar v) { return std::tanh(v); }, [](Scalar, Scalar y) { return Scalar(1) - y * y; });
}

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> x) {
  return detail::unary(
      x, [](Scalar v) { return std::exp(v); }, [](Scalar, Scalar y) { return y; });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> x) {
  return detail::unary(
      x, [](Scalar v) { return v * v; }, [](Scalar v, Scalar) { return Scalar(2) * v; });
}

template <typename Scalar>
Var<Scalar> abs(Var<Scalar> x) {
  return detail::unary(
      x, [](Scalar v) { return std::abs(v); },
      [](Scalar v, Scalar) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  auto& g = *x.graph;
  Tensor<Scalar> out(Shape{}, ArrayX<Scalar>::Constant(1, x.value().data.sum()));
  return g.record(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    if (g.requires_grad(x.id)) g.grad(x.id) += g.grad(self)[0];
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  return (Scalar(1) / Scalar(x.value().size())) * sum(x);
}

/// Mean absolute difference.
template <typename Scalar>
Var<Scalar> l1(Var<Scalar> a, Var<Scalar> b) {
  return mean(abs(a - b));
}

/// Mean squared distance to a constant target (least-squares GAN term).
template <typename Scalar>
Var<Scalar> mse_to(Var<Scalar> x, Scalar target) {
  return mean(square(x + (-target)));
}

// ---------------------------------------------------------------------------
// Layout

/// out[i] = x[perm[i]] along the batch axis.
template <typename Scalar>
Var<Scalar> permute_batch(Var<Scalar> x, std::vector<int> perm) {
  const Shape s = x.shape();
  require(static_cast<int>(perm.size()) == s.n, ErrorKind::Shape, "permute_batch: permutation size");
  Tensor<Scalar> out(s);
  for (int i = 0; i < s.n; ++i) out.rows().row(i) = x.value().rows().row(perm[i]);
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x, perm](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const Shape s = g.value(self).shape;
    const auto row = s.sample_size();
    auto& gx = g.grad(x.id);
    const auto& gs = g.grad(self);
    for (int i = 0; i < s.n; ++i) gx.segment(perm[i] * row, row) += gs.segment(i * row, row);
  });
}

/// Stack along the batch axis.
template <typename Scalar>
Var<Scalar> concat_batch(Var<Scalar> a, Var<Scalar> b) {
  const Shape sa = a.shape(), sb = b.shape();
  require(sa.c == sb.c && sa.h == sb.h && sa.w == sb.w, ErrorKind::Shape, "concat_batch: sample shapes differ");
  Shape s = sa;
  s.n = sa.n + sb.n;
  Tensor<Scalar> out(s);
  out.data << a.value().data, b.value().data;
  auto& g = *a.graph;
  return g.record(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    const auto na = g.value(a.id).size();
    const auto nb = g.value(b.id).size();
    if (g.requires_grad(a.id)) g.grad(a.id) += g.grad(self).head(na);
    if (g.requires_grad(b.id)) g.grad(b.id) += g.grad(self).tail(nb);
  });
}

/// Samples [begin, begin+count) along the batch axis.
template <typename Scalar>
Var<Scalar> slice_batch(Var<Scalar> x, int begin, int count) {
  const Shape sx = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= sx.n, ErrorKind::Shape, "slice_batch: range");
  Shape s = sx;
  s.n = count;
  const auto row = sx.sample_size();
  Tensor<Scalar> out(s, x.value().data.segment(begin * row, count * row));
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x, begin, row](Graph<Scalar>& g, int self) {
    if (g.requires_grad(x.id)) g.grad(x.id).segment(begin * row, g.value(self).size()) += g.grad(self);
  });
}

/// Channel concatenation of two tensors with equal n, h, w.
template <typename Scalar>
Var<Scalar> concat_channels(Var<Scalar> a, Var<Scalar> b) {
  const Shape sa = a.shape(), sb = b.shape();
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w, ErrorKind::Shape,
          "concat_channels: " + to_string(sa) + " vs " + to_string(sb));
  const Shape s{sa.n, sa.c + sb.c, sa.h, sa.w};
  Tensor<Scalar> out(s);
  const auto ra = sa.sample_size(), rb = sb.sample_size();
  for (int n = 0; n < s.n; ++n) {
    out.data.segment(n * (ra + rb), ra) = a.value().data.segment(n * ra, ra);
    out.data.segment(n * (ra + rb) + ra, rb) = b.value().data.segment(n * rb, rb);
  }
  auto& g = *a.graph;
  return g.record(std::move(out), {a, b}, [a, b, ra, rb](Graph<Scalar>& g, int self) {
    const int n_total = g.value(self).shape.n;
    const auto& gs = g.grad(self);
    for (int n = 0; n < n_total; ++n) {
      if (g.requires_grad(a.id)) g.grad(a.id).segment(n * ra, ra) += gs.segment(n * (ra + rb), ra);
      if (g.requires_grad(b.id)) g.grad(b.id).segment(n * rb, rb) += gs.segment(n * (ra + rb) + ra, rb);
    }
  });
}

/// Channels [begin, begin+count).
template <typename Scalar>
Var<Scalar> slice_channels(Var<Scalar> x, int begin, int count) {
  const Shape sx = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= sx.c, ErrorKind::Shape, "slice_channels: range");
  const Shape s{sx.n, count, sx.h, sx.w};
  Tensor<Scalar> out(s);
  const auto plane = sx.plane();
  for (int n = 0; n < s.n; ++n)
    out.data.segment(n * s.sample_size(), s.sample_size()) =
        x.value().data.segment(n * sx.sample_size() + begin * plane, s.sample_size());
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x, begin](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const Shape sx = g.value(x.id).shape;
    const Shape s = g.value(self).shape;
    for (int n = 0; n < s.n; ++n)
      g.grad(x.id).segment(n * sx.sample_size() + begin * sx.plane(), s.sample_size()) +=
          g.grad(self).segment(n * s.sample_size(), s.sample_size());
  });
}

/// Tiles an {n, k, 1, 1} vector over an h x w grid.
template <typename Scalar>
Var<Scalar> broadcast_spatial(Var<Scalar> v, int h, int w) {
  const Shape sv = v.shape();
  require(sv.h == 1 && sv.w == 1, ErrorKind::Shape, "broadcast_spatial expects a vector input");
  const Shape s{sv.n, sv.c, h, w};
  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      out.data.segment((Eigen::Index(n) * s.c + c) * s.plane(), s.plane()).setConstant(v.value().data[n * s.c + c]);
  auto& g = *v.graph;
  return g.record(std::move(out), {v}, [v](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(v.id)) return;
    const Shape s = g.value(self).shape;
    const auto& gs = g.grad(self);
    auto& gv = g.grad(v.id);
    for (Eigen::Index i = 0; i < Eigen::Index(s.n) * s.c; ++i) gv[i] += gs.segment(i * s.plane(), s.plane()).sum();
  });
}

/// Spatial mean per channel: {n, c, h, w} -> {n, c, 1, 1}.
template <typename Scalar>
Var<Scalar> global_avg_pool(Var<Scalar> x) {
  const Shape sx = x.shape();
  Tensor<Scalar> out(Shape{sx.n, sx.c, 1, 1});
  const auto plane = sx.plane();
  for (Eigen::Index i = 0; i < Eigen::Index(sx.n) * sx.c; ++i)
    out.data[i] = x.value().data.segment(i * plane, plane).mean();
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x, plane](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const auto& gs = g.grad(self);
    auto& gx = g.grad(x.id);
    for (Eigen::Index i = 0; i < gs.size(); ++i) gx.segment(i * plane, plane) += gs[i] / Scalar(plane);
  });
}

/// Nearest-neighbour 2x upsampling.
template <typename Scalar>
Var<Scalar> upsample2x(Var<Scalar> x) {
  const Shape sx = x.shape();
  const Shape s{sx.n, sx.c, sx.h * 2, sx.w * 2};
  Tensor<Scalar> out(s);
  const auto& in = x.value();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx) out.at(n, c, y, xx) = in.at(n, c, y / 2, xx / 2);
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const Shape sx = g.value(x.id).shape;
    const Shape s = g.value(self).shape;
    const auto& gs = g.grad(self);
    auto& gx = g.grad(x.id);
    for (Eigen::Index plane = 0; plane < Eigen::Index(s.n) * s.c; ++plane) {
      const Scalar* src = gs.data() + plane * s.plane();
      Scalar* dst = gx.data() + plane * sx.plane();
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx) dst[(y / 2) * sx.w + xx / 2] += src[y * s.w + xx];
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

/// Zero-padded 2D cross-correlation. `weight` is {out, in, k, k}, `bias` is {1, out, 1, 1}.
template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias, int stride, int pad) {
  const Shape sx = x.shape();
  const Shape sw = weight.shape();
  require(sw.h == sw.w, ErrorKind::Shape, "conv2d: square kernels only");
  require(sx.c == sw.c, ErrorKind::Shape,
          "conv2d: input has " + std::to_string(sx.c) + " channels, kernel expects " + std::to_string(sw.c));
  require(bias.value().size() == sw.n, ErrorKind::Shape, "conv2d: bias size");
  const int k = sw.h;
  const int ho = (sx.h + 2 * pad - k) / stride + 1;
  const int wo = (sx.w + 2 * pad - k) / stride + 1;
  require(ho > 0 && wo > 0, ErrorKind::Shape, "conv2d: input " + to_string(sx) + " too small for kernel");
  const Shape s{sx.n, sw.n, ho, wo};
  const Eigen::Index rows = Eigen::Index(sx.c) * k * k;
  const Eigen::Index cols_per_sample = Eigen::Index(ho) * wo;

  // im2col buffers, one (rows x pixels) row-major block per sample, so every
  // kernel tap fills a contiguous run of output pixels.
  auto columns = std::make_shared<std::vector<RowMatrix<Scalar>>>(sx.n);
  Tensor<Scalar> out(s);
  Eigen::Map<const RowMatrix<Scalar>> wmat(weight.value().ptr(), sw.n, rows);
  const auto& in = x.value();
  for (int n = 0; n < sx.n; ++n) {
    auto& col = (*columns)[n];
    col.resize(rows, cols_per_sample);
    Scalar* dst = col.data();
    for (int c = 0; c < sx.c; ++c) {
      const Scalar* plane = in.ptr() + (Eigen::Index(n) * sx.c + c) * sx.plane();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx)
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= sx.h) {
              std::fill(dst, dst + wo, Scalar(0));
              dst += wo;
              continue;
            }
            const Scalar* src = plane + iy * sx.w;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              *dst++ = (ix >= 0 && ix < sx.w) ? src[ix] : Scalar(0);
            }
          }
    }
    auto o = out.sample(n);
    o.noalias() = wmat * col;
    o.colwise() += bias.value().data.matrix();
  }

  auto& g = *x.graph;
  return g.record(std::move(out), {x, weight, bias},
                  [x, weight, bias, columns, stride, pad, k, rows](Graph<Scalar>& g, int self) {
                    const Shape sx = g.value(x.id).shape;
                    const Shape s = g.value(self).shape;
                    const auto& gs = g.grad(self);
                    Eigen::Map<const RowMatrix<Scalar>> wmat(g.value(weight.id).ptr(), s.c, rows);
                    const bool want_x = g.requires_grad(x.id);
                    const bool want_w = g.requires_grad(weight.id);
                    const bool want_b = g.requires_grad(bias.id);
                    RowMatrix<Scalar> gcol;
                    for (int n = 0; n < s.n; ++n) {
                      Eigen::Map<const RowMatrix<Scalar>> go(gs.data() + n * s.sample_size(), s.c, s.plane());
                      const auto& col = (*columns)[n];
                      if (want_w) {
                        Eigen::Map<RowMatrix<Scalar>> gw(g.grad(weight.id).data(), s.c, rows);
                        gw.noalias() += go * col.transpose();
                      }
                      if (want_b) g.grad(bias.id).matrix() += go.rowwise().sum();
                      if (!want_x) continue;
                      gcol.noalias() = wmat.transpose() * go;
                      const Scalar* src = gcol.data();
                      Scalar* gx = g.grad(x.id).data() + n * sx.sample_size();
                      for (int c = 0; c < sx.c; ++c) {
                        Scalar* plane = gx + Eigen::Index(c) * sx.plane();
                        for (int ky = 0; ky < k; ++ky)
                          for (int kx = 0; kx < k; ++kx)
                            for (int oy = 0; oy < s.h; ++oy) {
                              const int iy = oy * stride + ky - pad;
                              if (iy < 0 || iy >= sx.h) {
                                src += s.w;
                                continue;
                              }
                              Scalar* row = plane + iy * sx.w;
                              for (int ox = 0; ox < s.w; ++ox, ++src) {
                                const int ix = ox * stride + kx - pad;
                                if (ix >= 0 && ix < sx.w) row[ix] += *src;
                              }
                            }
                      }
                    }
                  });
}

/// Fully connected layer on {n, k, 1, 1} inputs. `weight` is {out, k, 1, 1}.
template <typename Scalar>
Var<Scalar> linear(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  const Shape sx = x.shape();
  const Shape sw = weight.shape();
  const auto in_features = sx.sample_size();
  require(sw.c * sw.h * sw.w == in_features, ErrorKind::Shape,
          "linear: expected " + std::to_string(sw.c) + " input features, got " + std::to_string(in_features));
  Tensor<Scalar> out(Shape{sx.n, sw.n, 1, 1});
  Eigen::Map<const RowMatrix<Scalar>> wmat(weight.value().ptr(), sw.n, in_features);
  out.rows().noalias() = x.value().rows() * wmat.transpose();
  out.rows().rowwise() += bias.value().data.matrix().transpose();
  auto& g = *x.graph;
  return g.record(std::move(out), {x, weight, bias}, [x, weight, bias, in_features](Graph<Scalar>& g, int self) {
    const Shape s = g.value(self).shape;
    Eigen::Map<const RowMatrix<Scalar>> go(g.grad(self).data(), s.n, s.c);
    Eigen::Map<const RowMatrix<Scalar>> wmat(g.value(weight.id).ptr(), s.c, in_features);
    if (g.requires_grad(x.id)) {
      Eigen::Map<RowMatrix<Scalar>> gx(g.grad(x.id).data(), s.n, in_features);
      gx.noalias() += go * wmat;
    }
    if (g.requires_grad(weight.id)) {
      Eigen::Map<RowMatrix<Scalar>> gw(g.grad(weight.id).data(), s.c, in_features);
      gw.noalias() += go.transpose() * g.value(x.id).rows();
    }
    if (g.requires_grad(bias.id)) g.grad(bias.id).matrix() += go.colwise().sum().transpose();
  });
}

// ---------------------------------------------------------------------------
// Normalization and modulation

/// Per-sample, per-channel standardization over the spatial plane.
template <typename Scalar>
Var<Scalar> instance_norm(Var<Scalar> x, Scalar eps = Scalar(1e-5)) {
  const Shape sx = x.shape();
  const auto plane = sx.plane();
  const Eigen::Index planes = Eigen::Index(sx.n) * sx.c;
  auto inv_std = std::make_shared<ArrayX<Scalar>>(planes);
  Tensor<Scalar> out(sx);
  for (Eigen::Index i = 0; i < planes; ++i) {
    const auto seg = x.value().data.segment(i * plane, plane);
    const Scalar mu = seg.mean();
    const Scalar var = (seg - mu).square().mean();
    (*inv_std)[i] = Scalar(1) / std::sqrt(var + eps);
    out.data.segment(i * plane, plane) = (seg - mu) * (*inv_std)[i];
  }
  auto& g = *x.graph;
  return g.record(std::move(out), {x}, [x, inv_std, plane](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(x.id)) return;
    const auto& y = g.value(self).data;
    const auto& gs = g.grad(self);
    auto& gx = g.grad(x.id);
    for (Eigen::Index i = 0; i < inv_std->size(); ++i) {
      const auto gy = gs.segment(i * plane, plane);
      const auto yh = y.segment(i * plane, plane);
      const Scalar mean_g = gy.mean();
      const Scalar mean_gy = (gy * yh).mean();
      gx.segment(i * plane, plane) += (*inv_std)[i] * (gy - mean_g - yh * mean_gy);
    }
  });
}

/// Feature-wise affine modulation: x * (1 + gamma) + beta with {n, c, 1, 1} gamma/beta.
template <typename Scalar>
Var<Scalar> modulate(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta) {
  const Shape sx = x.shape();
  require(gamma.shape() == (Shape{sx.n, sx.c, 1, 1}) && beta.shape() == gamma.shape(), ErrorKind::Shape,
          "modulate: gamma/beta must be {n, c, 1, 1} for input " + to_string(sx));
  const auto plane = sx.plane();
  Tensor<Scalar> out(sx);
  for (Eigen::Index i = 0; i < Eigen::Index(sx.n) * sx.c; ++i)
    out.data.segment(i * plane, plane) =
        x.value().data.segment(i * plane, plane) * (Scalar(1) + gamma.value().data[i]) + beta.value().data[i];
  auto& g = *x.graph;
  return g.record(std::move(out), {x, gamma, beta}, [x, gamma, beta, plane](Graph<Scalar>& g, int self) {
    const auto& gs = g.grad(self);
    const auto& xv = g.value(x.id).data;
    const auto& gv = g.value(gamma.id).data;
    for (Eigen::Index i = 0; i < gv.size(); ++i) {
      const auto go = gs.segment(i * plane, plane);
      if (g.requires_grad(x.id)) g.grad(x.id).segment(i * plane, plane) += go * (Scalar(1) + gv[i]);
      if (g.requires_grad(gamma.id)) g.grad(gamma.id)[i] += (go * xv.segment(i * plane, plane)).sum();
      if (g.requires_grad(beta.id)) g.grad(beta.id)[i] += go.sum();
    }
  });
}

// ---------------------------------------------------------------------------
// Losses

/// Mean over samples of -sum_k target_k * log_softmax(logits)_k.
/// `logits` is {n, k, 1, 1}; `target` is a constant distribution per row.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Var<Scalar> logits, const std::type_identity_t<RowMatrix<Scalar>>& target) {
  const Shape s = logits.shape();
  require(target.rows() == s.n && target.cols() == s.sample_size(), ErrorKind::Shape,
          "softmax_cross_entropy: target must be n x k");
  const auto l = logits.value().rows();
  RowMatrix<Scalar> logp(s.n, s.sample_size());
  for (int n = 0; n < s.n; ++n) {
    const Scalar m = l.row(n).maxCoeff();
    const Scalar lse = m + std::log((l.row(n).array() - m).exp().sum());
    logp.row(n) = l.row(n).array() - lse;
  }
  const Scalar loss = -(target.array() * logp.array()).sum() / Scalar(s.n);
  Tensor<Scalar> out(Shape{}, ArrayX<Scalar>::Constant(1, loss));
  auto& g = *logits.graph;
  return g.record(std::move(out), {logits}, [logits, target, logp](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(logits.id)) return;
    const Scalar go = g.grad(self)[0];
    Eigen::Map<RowMatrix<Scalar>> gl(g.grad(logits.id).data(), logp.rows(), logp.cols());
    const RowMatrix<Scalar> p = logp.array().exp().matrix();
    // d/dl of -sum t log softmax = softmax * sum(t) - t
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mass = target.rowwise().sum();
    gl += (go / Scalar(logp.rows())) * ((p.array().colwise() * mass.array()).matrix() - target);
  });
}

/// One-hot rows for integer class labels.
template <typename Scalar>
RowMatrix<Scalar> one_hot_rows(const std::vector<int>& labels, int classes) {
  RowMatrix<Scalar> t = RowMatrix<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
  return t;
}

}  // namespace histaug::ad
