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

#include <Eigen/Core>

#include <ostream>
#include <sstream>
#include <string>

#include "histaug/error.hpp"

namespace histaug {

/// Dense NCHW extent. Vectors are stored as {n, k, 1, 1}.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  constexpr Eigen::Index size() const { return Eigen::Index(n) * c * h * w; }
  constexpr Eigen::Index sample_size() const { return Eigen::Index(c) * h * w; }
  constexpr Eigen::Index plane() const { return Eigen::Index(h) * w; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '[' << s.n << 'x' << s.c << 'x' << s.h << 'x' << s.w << ']';
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << to_string(s); }

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Contiguous NCHW tensor backed by an Eigen array.
template <typename Scalar>
struct Tensor {
  Shape shape;
  ArrayX<Scalar> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(ArrayX<Scalar>::Zero(s.size())) {}
  Tensor(Shape s, ArrayX<Scalar> values) : shape(s), data(std::move(values)) {
    require(data.size() == shape.size(), ErrorKind::Shape,
            "tensor storage does not match shape " + to_string(shape));
  }

  static Tensor constant(Shape s, Scalar v) { return Tensor(s, ArrayX<Scalar>::Constant(s.size(), v)); }

  Eigen::Index size() const { return data.size(); }
  Scalar* ptr() { return data.data(); }
  const Scalar* ptr() const { return data.data(); }

  Scalar& at(int n, int c, int y, int x) {
    return data[((Eigen::Index(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  Scalar at(int n, int c, int y, int x) const {
    return data[((Eigen::Index(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }

  /// Sample `n` viewed as a (channels x pixels) row-major matrix.
  Eigen::Map<RowMatrix<Scalar>> sample(int n) {
    return {ptr() + n * shape.sample_size(), shape.c, shape.plane()};
  }
  Eigen::Map<const RowMatrix<Scalar>> sample(int n) const {
    return {ptr() + n * shape.sample_size(), shape.c, shape.plane()};
  }

  /// Whole tensor as (n x c*h*w).
  Eigen::Map<RowMatrix<Scalar>> rows() { return {ptr(), shape.n, shape.sample_size()}; }
  Eigen::Map<const RowMatrix<Scalar>> rows() const { return {ptr(), shape.n, shape.sample_size()}; }

  bool all_finite() const { return data.isFinite().all(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape, data.template cast<Other>());
  }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace histaug
