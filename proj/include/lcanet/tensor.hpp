// Copyright 2026 The lcanet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcanet/common.hpp"

namespace lcanet {

/// Dense row-major tensor. Most of the library works with 4-D (B, C, H, W)
/// layouts; FC weights and per-channel vectors use 2-D and 1-D shapes.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s)
      : shape(std::move(s)), data(numel_of(shape), T(0)) {}

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw ShapeError("negative dimension in tensor shape");
      n *= d;
    }
    return n;
  }

  static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

  static TensorT full(std::vector<int> s, T v) {
    TensorT t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static TensorT from(std::vector<int> s, std::vector<T> values) {
    TensorT t;
    t.shape = std::move(s);
    if (static_cast<int64_t>(values.size()) != numel_of(t.shape))
      throw ShapeError("value count does not match tensor shape");
    t.data = std::move(values);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[i]; }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  // 4-D accessors (B, C, H, W).
  T& at(int b, int c, int h, int w) {
    return data[((static_cast<int64_t>(b) * shape[1] + c) * shape[2] + h) *
                    shape[3] +
                w];
  }
  T at(int b, int c, int h, int w) const {
    return data[((static_cast<int64_t>(b) * shape[1] + c) * shape[2] + h) *
                    shape[3] +
                w];
  }

  T* ptr(int64_t offset = 0) { return data.data() + offset; }
  const T* ptr(int64_t offset = 0) const { return data.data() + offset; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i)
      os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void check_finite(const TensorT<T>& t, const char* context) {
  for (const T& v : t.data) {
    if (!std::isfinite(v))
      throw NumericError(std::string("non-finite value in ") + context);
  }
}

template <typename T>
void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
  if (!dst.same_shape(src))
    throw ShapeError("accumulate: shape mismatch " + dst.shape_str() + " vs " +
                     src.shape_str());
  for (int64_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
}

template <typename T>
TensorT<T> random_uniform(std::vector<int> shape, T lo, T hi, Rng& rng) {
  TensorT<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
TensorT<T> random_normal(std::vector<int> shape, Rng& rng) {
  TensorT<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.normal());
  return t;
}

}  // namespace lcanet
