/* Copyright 2026 The TSA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tsa/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace tsa {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(NumElements(shape_), fill) {
  if (shape_.empty()) throw ShapeError("tensor: rank-0 shape");
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor: zero extent in " + ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.empty()) throw ShapeError("tensor: rank-0 shape");
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor: zero extent in " + ShapeString(shape_));
  }
  if (NumElements(shape_) != values_.size()) {
    throw ShapeError("tensor: shape " + ShapeString(shape_) + " holds " +
                     std::to_string(NumElements(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> v;
  const std::size_t cols = rows.begin()->size();
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("tensor: ragged rows");
    v.insert(v.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(v));
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != values_.size()) {
    throw ShapeError("reshape: cannot view " + ShapeString(shape_) + " as " +
                     ShapeString(shape));
  }
  return Tensor(std::move(shape), values_);
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + ShapeString(a.shape()) + " vs " +
                     ShapeString(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace tsa
