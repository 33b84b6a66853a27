// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace felab {

/// Dense row-major tensor. rows() addresses the innermost axis.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, T fill = T{}) : shape_(std::move(shape)) {
    data_.assign(element_count(shape_), fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Innermost-axis slice at the given leading indices.
  std::span<T> row(std::initializer_list<std::size_t> lead) {
    const std::size_t len = shape_.empty() ? 0 : shape_.back();
    return std::span<T>(data_).subspan(offset(lead), len);
  }
  std::span<const T> row(std::initializer_list<std::size_t> lead) const {
    const std::size_t len = shape_.empty() ? 0 : shape_.back();
    return std::span<const T>(data_).subspan(offset(lead), len);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> lead) const {
    if (lead.size() + 1 != shape_.size()) throw std::out_of_range("Tensor::row: wrong index count");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t idx : lead) {
      if (idx >= shape_[axis]) throw std::out_of_range("Tensor::row: index out of range");
      off = off * shape_[axis] + idx;
      ++axis;
    }
    return off * shape_.back();
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

}  // namespace felab
