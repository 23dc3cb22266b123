/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHPDET_TENSOR_HPP
#define CHPDET_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "chpdet/error.hpp"

namespace chpdet {

/// Non-owning row-major 2-D view over one channel of a tensor.
template <typename T>
class GridView {
public:
    GridView() = default;
    GridView(T* data, std::size_t rows, std::size_t cols) : data_(data), rows_(rows), cols_(cols) {}

    // Allows GridView<T> -> GridView<const T>.
    template <typename U>
        requires std::is_convertible_v<U*, T*>
    GridView(const GridView<U>& other) : data_(other.data()), rows_(other.rows()), cols_(other.cols()) {}

    T& operator()(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    T* data() const { return data_; }
    std::span<T> values() const { return {data_, size()}; }

    bool contains(long row, long col) const {
        return row >= 0 && col >= 0 && static_cast<std::size_t>(row) < rows_ &&
               static_cast<std::size_t>(col) < cols_;
    }

private:
    T* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

/// Dense row-major tensor with a runtime shape. Maps are stored channel-major (C x H x W).
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, T fill = T{})
        : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
        detail::require(data_.size() == element_count(shape_), "tensor payload does not match its shape");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    template <typename... Index>
    T& operator()(Index... index) {
        return data_[offset({static_cast<std::size_t>(index)...})];
    }

    template <typename... Index>
    const T& operator()(Index... index) const {
        return data_[offset({static_cast<std::size_t>(index)...})];
    }

    /// Channel `c` of a rank-3 tensor as an H x W grid.
    GridView<T> channel(std::size_t c) {
        check_channel(c);
        return {data_.data() + c * shape_[1] * shape_[2], shape_[1], shape_[2]};
    }

    GridView<const T> channel(std::size_t c) const {
        check_channel(c);
        return {data_.data() + c * shape_[1] * shape_[2], shape_[1], shape_[2]};
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool operator==(const Tensor& other) const = default;

private:
    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t offset(std::initializer_list<std::size_t> index) const {
        std::size_t flat = 0;
        std::size_t axis = 0;
        for (std::size_t i : index) {
            flat = flat * shape_[axis] + i;
            ++axis;
        }
        return flat;
    }

    void check_channel(std::size_t c) const {
        detail::require(shape_.size() == 3, "channel view requires a rank-3 tensor");
        detail::require(c < shape_[0], "channel index out of range");
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using Map = Tensor<double>;

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& source) {
    std::vector<To> values(source.size());
    std::transform(source.values().begin(), source.values().end(), values.begin(),
                   [](From v) { return static_cast<To>(v); });
    return Tensor<To>(source.shape(), std::move(values));
}

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

}  // namespace chpdet

#endif
