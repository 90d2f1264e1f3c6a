#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "maneuverlab/error.hpp"

namespace mlab {

/// Dense row-major matrix of doubles. Plain value type used for data
/// (series, representations, design matrices); the autodiff path uses
/// nd::Tensor instead.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != r * c) {
            throw DimensionError("Matrix: value count does not match rows*cols");
        }
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    [[nodiscard]] bool empty() const noexcept { return data.empty(); }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace mlab
