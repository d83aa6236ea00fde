#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "trinorm/geometry.hpp"

namespace trinorm {

// Dense row-major matrix of doubles. The workhorse container for patches
// (k x 3), layer weights and activation caches.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Symmetric 3x3 matrix in packed order (xx, xy, xz, yy, yz, zz).
using Sym3 = std::array<double, 6>;

struct SymEig3 {
  std::array<double, 3> values;   // descending
  std::array<Vec3, 3> vectors;    // orthonormal, vectors[i] pairs with values[i]
};

// Cyclic Jacobi eigendecomposition. Deterministic; preserves exact zeros in
// decoupled coordinates (a plane patch keeps its axis eigenvector exact).
SymEig3 eig33_sym(const Sym3& a);

// Population covariance of a point set about its centroid, accumulated in
// input order.
Sym3 covariance3(std::span<const Vec3> pts);

}  // namespace trinorm
