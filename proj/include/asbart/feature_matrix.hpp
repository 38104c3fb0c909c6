#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace asbart {

// Column-major n x p matrix of raw feature values. Column access is the hot
// path during tree growth; rows are gathered only for prediction.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t row, std::size_t col) const { return values_[col * rows_ + row]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[col * rows_ + row]; }

  std::span<const double> col(std::size_t j) const { return {values_.data() + j * rows_, rows_}; }
  std::span<double> col(std::size_t j) { return {values_.data() + j * rows_, rows_}; }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(cols_);
    for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace asbart
