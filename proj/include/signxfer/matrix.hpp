#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace signxfer {

// Dense row-major matrix of doubles. All model state and features live in
// these; sizes stay small (tens by tens) so no blocking or BLAS is needed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  std::string shape_str() const;
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool is_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }
  friend bool operator!=(const Matrix& a, const Matrix& b) { return !(a == b); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Kernels. The autodiff graph calls exactly these in its forward passes so
// that tape-free inference and graph evaluation agree bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix add_row_bias(const Matrix& a, const Matrix& bias);  // bias is 1 x cols
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix tanh_map(const Matrix& a);
Matrix sigmoid_map(const Matrix& a);

// Row-wise softmax with max subtraction.
Matrix row_softmax(const Matrix& a);

// Column-wise max over rows; ties go to the lowest row index. The optional
// out-parameter records the winning row per column (for backprop routing).
Matrix temporal_maxpool(const Matrix& a, std::vector<std::size_t>* argmax_rows = nullptr);

// Column-wise mean over all rows -> 1 x cols.
Matrix mean_rows(const Matrix& a);

// Non-overlapping temporal mean pooling with the given factor; the last
// window may be short. rows_out = ceil(rows / factor).
Matrix pool_mean_rows(const Matrix& a, std::size_t factor);

double sum(const Matrix& a);

// Mean binary cross-entropy of probabilities p against 0/1 targets y,
// with p clamped to [1e-7, 1 - 1e-7] before the logs.
double bce_loss(const Matrix& p, const Matrix& y);

double squared_distance(const Matrix& a, const Matrix& b);

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace signxfer
