#include "signxfer/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <system_error>

#include "signxfer/errors.hpp"

namespace signxfer {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes disagree: " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + shape_str());
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix out(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols_) {
      throw ShapeError("Matrix::from_rows: ragged row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < out.cols_; ++c) out.at(r, c) = rows[r][c];
  }
  return out;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::is_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + a.shape_str() +
                     " vs " + b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
  return out;
}

Matrix add_row_bias(const Matrix& a, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row_bias: bias " + bias.shape_str() +
                     " does not broadcast over " + a.shape_str());
  }
  Matrix out = a;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) += bias.at(0, c);
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
  return out;
}

Matrix tanh_map(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

Matrix sigmoid_map(const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return out;
}

Matrix row_softmax(const Matrix& a) {
  Matrix out = a;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double mx = a.at(r, 0);
    for (std::size_t c = 1; c < a.cols(); ++c) mx = std::max(mx, a.at(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      const double e = std::exp(a.at(r, c) - mx);
      out.at(r, c) = e;
      total += e;
    }
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) /= total;
  }
  return out;
}

Matrix temporal_maxpool(const Matrix& a, std::vector<std::size_t>* argmax_rows) {
  if (a.rows() == 0) {
    throw ShapeError("temporal_maxpool: empty sequence (0 rows)");
  }
  Matrix out(1, a.cols());
  if (argmax_rows) argmax_rows->assign(a.cols(), 0);
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double best = a.at(0, c);
    std::size_t best_row = 0;
    for (std::size_t r = 1; r < a.rows(); ++r) {
      if (a.at(r, c) > best) {
        best = a.at(r, c);
        best_row = r;
      }
    }
    out.at(0, c) = best;
    if (argmax_rows) (*argmax_rows)[c] = best_row;
  }
  return out;
}

Matrix mean_rows(const Matrix& a) {
  if (a.rows() == 0) throw ShapeError("mean_rows: empty sequence (0 rows)");
  Matrix out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(0, c) += a.at(r, c);
  const double inv = 1.0 / static_cast<double>(a.rows());
  for (double& v : out.values()) v *= inv;
  return out;
}

Matrix pool_mean_rows(const Matrix& a, std::size_t factor) {
  if (factor == 0) throw ShapeError("pool_mean_rows: factor must be >= 1");
  if (a.rows() == 0) throw ShapeError("pool_mean_rows: empty sequence (0 rows)");
  const std::size_t out_rows = (a.rows() + factor - 1) / factor;
  Matrix out(out_rows, a.cols());
  for (std::size_t w = 0; w < out_rows; ++w) {
    const std::size_t begin = w * factor;
    const std::size_t end = std::min(a.rows(), begin + factor);
    for (std::size_t r = begin; r < end; ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) out.at(w, c) += a.at(r, c);
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(w, c) *= inv;
  }
  return out;
}

double sum(const Matrix& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return total;
}

double bce_loss(const Matrix& p, const Matrix& y) {
  require_same_shape(p, y, "bce_loss");
  constexpr double kClamp = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p.values()[i], kClamp, 1.0 - kClamp);
    const double yi = y.values()[i];
    total += yi * std::log(pi) + (1.0 - yi) * std::log(1.0 - pi);
  }
  return -total / static_cast<double>(p.size());
}

double squared_distance(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "squared_distance");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    total += d * d;
  }
  return total;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("not a number: '" + s + "'");
  }
  return v;
}

}  // namespace signxfer
