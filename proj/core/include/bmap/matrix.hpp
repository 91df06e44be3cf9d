#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bmap {

using Vector = std::vector<double>;

// Small dense row-major matrix. Type counts are tiny (d <= 64), so nothing
// here tries to be clever about cache blocking.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const;
  double norm_inf() const;  // max absolute row sum
  double max_abs() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> v);
// Row vector times matrix: (v^T a)^T.
Vector left_multiply(std::span<const double> v, const Matrix& a);
// Entrywise (Hadamard) product.
Matrix hadamard(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> v);

// Solves a x = b by Gaussian elimination with partial pivoting.
// Throws ConvergenceError when the matrix is numerically singular.
Vector solve_linear(Matrix a, Vector b);

}  // namespace bmap
