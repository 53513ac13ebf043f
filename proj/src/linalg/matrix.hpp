#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace opdyn::linalg {

using Complex = std::complex<double>;
using Vector = std::vector<double>;

/// Dense real matrix, row-major storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// y = a * x without allocation; y must have size a.rows().
void multiply(const Matrix& a, std::span<const double> x, std::span<double> y);

double norm_frobenius(const Matrix& a);
double norm_inf(const Matrix& a);
double norm_one(const Matrix& a);
double norm_inf(std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
double trace(const Matrix& a);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix block_diagonal(std::span<const Matrix> blocks);

/// Row-major vectorization: vec(X)[i*n + j] = X(i, j).
Vector vec(const Matrix& a);
Matrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

/// LU factorization with partial pivoting.
class LU {
 public:
  explicit LU(const Matrix& a);

  bool singular() const { return singular_; }
  /// Smallest |pivot| relative to the largest; a cheap conditioning indicator.
  double pivot_ratio() const { return pivot_ratio_; }
  double determinant() const;
  Vector solve(std::span<const double> b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  bool singular_ = false;
  double pivot_ratio_ = 0.0;
};

Vector solve(const Matrix& a, std::span<const double> b);
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

/// Lower-triangular L with a = L L^T; returns false when a is not positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi rotations for symmetric input.
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = 1e-15, int max_sweeps = 100);

/// Matrix exponential e^{a t}.
Matrix matexp(const Matrix& a, double t = 1.0);

/// Integral of e^{-a s} over s in [0, t], via the exponential of an augmented block matrix.
Matrix integrated_decay(const Matrix& a, double t);

struct Spectrum {
  std::vector<Complex> eigenvalues;
  double min_real_part = 0.0;
  double max_real_part = 0.0;
};

struct SpectrumOptions {
  int max_iterations_per_eigenvalue = 60;
  bool balance = true;
};

/// All eigenvalues via balancing, Hessenberg reduction, and Francis double-shift QR.
Spectrum spectrum(const Matrix& a, const SpectrumOptions& opts = {});

struct LyapunovOptions {
  double hurwitz_tol = 1e-12;
  double convergence_tol = 1e-14;
  int max_iterations = 100;
};

/// Solves a W + W a^T + q = 0 for Hurwitz a (all eigenvalues with negative real part).
Matrix lyapunov_solve(const Matrix& a, const Matrix& q, const LyapunovOptions& opts = {});

}  // namespace opdyn::linalg
