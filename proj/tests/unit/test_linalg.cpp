#include <cmath>
#include <numbers>
#include <random>

#include "common/error.hpp"
#include "doctest.h"
#include "linalg/matrix.hpp"

using namespace opdyn::linalg;

namespace {

// det(a - z I) by complex Gaussian elimination with partial pivoting.
Complex char_poly(const Matrix& a, Complex z) {
  const std::size_t n = a.rows();
  std::vector<Complex> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = a(i, j) - (i == j ? z : Complex{});
  Complex det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m[i * n + k]) > std::abs(m[p * n + k])) p = i;
    if (m[p * n + k] == Complex{}) return 0.0;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[k * n + j], m[p * n + j]);
      det = -det;
    }
    det *= m[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const Complex f = m[i * n + k] / m[k * n + k];
      for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
    }
  }
  return det;
}

Matrix random_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (double& v : a.data()) v = g(rng);
  return a;
}

}  // namespace

TEST_CASE("matexp of zero, diagonal and rotation generators") {
  CHECK(max_abs_diff(matexp(Matrix(2, 2), 5.0), Matrix::identity(2)) == 0.0);

  const Matrix e = matexp(Matrix{{1, 0}, {0, 2}}, 1.0);
  CHECK(std::abs(e(0, 0) - std::exp(1.0)) <= 1e-12 * std::exp(1.0));
  CHECK(std::abs(e(1, 1) - std::exp(2.0)) <= 1e-12 * std::exp(2.0));
  CHECK(e(0, 1) == 0.0);

  const Matrix r = matexp(Matrix{{0, 1}, {-1, 0}}, std::numbers::pi / 2);
  CHECK(max_abs_diff(r, Matrix{{0, 1}, {-1, 0}}) <= 1e-14);
}

TEST_CASE("matexp semigroup property and large norms") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 3u, 6u, 12u}) {
    const Matrix a = random_matrix(n, rng);
    for (double s : {0.01, 0.3, 2.0}) {
      const double t = 1.7;
      const Matrix lhs = matexp(a, s) * matexp(a, t);
      const Matrix rhs = matexp(a, s + t);
      CHECK(max_abs_diff(lhs, rhs) <= 1e-10 * std::max(1.0, norm_inf(rhs)));
    }
  }
  // Scalar large-argument case, relative accuracy.
  const Matrix big = matexp(Matrix{{-30.0}}, 1.0);
  CHECK(std::abs(big(0, 0) / std::exp(-30.0) - 1.0) <= 1e-12);
}

TEST_CASE("integrated_decay matches the scalar closed form and the inverse formula") {
  const Matrix s = integrated_decay(Matrix{{0.5}}, 3.0);
  CHECK(std::abs(s(0, 0) - (1.0 - std::exp(-1.5)) / 0.5) <= 1e-14);
  const Matrix a{{1.0, 0.3}, {1e-10, 1.0}};
  const Matrix ref = inverse(a) * (Matrix::identity(2) - matexp(a, -2.0));
  CHECK(max_abs_diff(integrated_decay(a, 2.0), ref) <= 1e-13);
  const Matrix z = integrated_decay(Matrix(2, 2), 4.0);
  CHECK(max_abs_diff(z, 4.0 * Matrix::identity(2)) <= 1e-14);
}

TEST_CASE("spectrum of simple matrices") {
  const Spectrum id = spectrum(Matrix::identity(3));
  REQUIRE(id.eigenvalues.size() == 3);
  for (Complex z : id.eigenvalues) CHECK(std::abs(z - 1.0) <= 1e-14);
  CHECK(id.min_real_part == doctest::Approx(1.0));

  const Spectrum rot = spectrum(Matrix{{0, 1}, {-1, 0}});
  REQUIRE(rot.eigenvalues.size() == 2);
  CHECK(std::abs(rot.eigenvalues[0] - Complex(0, -1)) <= 1e-14);
  CHECK(std::abs(rot.eigenvalues[1] - Complex(0, 1)) <= 1e-14);
  CHECK(std::abs(rot.min_real_part) <= 1e-14);

  const Spectrum tri = spectrum(Matrix{{2, 5, 7}, {0, -1, 3}, {0, 0, 4}});
  CHECK(tri.eigenvalues[0].real() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(tri.eigenvalues[1].real() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(tri.eigenvalues[2].real() == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("spectrum eigenvalues are roots of the characteristic polynomial") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {2u, 5u, 9u, 16u}) {
    const Matrix a = random_matrix(n, rng);
    const Spectrum s = spectrum(a);
    REQUIRE(s.eigenvalues.size() == n);
    const double scale = std::pow(norm_frobenius(a), static_cast<double>(n));
    for (Complex z : s.eigenvalues) CHECK(std::abs(char_poly(a, z)) <= 1e-8 * scale);
    double tr = 0.0;
    for (Complex z : s.eigenvalues) tr += z.real();
    CHECK(std::abs(tr - trace(a)) <= 1e-10 * n);
  }
}

TEST_CASE("spectrum of a large symmetric matrix agrees with Jacobi") {
  std::mt19937_64 rng(3);
  Matrix a = random_matrix(64, rng);
  a = a + a.transpose();
  const Spectrum s = spectrum(a);
  const SymmetricEigen e = symmetric_eigen(a);
  for (std::size_t k = 0; k < 64; ++k) {
    CHECK(std::abs(s.eigenvalues[k].real() - e.values[k]) <= 1e-9);
    CHECK(std::abs(s.eigenvalues[k].imag()) <= 1e-9);
  }
}

TEST_CASE("spectrum rejects non-square input") {
  CHECK_THROWS_AS(spectrum(Matrix(2, 3)), opdyn::ValidationError);
  CHECK_THROWS_AS(matexp(Matrix(2, 3), 1.0), opdyn::ValidationError);
}

TEST_CASE("lyapunov_solve trivial cases") {
  const Matrix d{{2.0, 0.5}, {0.5, 1.0}};
  const Matrix w = lyapunov_solve(-1.0 * Matrix::identity(2), d);
  CHECK(max_abs_diff(w, 0.5 * d) <= 1e-14);

  const Matrix s = lyapunov_solve(Matrix{{-0.3}}, Matrix{{1e-3}});
  CHECK(s(0, 0) == doctest::Approx(1e-3 / 0.6).epsilon(1e-13));
}

TEST_CASE("lyapunov_solve agrees with the Kronecker-vectorized oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    Matrix a = random_matrix(n, rng);
    const double shift = spectrum(a).max_real_part + 0.2 + 0.1 * trial;
    a -= shift * Matrix::identity(n);
    Matrix q = random_matrix(n, rng);
    q = q * q.transpose();
    const Matrix w = lyapunov_solve(a, q);

    const Matrix id = Matrix::identity(n);
    const Matrix op = kron(a, id) + kron(id, a);
    Vector rhs = vec(q);
    for (double& v : rhs) v = -v;
    const Matrix oracle = unvec(solve(op, rhs), n, n);
    CHECK(max_abs_diff(w, oracle) <= 1e-10 * std::max(1.0, norm_inf(oracle)));

    const Matrix residual = a * w + w * a.transpose() + q;
    CHECK(norm_frobenius(residual) <= 1e-10 * norm_frobenius(q));
    CHECK(max_abs_diff(w, w.transpose()) <= 1e-12 * std::max(1.0, norm_inf(w)));
  }
}

TEST_CASE("lyapunov_solve refuses non-Hurwitz operators") {
  CHECK_THROWS_AS(lyapunov_solve(Matrix{{0, 1}, {-1, 0}}, Matrix::identity(2)), opdyn::NumericalError);
  CHECK_THROWS_AS(lyapunov_solve(Matrix{{0.1}}, Matrix{{1.0}}), opdyn::NumericalError);
}

TEST_CASE("kron definitions and eigenvalue products") {
  const Matrix c{{1, 0.3}, {1e-10, 1}};
  const Matrix k = kron(Matrix::identity(2), c);
  CHECK(max_abs_diff(k.block(0, 0, 2, 2), c) == 0.0);
  CHECK(max_abs_diff(k.block(2, 2, 2, 2), c) == 0.0);
  CHECK(max_abs_diff(k.block(0, 2, 2, 2), Matrix(2, 2)) == 0.0);

  const Matrix b{{1, 2}, {3, 4}};
  CHECK(kron(Matrix{{2.0}}, b) == 2.0 * b);

  const Matrix zeta{{1.0, -0.004}, {-0.004, 1.0}};
  const Matrix zbar = kron(zeta, c);
  REQUIRE(zbar.rows() == 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 2; ++q) CHECK(zbar(2 * i + p, 2 * j + q) == zeta(i, j) * c(p, q));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_matrix(2, rng), y = random_matrix(2, rng);
    const Spectrum sx = spectrum(x), sy = spectrum(y), sk = spectrum(kron(x, y));
    for (Complex a : sx.eigenvalues)
      for (Complex b : sy.eigenvalues) {
        double best = 1e300;
        for (Complex z : sk.eigenvalues) best = std::min(best, std::abs(z - a * b));
        CHECK(best <= 1e-9);
      }
  }
}

TEST_CASE("LU, Cholesky and Jacobi basics") {
  const Matrix a{{4, 1, 0}, {1, 3, 1}, {0, 1, 2}};
  const LU lu(a);
  CHECK(lu.determinant() == doctest::Approx(18.0));
  CHECK(max_abs_diff(a * lu.inverse(), Matrix::identity(3)) <= 1e-14);
  Matrix l;
  REQUIRE(cholesky(a, l));
  CHECK(max_abs_diff(l * l.transpose(), a) <= 1e-14);
  CHECK_FALSE(cholesky(Matrix{{1, 2}, {2, 1}}, l));
  const SymmetricEigen e = symmetric_eigen(a);
  for (std::size_t k = 0; k < 3; ++k) {
    Vector v(3);
    for (std::size_t i = 0; i < 3; ++i) v[i] = e.vectors(i, k);
    const Vector av = a * v;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(av[i] - e.values[k] * v[i]) <= 1e-13);
  }
  CHECK(LU(Matrix{{1, 2}, {2, 4}}).singular());
  CHECK_THROWS_AS(solve(Matrix{{1, 2}, {2, 4}}, Vector{1, 1}), opdyn::NumericalError);
}
