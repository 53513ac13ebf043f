#include <array>
#include <cmath>

#include "common/error.hpp"
#include "linalg/matrix.hpp"

namespace opdyn::linalg {

namespace {

// Pade coefficients and 1-norm thresholds for degrees 3, 5, 7, 9, 13
// (scaling-and-squaring, backward-error bounds for double precision).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                           30270240.0,    2162160.0,    110880.0,     3960.0,
                                           90.0,          1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0,
                                          5.371920351148152e0};

template <std::size_t K>
Matrix pade_low(const Matrix& a, const std::array<double, K>& b) {
  const std::size_t n = a.rows();
  const Matrix id = Matrix::identity(n);
  const Matrix a2 = a * a;
  Matrix u_inner = b[1] * id;
  Matrix v = b[0] * id;
  Matrix power = id;
  for (std::size_t k = 2; k < K; k += 2) {
    power = power * a2;
    v += b[k] * power;
    if (k + 1 < K) u_inner += b[k + 1] * power;
  }
  const Matrix u = a * u_inner;
  return solve(v - u, v + u);
}

Matrix pade13(const Matrix& a) {
  const auto& b = kPade13;
  const std::size_t n = a.rows();
  const Matrix id = Matrix::identity(n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                        b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                   b[0] * id;
  return solve(v - u, v + u);
}

}  // namespace

Matrix matexp(const Matrix& input, double t) {
  if (!input.square()) throw ValidationError("matexp requires a square matrix");
  if (!std::isfinite(t)) throw ValidationError("matexp time must be finite");
  const Matrix a = input * t;
  const double norm = norm_one(a);
  if (norm == 0.0) return Matrix::identity(a.rows());
  if (norm <= kTheta[0]) return pade_low(a, kPade3);
  if (norm <= kTheta[1]) return pade_low(a, kPade5);
  if (norm <= kTheta[2]) return pade_low(a, kPade7);
  if (norm <= kTheta[3]) return pade_low(a, kPade9);
  int squarings = 0;
  if (norm > kTheta[4]) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta[4]))));
  Matrix r = pade13(a * std::ldexp(1.0, -squarings));
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

Matrix integrated_decay(const Matrix& a, double t) {
  if (!a.square()) throw ValidationError("integrated_decay requires a square matrix");
  const std::size_t n = a.rows();
  Matrix aug(2 * n, 2 * n);
  aug.set_block(0, 0, -a);
  aug.set_block(0, n, Matrix::identity(n));
  return matexp(aug, t).block(0, n, n, n);
}

}  // namespace opdyn::linalg
