#include <cmath>

#include "common/error.hpp"
#include "linalg/matrix.hpp"

namespace opdyn::linalg {

// Scaled Newton iteration for the sign of the block matrix [[a, q], [0, -a^T]].
// The diagonal iterate tends to -I and the off-diagonal one to 2W.
Matrix lyapunov_solve(const Matrix& a, const Matrix& q, const LyapunovOptions& opts) {
  if (!a.square() || q.rows() != a.rows() || q.cols() != a.cols())
    throw ValidationError("lyapunov_solve dimension mismatch");
  const std::size_t n = a.rows();
  if (n == 0) return Matrix();
  const Spectrum spec = spectrum(a);
  if (spec.max_real_part >= -opts.hurwitz_tol)
    throw NumericalError("Lyapunov operator is not Hurwitz (max real part " +
                         std::to_string(spec.max_real_part) + ")");

  Matrix ak = a;
  Matrix qk = q;
  const Matrix id = Matrix::identity(n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const LU lu(ak);
    if (lu.singular()) throw NumericalError("singular iterate in Lyapunov solve", it);
    const Matrix inv = lu.inverse();
    const double det = std::abs(lu.determinant());
    double c = 1.0;
    if (det > 0.0 && std::isfinite(det)) c = std::pow(det, 1.0 / static_cast<double>(n));
    const Matrix next_a = 0.5 * (ak * (1.0 / c) + inv * c);
    const Matrix next_q = 0.5 * (qk * (1.0 / c) + c * (inv * qk * inv.transpose()));
    const double change = norm_one(next_a - ak);
    ak = next_a;
    qk = next_q;
    if (!ak.all_finite() || !qk.all_finite())
      throw NumericalError("non-finite iterate in Lyapunov solve", it);
    if (norm_one(ak + id) <= opts.convergence_tol * static_cast<double>(n) ||
        change <= opts.convergence_tol * norm_one(ak)) {
      Matrix w = 0.5 * qk;
      return 0.5 * (w + w.transpose());
    }
  }
  throw NumericalError("Lyapunov sign iteration did not converge", opts.max_iterations);
}

}  // namespace opdyn::linalg
