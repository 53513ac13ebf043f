#pragma once

#include <optional>
#include <string>

#include "meanfield/system.hpp"
#include "model/scenario.hpp"

namespace opdyn::stability {

using linalg::Matrix;
using linalg::Spectrum;

enum class Classification { Stable, TypeI, TypeII };
/// Outcome of a sufficient condition: it either does not apply, or applies and holds or fails.
enum class Check { Holds, Fails, NotApplicable };

const char* to_string(Classification c);
const char* to_string(Check c);

/// Real parts at or below this count as marginal and are classified unstable.
inline constexpr double kMarginTol = 1e-12;

struct SufficientChecks {
  Check prop1 = Check::NotApplicable;
  Check prop2 = Check::NotApplicable;
  Check continuous = Check::NotApplicable;
};

struct StabilityReport {
  Classification classification = Classification::Stable;
  double min_real_Xi = 0.0;
  double min_real_Psi = 0.0;
  Spectrum psi_spectrum;
  std::optional<Spectrum> theta_spectrum;
  SufficientChecks sufficient_checks;
  /// Infinity norm of Psi^{-1}, when Psi is invertible.
  std::optional<double> psi_inverse_norm;
};

Classification classify_values(double min_real_xi, double min_real_psi, double tol = kMarginTol);

StabilityReport classify(const meanfield::DiscreteSystem& sys);
/// Spectral classification plus the scalar-case sufficient conditions.
StabilityReport classify(const model::Scenario& scn);

/// Theta with Psi = (alpha I + alpha_bar Theta) (x) C when alpha is constant.
Matrix theta_matrix(const meanfield::DiscreteSystem& sys);

Check prop1_check(const model::Scenario& scn);
Check prop2_check(const model::Scenario& scn);

struct ContinuousConditionValue {
  double p = 0.0;
  double lhs = 0.0;    // integral of zeta rho0 minus integral of |zeta| times rho0(p)
  double bound = 0.0;  // -alpha/(1 - alpha)
  Check check = Check::NotApplicable;
};

std::vector<ContinuousConditionValue> continuous_condition(const model::ContinuousSpec& spec,
                                                           std::span<const double> p_samples,
                                                           std::size_t nodes = 1025);

struct Example1Result {
  std::vector<double> eigenvalues;  // ascending
  Classification classification = Classification::Stable;
  double zeta2_type2 = 0.0;  // alpha / alpha_bar
  double zeta2_type1 = 0.0;  // zeta1 + 2 alpha / alpha_bar
};

/// Closed form for the two-community scalar example with M even.
Example1Result example1_oracle(std::size_t M, double alpha, double zeta1, double zeta2);

std::string to_json(const StabilityReport& r);

}  // namespace opdyn::stability
