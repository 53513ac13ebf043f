#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "meanfield/density.hpp"
#include "model/scenario.hpp"

namespace opdyn::abm {

using linalg::Matrix;
using linalg::Vector;

/// Largest-remainder apportionment of U agents over masses r.
std::vector<std::size_t> apportion(std::span<const double> r, std::size_t U);

struct Snapshot {
  double t = 0.0;
  std::size_t step = 0;
  std::vector<std::size_t> personality;  // per agent
  std::vector<Vector> opinions;          // per agent
  std::vector<std::size_t> counts;       // per personality
  std::vector<Vector> mean;              // per personality sample mean
  std::vector<Matrix> covariance;        // per personality sample covariance (n - 1 normalization)
};

enum class InteractionMode { Aggregated, Pairwise };

/// Finite population evolved by Euler-Maruyama. Agent a owns the generator
/// seeded with (seed, a), so a run is reproducible bit for bit.
class Ensemble {
 public:
  Ensemble(const model::Scenario& scn, std::size_t U, std::uint64_t seed,
           InteractionMode mode = InteractionMode::Aggregated);

  void step(double dt);
  double time() const { return t_; }
  std::size_t steps_taken() const { return steps_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t subjects() const { return n_; }
  std::size_t label(std::size_t agent) const { return labels_[agent]; }
  std::span<const double> opinion(std::size_t agent) const { return {x_.data() + agent * n_, n_}; }
  const std::vector<std::size_t>& counts() const { return counts_; }

  /// Per-personality sample means, without building a full snapshot.
  std::vector<Vector> personality_means() const;
  /// Per-personality sample means and covariances (n - 1 normalization) only.
  void moments(std::vector<Vector>& mean, std::vector<Matrix>& cov) const;
  Snapshot snapshot() const;

  /// Largest |eigenvalue| among the agent and collective drift matrices.
  double drift_scale() const { return drift_scale_; }

 private:
  std::size_t n_ = 0, m_ = 0;
  double sigma_ = 0.0;
  Matrix coupling_;
  Matrix zeta_;
  Vector alpha_, alpha_bar_;
  std::vector<Vector> prejudice_;
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> counts_;
  std::vector<double> x_;
  std::vector<std::mt19937_64> rng_;
  std::vector<std::normal_distribution<double>> normal_;
  InteractionMode mode_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
  double drift_scale_ = 0.0;
  std::vector<double> next_;
};

struct SimulationOptions {
  std::size_t U = 500;
  double dt = 1e-2;
  double horizon = 1.0;
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times;
  InteractionMode mode = InteractionMode::Aggregated;
  double divergence_limit = 1e9;
  /// dt times the drift scale must stay below this.
  double step_bound = 0.1;
};

/// Runs to the horizon and returns one snapshot per requested time (rounded to
/// the step grid). Throws NumericalError carrying the step index on divergence.
std::vector<Snapshot> simulate(const model::Scenario& scn, const SimulationOptions& opts);

struct TimeAverageOptions {
  double burn_in = 0.0;
  double window = 10.0;
  double dt = 1e-2;
  std::size_t sample_every = 1;
};

struct TimeAverage {
  std::vector<Vector> mean;        // per personality
  std::vector<Matrix> covariance;  // per personality
  std::size_t samples = 0;
};

/// Ergodic averages of the per-personality sample moments over [burn_in, burn_in + window].
TimeAverage time_average(Ensemble& ens, const TimeAverageOptions& opts, double divergence_limit = 1e9);

struct StationarityOptions {
  double dt = 1e-2;
  double window = 10.0;
  double rel_tol = 1e-4;
  double max_time = 1e5;
};

/// Steps until the per-personality means move by less than rel_tol (relative to
/// their magnitude, floored at 1) between consecutive windows. Returns the
/// time reached; throws NumericalError when max_time passes first.
double run_to_stationarity(Ensemble& ens, const StationarityOptions& opts, double divergence_limit = 1e9);

/// Isotropic Gaussian kernel density estimate over the grid (first axis fastest).
Vector empirical_density(const Snapshot& snap, const std::vector<meanfield::Axis>& axes, double bandwidth);

}  // namespace opdyn::abm
