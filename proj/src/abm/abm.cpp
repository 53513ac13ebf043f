#include "abm/abm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "common/error.hpp"
#include "meanfield/system.hpp"

namespace opdyn::abm {

std::vector<std::size_t> apportion(std::span<const double> r, std::size_t U) {
  const std::size_t m = r.size();
  std::vector<std::size_t> counts(m);
  std::vector<std::pair<double, std::size_t>> rem(m);
  std::size_t used = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double q = r[i] * static_cast<double>(U);
    counts[i] = static_cast<std::size_t>(std::floor(q));
    used += counts[i];
    rem[i] = {q - std::floor(q), i};
  }
  // Ties go to the lower index so the outcome never depends on sort stability.
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; used < U && k < m; ++k, ++used) ++counts[rem[k].second];
  return counts;
}

Ensemble::Ensemble(const model::Scenario& scn, std::size_t U, std::uint64_t seed, InteractionMode mode)
    : mode_(mode) {
  model::validate(scn);
  if (U < 2) throw ValidationError("U", "at least two agents are required");
  n_ = scn.subjects;
  m_ = scn.personality_count();
  sigma_ = std::sqrt(scn.noise_variance);
  coupling_ = scn.coupling;
  zeta_ = scn.zeta_table();
  alpha_ = scn.stubbornness;
  for (double a : alpha_) alpha_bar_.push_back(1.0 - a);
  prejudice_ = scn.prejudice;

  Vector r;
  for (const auto& p : scn.personalities) r.push_back(p.r);
  counts_ = apportion(r, U);
  for (std::size_t i = 0; i < m_; ++i) labels_.insert(labels_.end(), counts_[i], i);

  x_.assign(U * n_, 0.0);
  rng_.reserve(U);
  normal_.assign(U, std::normal_distribution<double>(0.0, 1.0));
  const auto lo = static_cast<std::uint32_t>(seed & 0xffffffffu);
  const auto hi = static_cast<std::uint32_t>(seed >> 32);
  for (std::size_t a = 0; a < U; ++a) {
    std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
    rng_.emplace_back(seq);
  }

  for (std::size_t a = 0; a < U; ++a) {
    const auto& law = scn.initial[labels_[a]];
    double* xa = x_.data() + a * n_;
    if (const auto* d = std::get_if<model::DiracLaw>(&law)) {
      std::copy(d->x0.begin(), d->x0.end(), xa);
    } else {
      const auto& g = std::get<model::GaussianLaw>(law);
      const auto eig = linalg::symmetric_eigen(g.cov);
      Vector z(n_);
      for (double& v : z) v = normal_[a](rng_[a]);
      for (std::size_t i = 0; i < n_; ++i) {
        double s = g.mean[i];
        for (std::size_t k = 0; k < n_; ++k) s += eig.vectors(i, k) * std::sqrt(std::max(0.0, eig.values[k])) * z[k];
        xa[i] = s;
      }
    }
  }

  const auto sys = meanfield::assemble(scn);
  auto max_modulus = [](const Matrix& a) {
    double best = 0.0;
    for (auto z : linalg::spectrum(a).eigenvalues) best = std::max(best, std::abs(z));
    return best;
  };
  drift_scale_ = max_modulus(sys.Psi);
  for (const auto& xi : sys.Xi) drift_scale_ = std::max(drift_scale_, max_modulus(xi));
}

void Ensemble::step(double dt) {
  const std::size_t U = labels_.size();
  const double inv = 1.0 / static_cast<double>(U - 1);
  const double noise = sigma_ * std::sqrt(dt);
  std::vector<double>& next = next_;
  next.resize(x_.size());
  Vector drift_pre(n_), g(n_);

  if (mode_ == InteractionMode::Aggregated) {
    // Per-personality sums S_k, then b_a = sum_k c_ak S_k + alpha_a u_a and
    // s_a = sum_k c_ak n_k with c_ak = alpha_bar_a zeta_ak / (U - 1).
    std::vector<double> sums(m_ * n_, 0.0);
    for (std::size_t a = 0; a < U; ++a)
      for (std::size_t i = 0; i < n_; ++i) sums[labels_[a] * n_ + i] += x_[a * n_ + i];
    std::vector<double> b(m_ * n_, 0.0), s(m_, 0.0);
    for (std::size_t p = 0; p < m_; ++p) {
      for (std::size_t k = 0; k < m_; ++k) {
        const double c = alpha_bar_[p] * zeta_(p, k) * inv;
        s[p] += c * static_cast<double>(counts_[k]);
        for (std::size_t i = 0; i < n_; ++i) b[p * n_ + i] += c * sums[k * n_ + i];
      }
      for (std::size_t i = 0; i < n_; ++i) b[p * n_ + i] += alpha_[p] * prejudice_[p][i];
    }
    for (std::size_t a = 0; a < U; ++a) {
      const std::size_t p = labels_[a];
      const double* xa = x_.data() + a * n_;
      for (std::size_t i = 0; i < n_; ++i) drift_pre[i] = b[p * n_ + i] - (s[p] + alpha_[p]) * xa[i];
      for (std::size_t i = 0; i < n_; ++i) g[i] = normal_[a](rng_[a]);
      for (std::size_t i = 0; i < n_; ++i) {
        double d = 0.0, e = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
          d += coupling_(i, k) * drift_pre[k];
          e += coupling_(i, k) * g[k];
        }
        next[a * n_ + i] = xa[i] + dt * d + noise * e;
      }
    }
  } else {
    for (std::size_t a = 0; a < U; ++a) {
      const std::size_t p = labels_[a];
      const double* xa = x_.data() + a * n_;
      std::fill(drift_pre.begin(), drift_pre.end(), 0.0);
      for (std::size_t j = 0; j < U; ++j) {
        if (j == a) continue;
        const double c = alpha_bar_[p] * zeta_(p, labels_[j]) * inv;
        for (std::size_t i = 0; i < n_; ++i) drift_pre[i] += c * (x_[j * n_ + i] - xa[i]);
      }
      for (std::size_t i = 0; i < n_; ++i) drift_pre[i] += alpha_[p] * (prejudice_[p][i] - xa[i]);
      for (std::size_t i = 0; i < n_; ++i) g[i] = normal_[a](rng_[a]);
      for (std::size_t i = 0; i < n_; ++i) {
        double d = 0.0, e = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
          d += coupling_(i, k) * drift_pre[k];
          e += coupling_(i, k) * g[k];
        }
        next[a * n_ + i] = xa[i] + dt * d + noise * e;
      }
    }
  }
  x_.swap(next);
  ++steps_;
  t_ = static_cast<double>(steps_) * dt;
}

std::vector<Vector> Ensemble::personality_means() const {
  std::vector<Vector> mean(m_, Vector(n_, 0.0));
  for (std::size_t a = 0; a < labels_.size(); ++a)
    for (std::size_t i = 0; i < n_; ++i) mean[labels_[a]][i] += x_[a * n_ + i];
  for (std::size_t p = 0; p < m_; ++p)
    if (counts_[p] > 0)
      for (double& v : mean[p]) v /= static_cast<double>(counts_[p]);
  return mean;
}

void Ensemble::moments(std::vector<Vector>& mean, std::vector<Matrix>& cov) const {
  mean = personality_means();
  cov.assign(m_, Matrix(n_, n_));
  for (std::size_t a = 0; a < labels_.size(); ++a) {
    const std::size_t p = labels_[a];
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < n_; ++k)
        cov[p](i, k) += (x_[a * n_ + i] - mean[p][i]) * (x_[a * n_ + k] - mean[p][k]);
  }
  for (std::size_t p = 0; p < m_; ++p)
    if (counts_[p] > 1) cov[p] *= 1.0 / static_cast<double>(counts_[p] - 1);
}

Snapshot Ensemble::snapshot() const {
  Snapshot s;
  s.t = t_;
  s.step = steps_;
  s.personality = labels_;
  s.counts = counts_;
  for (std::size_t a = 0; a < labels_.size(); ++a) s.opinions.emplace_back(opinion(a).begin(), opinion(a).end());
  moments(s.mean, s.covariance);
  return s;
}

namespace {

void guard(const Ensemble& ens, double limit) {
  for (std::size_t a = 0; a < ens.size(); ++a)
    for (double v : ens.opinion(a))
      if (!(std::abs(v) <= limit))
        throw NumericalError("agent opinions diverged at step " + std::to_string(ens.steps_taken()),
                             static_cast<long>(ens.steps_taken()));
}

void check_step(const Ensemble& ens, double dt, double bound) {
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  if (dt * ens.drift_scale() >= bound)
    throw ValidationError("dt", "step too large: dt * drift scale = " + std::to_string(dt * ens.drift_scale()) +
                                    " (limit " + std::to_string(bound) + ")");
}

}  // namespace

std::vector<Snapshot> simulate(const model::Scenario& scn, const SimulationOptions& opts) {
  Ensemble ens(scn, opts.U, opts.seed, opts.mode);
  check_step(ens, opts.dt, opts.step_bound);
  if (!(opts.horizon >= 0.0)) throw ValidationError("T", "horizon must be non-negative");
  const auto steps = static_cast<std::size_t>(std::llround(opts.horizon / opts.dt));

  std::vector<std::pair<std::size_t, std::size_t>> wanted;  // (step, request index)
  for (std::size_t k = 0; k < opts.snapshot_times.size(); ++k) {
    const double ts = opts.snapshot_times[k];
    if (!(ts >= 0.0) || ts > opts.horizon + 0.5 * opts.dt)
      throw ValidationError("snapshot_times", "must lie within [0, T]");
    wanted.emplace_back(static_cast<std::size_t>(std::llround(ts / opts.dt)), k);
  }
  std::sort(wanted.begin(), wanted.end());
  std::vector<Snapshot> out(wanted.size());
  std::size_t next = 0;
  auto take = [&] {
    while (next < wanted.size() && wanted[next].first == ens.steps_taken()) out[wanted[next++].second] = ens.snapshot();
  };
  take();
  for (std::size_t s = 0; s < steps; ++s) {
    ens.step(opts.dt);
    guard(ens, opts.divergence_limit);
    take();
  }
  return out;
}

TimeAverage time_average(Ensemble& ens, const TimeAverageOptions& opts, double divergence_limit) {
  check_step(ens, opts.dt, 0.1);
  const auto burn = static_cast<std::size_t>(std::llround(opts.burn_in / opts.dt));
  const auto window = static_cast<std::size_t>(std::llround(opts.window / opts.dt));
  for (std::size_t s = 0; s < burn; ++s) {
    ens.step(opts.dt);
    if (s % 64 == 0) guard(ens, divergence_limit);
  }
  guard(ens, divergence_limit);
  const std::size_t m = ens.counts().size(), n = ens.subjects();
  TimeAverage avg;
  avg.mean.assign(m, Vector(n, 0.0));
  avg.covariance.assign(m, Matrix(n, n));
  const std::size_t every = std::max<std::size_t>(1, opts.sample_every);
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
  for (std::size_t s = 0; s < window; ++s) {
    ens.step(opts.dt);
    if ((s + 1) % every) continue;
    ens.moments(mean, cov);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t i = 0; i < n; ++i) avg.mean[p][i] += mean[p][i];
      avg.covariance[p] += cov[p];
    }
    ++avg.samples;
  }
  guard(ens, divergence_limit);
  if (avg.samples == 0) throw ValidationError("window", "no samples in the averaging window");
  const double inv = 1.0 / static_cast<double>(avg.samples);
  for (std::size_t p = 0; p < m; ++p) {
    for (double& v : avg.mean[p]) v *= inv;
    avg.covariance[p] *= inv;
  }
  return avg;
}

double run_to_stationarity(Ensemble& ens, const StationarityOptions& opts, double divergence_limit) {
  check_step(ens, opts.dt, 0.1);
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.window / opts.dt)));
  auto window_mean = [&] {
    std::vector<Vector> acc;
    for (std::size_t s = 0; s < window; ++s) {
      ens.step(opts.dt);
      const auto m = ens.personality_means();
      if (acc.empty()) acc.assign(m.size(), Vector(m.front().size(), 0.0));
      for (std::size_t p = 0; p < m.size(); ++p)
        for (std::size_t i = 0; i < m[p].size(); ++i) acc[p][i] += m[p][i] / static_cast<double>(window);
    }
    guard(ens, divergence_limit);
    return acc;
  };
  std::vector<Vector> prev = window_mean();
  while (ens.time() < opts.max_time) {
    std::vector<Vector> cur = window_mean();
    double change = 0.0, scale = 1.0;
    for (std::size_t p = 0; p < cur.size(); ++p) {
      change = std::max(change, linalg::max_abs_diff(cur[p], prev[p]));
      scale = std::max(scale, linalg::norm_inf(cur[p]));
    }
    if (change < opts.rel_tol * scale) return ens.time();
    prev = std::move(cur);
  }
  throw NumericalError("ensemble did not become stationary before max_time", static_cast<long>(ens.steps_taken()));
}

Vector empirical_density(const Snapshot& snap, const std::vector<meanfield::Axis>& axes, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("bandwidth", "must be positive");
  if (snap.opinions.empty()) throw ValidationError("snapshot", "no agents in the snapshot");
  const std::size_t n = snap.opinions.front().size();
  if (axes.size() != n) throw ValidationError("grid", "one axis per subject is required");
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.n;
  // Separable kernel: tabulate per-axis factors once.
  std::vector<std::vector<double>> factor(n);
  const std::size_t U = snap.opinions.size();
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth);
  for (std::size_t d = 0; d < n; ++d) {
    factor[d].resize(U * axes[d].n);
    for (std::size_t a = 0; a < U; ++a)
      for (std::size_t k = 0; k < axes[d].n; ++k) {
        const double z = (axes[d].at(k) - snap.opinions[a][d]) / bandwidth;
        factor[d][a * axes[d].n + k] = norm * std::exp(-0.5 * z * z);
      }
  }
  Vector out(total, 0.0);
  std::vector<std::size_t> idx(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t d = 0; d < n; ++d) {
      idx[d] = rest % axes[d].n;
      rest /= axes[d].n;
    }
    double s = 0.0;
    for (std::size_t a = 0; a < U; ++a) {
      double v = 1.0;
      for (std::size_t d = 0; d < n; ++d) v *= factor[d][a * axes[d].n + idx[d]];
      s += v;
    }
    out[flat] = s / static_cast<double>(U);
  }
  return out;
}

}  // namespace opdyn::abm
