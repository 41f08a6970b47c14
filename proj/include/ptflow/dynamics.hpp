#ifndef PTFLOW_DYNAMICS_HPP
#define PTFLOW_DYNAMICS_HPP

#include <cmath>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "ptflow/common.hpp"
#include "ptflow/fit.hpp"
#include "ptflow/spectral.hpp"

namespace ptflow {

/// Hermitian, unit-trace, positive-semidefinite state.
struct DensityMatrix {
  CMat mat;

  Eigen::Index dim() const { return mat.rows(); }

  static DensityMatrix from_matrix(const CMat& m) {
    if (m.rows() != m.cols()) throw BadDimension("DensityMatrix: not square");
    require_finite(m, "DensityMatrix");
    if (!is_hermitian(m, 1e-12 * std::max(m.norm(), 1.0)))
      throw Error("DensityMatrix: not Hermitian");
    if (std::abs(m.trace() - Cx(1.0)) > 1e-12)
      throw Error("DensityMatrix: trace != 1");
    Eigen::SelfAdjointEigenSolver<CMat> s(m, Eigen::EigenvaluesOnly);
    if (s.eigenvalues().minCoeff() < -1e-10)
      throw Error("DensityMatrix: negative eigenvalue");
    return DensityMatrix{m};
  }

  static DensityMatrix pure(const CVec& psi) {
    const double nrm = psi.norm();
    if (nrm <= 0) throw Error("DensityMatrix::pure: zero vector");
    const CVec v = psi / nrm;
    return DensityMatrix{v * v.adjoint()};
  }
};

/// rho(t) = e^{-iHt} rho0 e^{iH^t} / tr[...]. The matrix exponential is
/// Pade scaling-and-squaring, so this remains valid for defective H at an
/// exceptional point.
inline DensityMatrix evolve(const CMat& H, const DensityMatrix& rho0,
                            double t) {
  if (H.rows() != rho0.dim()) throw DimensionMismatch("evolve: dim mismatch");
  if (t < 0) throw Error("evolve: t must be non-negative");
  const CMat u = (-I * t * H).exp();
  CMat m = u * rho0.mat * u.adjoint();
  const double tr = m.trace().real();
  if (!(tr > 1e-300) || !m.allFinite())
    throw NormalizationUnderflow("evolve: trace denominator underflow");
  m /= tr;
  return DensityMatrix{hermitize(m)};
}

/// Evolution through the spectral decomposition; agrees with evolve() away
/// from exceptional points and is used as a cross-check.
inline DensityMatrix evolve_spectral(const Eigensystem& es,
                                     const DensityMatrix& rho0, double t) {
  if (es.dim() != rho0.dim())
    throw DimensionMismatch("evolve_spectral: dim mismatch");
  const Eigen::Index n = es.dim();
  // e^{-iHt} = sum_n e^{-iE_n t} |phi_n><chi_n| / <chi_n|phi_n>
  CMat u = CMat::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Cx d = es.overlaps(k, k);
    if (std::abs(d) < 1.0 / kEpCondThreshold)
      throw DefectiveMatrix("evolve_spectral: vanishing biorthogonal overlap");
    u += std::exp(-I * es.eigenvalues(k) * t) / d *
         (es.right.col(k) * es.left.col(k).adjoint());
  }
  CMat m = u * rho0.mat * u.adjoint();
  const double tr = m.trace().real();
  if (!(tr > 1e-300) || !m.allFinite())
    throw NormalizationUnderflow("evolve_spectral: trace underflow");
  m /= tr;
  return DensityMatrix{hermitize(m)};
}

/// D = (1/2) sum_i |mu_i| over eigenvalues of the Hermitian difference.
inline double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.dim() != r2.dim())
    throw DimensionMismatch("trace_distance: dim mismatch");
  Eigen::SelfAdjointEigenSolver<CMat> s(r1.mat - r2.mat,
                                        Eigen::EigenvaluesOnly);
  const double d = 0.5 * s.eigenvalues().cwiseAbs().sum();
  return std::min(d, 1.0);
}

struct DistinguishabilitySeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string meta;

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// D(t_k) on a uniform grid of `steps` points covering [0, t_max].
inline DistinguishabilitySeries distinguishability_series(
    const CMat& H, const DensityMatrix& rho1, const DensityMatrix& rho2,
    double t_max, int steps, unsigned threads = 1) {
  if (steps < 2) throw Error("distinguishability_series: steps must be >= 2");
  if (!(t_max > 0)) throw Error("distinguishability_series: t_max must be > 0");
  DistinguishabilitySeries s;
  s.times.resize(steps);
  s.values.resize(steps);
  parallel_for(std::size_t(steps), threads, [&](std::size_t k) {
    const double t = t_max * double(k) / double(steps - 1);
    s.times[k] = t;
    s.values[k] =
        trace_distance(evolve(H, rho1, t), evolve(H, rho2, t));
  });
  return s;
}

enum class TimescaleKind { Recurrence, Relaxation, TailExponent };

struct TimescaleResult {
  TimescaleKind kind;
  double value = 0.0;
  double stderr_ = 0.0;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
};

/// First t > 0 with |D(t) - D(0)| < eps after D has departed by more than
/// 10*eps. The grid hit is refined by a quadratic vertex fit on
/// sqrt(|D - D(0)|), which stays accurate for the quartic touch typical of
/// trace-distance recurrences.
inline TimescaleResult recurrence_time(const DistinguishabilitySeries& s,
                                       double eps = 1e-6) {
  const std::size_t n = s.times.size();
  if (n < 3) throw Error("recurrence_time: series too short");
  const double d0 = s.values[0];
  // D returns to D(0) through a tangential touch, so |D - D(0)| can stay
  // above eps on every grid point even for a genuine recurrence. Examine each
  // local minimum of g = sqrt(|D - D(0)|) (a parabola near a touch), refine
  // it by parabolic interpolation, and accept when the interpolated minimum
  // of |D - D(0)| drops below eps.
  bool departed = false;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (!departed) {
      if (std::abs(s.values[k] - d0) > 10.0 * eps) departed = true;
      continue;
    }
    const double gm = std::sqrt(std::abs(s.values[k - 1] - d0));
    const double g0 = std::sqrt(std::abs(s.values[k] - d0));
    const double gp = std::sqrt(std::abs(s.values[k + 1] - d0));
    if (g0 > gm || g0 > gp) continue;  // not a local minimum
    const double h = s.times[k + 1] - s.times[k];
    double t = s.times[k];
    double gmin = g0;
    const double denom = gm - 2.0 * g0 + gp;
    if (denom > 0) {
      t = parabola_vertex(s.times[k], h, gm, g0, gp);
      gmin = g0 - (gm - gp) * (gm - gp) / (8.0 * denom);
    }
    if (gmin * gmin < eps)
      return {TimescaleKind::Recurrence, t, s.dt(), 0.0, s.times.back()};
  }
  throw NoRecurrence("recurrence_time: no return within the series");
}

/// Relaxation time from a log-linear fit over the final tail_fraction of
/// the series.
inline TimescaleResult relaxation_time(const DistinguishabilitySeries& s,
                                       double tail_fraction = 0.5) {
  const std::size_t n = s.times.size();
  if (!(tail_fraction > 0) || tail_fraction > 1)
    throw Error("relaxation_time: tail_fraction in (0, 1] required");
  const std::size_t start = std::size_t(double(n) * (1.0 - tail_fraction));
  std::vector<double> x, y;
  for (std::size_t k = start; k < n; ++k) {
    if (!(s.values[k] > 0))
      throw NonExponentialTail("relaxation_time: non-positive tail value");
    x.push_back(s.times[k]);
    y.push_back(std::log(s.values[k]));
  }
  const LinearFit f = linear_fit(x, y);
  if (f.r_squared < 0.99)
    throw NonExponentialTail("relaxation_time: R^2 = " +
                             std::to_string(f.r_squared));
  if (!(f.slope < 0))
    throw NonExponentialTail("relaxation_time: tail is not decaying");
  const double tau = -1.0 / f.slope;
  return {TimescaleKind::Relaxation, tau,
          f.slope_stderr * tau * tau, x.front(), x.back()};
}

/// Tail exponent delta of D ~ t^{-delta} from a log-log fit over
/// [t_lo, t_hi].
inline TimescaleResult tail_exponent(const DistinguishabilitySeries& s,
                                     double t_lo, double t_hi) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    if (s.times[k] < t_lo || s.times[k] > t_hi) continue;
    if (!(s.values[k] > 0)) continue;
    x.push_back(std::log(s.times[k]));
    y.push_back(std::log(s.values[k]));
  }
  if (x.size() < 5) throw Error("tail_exponent: too few points in window");
  const LinearFit f = linear_fit(x, y);
  if (f.slope_stderr > 0.1)
    throw FitUnstable("tail_exponent: stderr = " +
                      std::to_string(f.slope_stderr));
  return {TimescaleKind::TailExponent, -f.slope, f.slope_stderr, t_lo, t_hi};
}

/// Default window: the last temporal decade of the series.
inline TimescaleResult tail_exponent(const DistinguishabilitySeries& s) {
  if (s.times.empty()) throw Error("tail_exponent: empty series");
  const double t_hi = s.times.back();
  return tail_exponent(s, t_hi / 10.0, t_hi);
}

/// Spectral recurrence estimate 2*pi / min_gap for commensurability checks;
/// complements the operational recurrence_time.
inline double spectral_recurrence_estimate(const Eigensystem& es) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.dim(); ++i)
    for (Eigen::Index j = i + 1; j < es.dim(); ++j)
      gap = std::min(gap, std::abs(es.eigenvalues(i) - es.eigenvalues(j)));
  if (!(gap > 0) || !std::isfinite(gap))
    throw NoRecurrence("spectral_recurrence_estimate: degenerate spectrum");
  return 2.0 * M_PI / gap;
}

}  // namespace ptflow

#endif
