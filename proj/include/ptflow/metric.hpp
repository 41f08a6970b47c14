#ifndef PTFLOW_METRIC_HPP
#define PTFLOW_METRIC_HPP

#include <cmath>

#include "ptflow/common.hpp"
#include "ptflow/spectral.hpp"

namespace ptflow {

/// Refuse metric construction beyond this condition number of eta; the
/// downstream dilation is numerically meaningless that close to the EP.
constexpr double kMetricCondLimit = 1e12;

/// Principal square root of a Hermitian positive definite matrix.
inline CMat herm_sqrt(const CMat& m) {
  if (!is_hermitian(m, 1e-10 * std::max(m.norm(), 1.0)))
    throw NotPositiveDefinite("herm_sqrt: not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> s(m);
  if (s.eigenvalues().minCoeff() <= 0)
    throw NotPositiveDefinite("herm_sqrt: non-positive eigenvalue");
  return s.eigenvectors() *
         s.eigenvalues().cwiseSqrt().asDiagonal() *
         s.eigenvectors().adjoint();
}

inline CMat herm_inv_sqrt(const CMat& m) {
  if (!is_hermitian(m, 1e-10 * std::max(m.norm(), 1.0)))
    throw NotPositiveDefinite("herm_inv_sqrt: not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> s(m);
  if (s.eigenvalues().minCoeff() <= 0)
    throw NotPositiveDefinite("herm_inv_sqrt: non-positive eigenvalue");
  return s.eigenvectors() *
         s.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         s.eigenvectors().adjoint();
}

/// Pseudo-Hermiticity metric eta with eta H = H^dagger eta, built from the
/// rescaled left eigenvectors and normalized to unit determinant (the gauge
/// in which the two-level identity zeta^{1/2} = eta holds exactly).
inline CMat metric_eta(const Eigensystem& es) {
  if (classify_phase(es).phase != Phase::Unbroken)
    throw BrokenPhase("metric_eta: spectrum is not real");
  const Eigen::Index n = es.dim();
  CMat eta = CMat::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Cx d = es.overlaps(k, k);
    if (std::abs(d) < 1.0 / kEpCondThreshold)
      throw DefectiveMatrix("metric_eta: vanishing biorthogonal overlap");
    const CVec chi = es.left.col(k) / std::conj(d);
    eta += chi * chi.adjoint();
  }
  eta = hermitize(eta);
  const double det = eta.determinant().real();
  if (!(det > 0)) throw BrokenPhase("metric_eta: metric is not positive");
  eta /= std::pow(det, 1.0 / double(n));

  Eigen::SelfAdjointEigenSolver<CMat> s(eta, Eigen::EigenvaluesOnly);
  const double lmin = s.eigenvalues().minCoeff();
  const double lmax = s.eigenvalues().maxCoeff();
  if (!(lmin > 0)) throw BrokenPhase("metric_eta: metric is not positive");
  if (lmax / lmin > kMetricCondLimit)
    throw NearEP("metric_eta: cond(eta) = " + std::to_string(lmax / lmin));
  return eta;
}

/// eta together with c = sum_i 1/lambda_i, zeta = c*eta - I, and the
/// principal root zeta^{1/2} feeding the dilation.
struct MetricPair {
  CMat eta;
  double c = 0.0;
  CMat zeta;
  CMat zeta_sqrt;
  CMat zeta_inv_sqrt;

  Eigen::Index dim() const { return eta.rows(); }
};

inline MetricPair build_metric_pair(const Eigensystem& es) {
  MetricPair mp;
  mp.eta = metric_eta(es);
  Eigen::SelfAdjointEigenSolver<CMat> s(mp.eta, Eigen::EigenvaluesOnly);
  mp.c = s.eigenvalues().cwiseInverse().sum();
  mp.zeta = hermitize(mp.c * mp.eta - CMat::Identity(es.dim(), es.dim()));
  Eigen::SelfAdjointEigenSolver<CMat> sz(mp.zeta, Eigen::EigenvaluesOnly);
  if (sz.eigenvalues().minCoeff() <= 0)
    throw NotPositive("build_metric_pair: zeta has a non-positive eigenvalue");
  mp.zeta_sqrt = herm_sqrt(mp.zeta);
  mp.zeta_inv_sqrt = herm_inv_sqrt(mp.zeta);
  return mp;
}

inline MetricPair build_metric_pair(const CMat& H) {
  return build_metric_pair(eig_biorthogonal(H));
}

}  // namespace ptflow

#endif
