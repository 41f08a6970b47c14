#ifndef PTFLOW_SPECTRAL_HPP
#define PTFLOW_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ptflow/common.hpp"
#include "ptflow/fit.hpp"

namespace ptflow {

/// Right-eigenvector condition number above which a matrix is treated as
/// defective (numerically at an exceptional point).
constexpr double kEpCondThreshold = 1e8;

/// Relative tolerance deciding that an eigenvalue is real.
constexpr double kPhaseTol = 1e-9;

enum class Phase { Unbroken, Broken, Exceptional };

struct PhaseLabel {
  Phase phase;
  double tol;
};

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Unbroken: return "unbroken";
    case Phase::Broken: return "broken";
    default: return "exceptional";
  }
}

/// Biorthogonal spectral data of a dense complex matrix.
///
/// Eigenvalues are sorted by descending imaginary part, ties by descending
/// real part, so index 0 carries the largest growth rate in the broken
/// phase. Right and left columns have unit 2-norm; left/right pairs satisfy
/// <chi_m|phi_n> ~ delta_mn up to the recorded diagonal overlaps.
struct Eigensystem {
  CVec eigenvalues;
  CMat right;      // columns |phi_n>
  CMat left;       // columns |chi_n>
  CMat overlaps;   // overlaps(m, n) = <chi_m|phi_n>
  double cond_eigvec = 0.0;
  double h_norm = 0.0;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

namespace detail {

inline std::vector<Eigen::Index> sort_order(const CVec& ev) {
  std::vector<Eigen::Index> idx(ev.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev(a).imag() != ev(b).imag()) return ev(a).imag() > ev(b).imag();
    return ev(a).real() > ev(b).real();
  });
  return idx;
}

}  // namespace detail

inline Eigensystem eig_biorthogonal(const CMat& H) {
  if (H.rows() != H.cols()) throw BadDimension("eig_biorthogonal: not square");
  require_finite(H, "eig_biorthogonal");
  const Eigen::Index n = H.rows();

  Eigen::ComplexEigenSolver<CMat> right_solver(H, true);
  if (right_solver.info() != Eigen::Success)
    throw Error("eig_biorthogonal: eigensolver failed");

  Eigensystem es;
  es.h_norm = spectral_norm(H);

  const auto order = detail::sort_order(right_solver.eigenvalues());
  es.eigenvalues.resize(n);
  es.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    es.eigenvalues(k) = right_solver.eigenvalues()(order[k]);
    es.right.col(k) = right_solver.eigenvectors().col(order[k]).normalized();
  }

  {
    const auto sv = es.right.jacobiSvd().singularValues();
    es.cond_eigvec = (sv(n - 1) > 0) ? sv(0) / sv(n - 1)
                                     : std::numeric_limits<double>::infinity();
  }
  if (es.cond_eigvec > kEpCondThreshold)
    throw DefectiveMatrix("eig_biorthogonal: eigenvector matrix is singular "
                          "(cond = " + std::to_string(es.cond_eigvec) + ")");

  // Left eigenvectors: right eigenvectors of H^dagger, paired to the right
  // vectors by maximal |<chi|phi>|, ties broken by eigenvalue proximity.
  Eigen::ComplexEigenSolver<CMat> left_solver(H.adjoint(), true);
  if (left_solver.info() != Eigen::Success)
    throw Error("eig_biorthogonal: adjoint eigensolver failed");

  es.left.resize(n, n);
  std::vector<bool> used(n, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = -1;
    double best_overlap = -1.0;
    double best_dist = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double ov =
          std::abs(left_solver.eigenvectors().col(j).dot(es.right.col(k)));
      const double dist =
          std::abs(std::conj(left_solver.eigenvalues()(j)) - es.eigenvalues(k));
      const bool better =
          ov > best_overlap + 1e-12 ||
          (std::abs(ov - best_overlap) <= 1e-12 && dist < best_dist);
      if (best < 0 || better) {
        best = j;
        best_overlap = ov;
        best_dist = dist;
      }
    }
    used[best] = true;
    es.left.col(k) = left_solver.eigenvectors().col(best).normalized();
  }

  // Degenerate-but-diagonalizable clusters: enforce biorthogonality inside
  // each cluster by replacing the left block X with X (Phi^dagger X)^{-1}
  // scaled back to unit columns.
  const double cluster_tol = 1e-8 * std::max(es.h_norm, 1.0);
  Eigen::Index lo = 0;
  while (lo < n) {
    Eigen::Index hi = lo + 1;
    while (hi < n &&
           std::abs(es.eigenvalues(hi) - es.eigenvalues(hi - 1)) <= cluster_tol)
      ++hi;
    const Eigen::Index m = hi - lo;
    if (m > 1) {
      const CMat phi = es.right.middleCols(lo, m);
      CMat x = es.left.middleCols(lo, m);
      const CMat a = x.adjoint() * phi;  // <chi_i|phi_j>
      Eigen::FullPivLU<CMat> lu(a);
      if (!lu.isInvertible())
        throw DefectiveMatrix("eig_biorthogonal: defective degenerate cluster");
      x = x * lu.inverse().adjoint();
      for (Eigen::Index j = 0; j < m; ++j)
        es.left.col(lo + j) = x.col(j).normalized();
    }
    lo = hi;
  }

  es.overlaps = es.left.adjoint() * es.right;
  return es;
}

inline PhaseLabel classify_phase(const Eigensystem& es, double tol = kPhaseTol) {
  if (es.cond_eigvec > kEpCondThreshold) return {Phase::Exceptional, tol};
  const double max_gamma = es.eigenvalues.imag().cwiseAbs().maxCoeff();
  if (max_gamma <= tol * std::max(es.h_norm, 1.0)) return {Phase::Unbroken, tol};
  return {Phase::Broken, tol};
}

/// Total version: a defective eigenproblem classifies as Exceptional.
inline PhaseLabel classify_phase(const CMat& H, double tol = kPhaseTol) {
  try {
    return classify_phase(eig_biorthogonal(H), tol);
  } catch (const DefectiveMatrix&) {
    return {Phase::Exceptional, tol};
  }
}

/// Parameterized Hamiltonian family H(lambda).
using Family = std::function<CMat(double)>;

struct EPOrderEstimate {
  int p = 2;
  double fit_exponent = 0.0;  // ~ 1/p
  double stderr_ = 0.0;
};

/// Minimum pairwise eigenvalue distance (the gap of the coalescing levels
/// once close enough to the exceptional point).
inline double min_eigenvalue_gap(const CMat& H) {
  Eigen::ComplexEigenSolver<CMat> solver(H, false);
  const CVec ev = solver.eigenvalues();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    for (Eigen::Index j = i + 1; j < ev.size(); ++j)
      gap = std::min(gap, std::abs(ev(i) - ev(j)));
  return gap;
}

/// Fits the minimum gap against |Delta lambda| on a log-log scale; the EP
/// order p follows from gap ~ |Delta lambda|^{1/p}.
inline EPOrderEstimate ep_order(const Family& family, double lambda_ep,
                                const std::vector<double>& probe_offsets) {
  if (probe_offsets.size() < 4)
    throw Error("ep_order: need at least 4 probe offsets");
  std::vector<double> logd, logg;
  double gap_at_min = 0, gap_at_max = 0, off_min = 0, off_max = 0;
  bool first = true;
  for (double off : probe_offsets) {
    const double ad = std::abs(off);
    if (ad <= 0) throw Error("ep_order: zero probe offset");
    const double gap = min_eigenvalue_gap(family(lambda_ep + off));
    if (first || ad < off_min) { off_min = ad; gap_at_min = gap; }
    if (first || ad > off_max) { off_max = ad; gap_at_max = gap; }
    first = false;
    if (gap > 0) {
      logd.push_back(std::log(ad));
      logg.push_back(std::log(gap));
    }
  }
  if (off_max / off_min < 10.0)
    throw Error("ep_order: probe offsets must span at least one decade");
  if (!(gap_at_min < 0.5 * gap_at_max))
    throw NoCoalescence("ep_order: minimum gap does not shrink toward the EP");
  const LinearFit f = linear_fit(logd, logg);
  if (f.slope_stderr > 0.1)
    throw FitUnstable("ep_order: stderr = " + std::to_string(f.slope_stderr));
  EPOrderEstimate est;
  est.fit_exponent = f.slope;
  est.stderr_ = f.slope_stderr;
  est.p = std::max(2, int(std::lround(1.0 / f.slope)));
  return est;
}

/// H = s (sigma_x + i a sigma_z).
inline CMat two_level(double s, double a) {
  if (s < 0) throw Error("two_level: s must be non-negative");
  CMat h(2, 2);
  h << I * s * a, s, s, -I * s * a;
  return h;
}

/// Nearest-neighbor chain with hopping J and alternating on-site gain/loss
/// +-i gamma. For odd N the middle site is neutral so that the chain stays
/// PT-symmetric under site reversal with conjugation.
inline CMat gainloss_chain(int n, double j_hop, double gamma) {
  if (n < 2) throw BadDimension("gainloss_chain: N must be >= 2");
  if (j_hop < 0) throw Error("gainloss_chain: J must be non-negative");
  CMat h = CMat::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    h(k, k + 1) = j_hop;
    h(k + 1, k) = j_hop;
  }
  for (int k = 0; k < n; ++k) {
    if (n % 2 == 1 && k == n / 2) continue;
    const int sign = (k % 2 == 0) ? 1 : -1;
    // Mirror the sign pattern in the lower half for odd N.
    const int s = (n % 2 == 1 && k > n / 2) ? -((n - 1 - k) % 2 == 0 ? 1 : -1)
                                            : sign;
    h(k, k) = I * gamma * double(s);
  }
  return h;
}

}  // namespace ptflow

#endif
