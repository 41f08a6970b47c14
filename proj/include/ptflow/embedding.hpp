#ifndef PTFLOW_EMBEDDING_HPP
#define PTFLOW_EMBEDDING_HPP

#include <cmath>
#include <utility>

#include "ptflow/common.hpp"
#include "ptflow/metric.hpp"

namespace ptflow {

enum class Ancilla { Up, Down };

/// 2N-dimensional entangled dilation of a PT state: |up> branch carries
/// |psi_PT>, |down> carries zeta^{1/2}|psi_PT>. Packed layout is
/// ancilla-major (|up> block first).
struct ExtendedState {
  CVec up;
  CVec down;

  Eigen::Index dim() const { return up.size(); }

  CVec packed() const {
    CVec v(2 * dim());
    v.head(dim()) = up;
    v.tail(dim()) = down;
    return v;
  }

  static ExtendedState from_packed(const CVec& v) {
    const Eigen::Index n = v.size() / 2;
    return {v.head(n), v.tail(n)};
  }

  double squared_norm() const { return up.squaredNorm() + down.squaredNorm(); }
};

inline ExtendedState extend_state(const CVec& psi, const MetricPair& mp) {
  if (psi.size() != mp.dim())
    throw DimensionMismatch("extend_state: dim mismatch");
  if (!(psi.norm() > 0)) throw Error("extend_state: zero state");
  return {psi, mp.zeta_sqrt * psi};
}

/// Hermitian generator of the dilated dynamics:
/// H_tot = I_2 (x) H_S + sigma_y (x) V with sigma_y = [[0, -i], [i, 0]].
struct ExtendedHamiltonian {
  CMat h_s;
  CMat v;
  CMat h_tot;

  Eigen::Index dim() const { return h_s.rows(); }
};

inline ExtendedHamiltonian extended_hamiltonian(const CMat& H,
                                                const MetricPair& mp) {
  if (H.rows() != mp.dim())
    throw DimensionMismatch("extended_hamiltonian: dim mismatch");
  const CMat& zs = mp.zeta_sqrt;
  const CMat& zis = mp.zeta_inv_sqrt;
  const CMat denom_inv = (zs + zis).inverse();

  ExtendedHamiltonian eh;
  eh.h_s = hermitize((H * zis + zs * H) * denom_inv);
  eh.v = hermitize(I * (H - zs * H * zis) * denom_inv);

  const Eigen::Index n = H.rows();
  eh.h_tot = CMat::Zero(2 * n, 2 * n);
  eh.h_tot.topLeftCorner(n, n) = eh.h_s;
  eh.h_tot.bottomRightCorner(n, n) = eh.h_s;
  eh.h_tot.topRightCorner(n, n) = -I * eh.v;
  eh.h_tot.bottomLeftCorner(n, n) = I * eh.v;
  return eh;
}

/// Psi(t) = e^{-i H_tot t} Psi0 through the unitary spectral propagator, so
/// the extended norm is conserved to machine precision.
inline ExtendedState evolve_extended(const ExtendedHamiltonian& eh,
                                     const ExtendedState& psi0, double t) {
  if (eh.dim() != psi0.dim())
    throw DimensionMismatch("evolve_extended: dim mismatch");
  if (t < 0) throw Error("evolve_extended: t must be non-negative");
  Eigen::SelfAdjointEigenSolver<CMat> s(eh.h_tot);
  const CVec phases =
      (-I * t * s.eigenvalues().cast<Cx>()).array().exp();
  const CVec v = s.eigenvectors() *
                 (phases.asDiagonal() *
                  (s.eigenvectors().adjoint() * psi0.packed()));
  return ExtendedState::from_packed(v);
}

struct Postselection {
  CVec state;  // normalized branch state
  double success_probability = 0.0;
};

inline Postselection postselect(const ExtendedState& psi, Ancilla branch) {
  const CVec& b = (branch == Ancilla::Up) ? psi.up : psi.down;
  const double nb2 = b.squaredNorm();
  const double tot = psi.squared_norm();
  if (!(nb2 > 0) || !(tot > 0)) throw ZeroBranch("postselect: empty branch");
  return {b / std::sqrt(nb2), nb2 / tot};
}

/// Von Neumann entropy (nats) of the reduced two-level ancilla state of the
/// normalized extended state; lies in [0, ln 2].
inline double entanglement_entropy(const ExtendedState& psi) {
  const double tot = psi.squared_norm();
  if (!(tot > 0)) throw Error("entanglement_entropy: zero state");
  Eigen::Matrix2cd rho_a;
  rho_a(0, 0) = psi.up.squaredNorm() / tot;
  rho_a(1, 1) = psi.down.squaredNorm() / tot;
  rho_a(0, 1) = psi.down.dot(psi.up) / tot;  // <down|up>
  rho_a(1, 0) = std::conj(rho_a(0, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> s(rho_a,
                                                    Eigen::EigenvaluesOnly);
  double entropy = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double p = s.eigenvalues()(k);
    if (p > 1e-15) entropy -= p * std::log(p);
  }
  return entropy;
}

}  // namespace ptflow

#endif
