#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include "ptflow/dynamics.hpp"
#include "ptflow/embedding.hpp"
#include "test_util.hpp"

using namespace ptflow;
using Catch::Approx;

namespace {

double phase_aligned_distance(const CVec& a, const CVec& b) {
  const Cx ov = a.dot(b);
  const Cx phase = (std::abs(ov) > 0) ? ov / std::abs(ov) : Cx(1.0);
  return (a * phase - b).norm();
}

}  // namespace

TEST_CASE("Hermitian case: trivial extension") {
  const CMat h = two_level(1.0, 0.0);  // sigma_x
  const MetricPair mp = build_metric_pair(h);
  const CVec up{{1.0, 0.0}};
  const ExtendedState x = extend_state(up, mp);
  CHECK(x.squared_norm() == Approx(2.0).margin(1e-12));
  CHECK((x.up - up).norm() < 1e-10);
  CHECK((x.down - up).norm() < 1e-10);
  CHECK(postselect(x, Ancilla::Up).success_probability == Approx(0.5));
  CHECK(postselect(x, Ancilla::Down).success_probability == Approx(0.5));

  const ExtendedHamiltonian eh = extended_hamiltonian(h, mp);
  CHECK(eh.v.norm() < 1e-10);
  CHECK((eh.h_s - h).norm() < 1e-10);
}

TEST_CASE("extended norm is c <psi|eta|psi>") {
  const CMat h = two_level(1.0, 0.6);
  const MetricPair mp = build_metric_pair(h);
  const CVec up{{1.0, 0.0}};
  const ExtendedState x = extend_state(up, mp);
  CHECK(x.squared_norm() == Approx(3.125).margin(1e-10));  // 2.5 * 1/0.8
  CHECK(postselect(x, Ancilla::Up).success_probability ==
        Approx(0.32).margin(1e-10));
  for (int k = 0; k < 10; ++k) {
    const CVec psi = test::random_state(2);
    const ExtendedState y = extend_state(psi, mp);
    const double q = (psi.adjoint() * mp.eta * psi)(0).real();
    CHECK(y.squared_norm() == Approx(mp.c * q).margin(1e-9));
  }
}

TEST_CASE("extended Hamiltonian satisfies its defining equations") {
  for (const CMat& h : {two_level(1.0, 0.6), gainloss_chain(3, 1.0, 0.5),
                        gainloss_chain(4, 1.0, 0.5)}) {
    const MetricPair mp = build_metric_pair(h);
    const ExtendedHamiltonian eh = extended_hamiltonian(h, mp);
    const double scale = std::max(1.0, spectral_norm(h));
    CHECK(is_hermitian(eh.h_s, 1e-10 * scale));
    CHECK(is_hermitian(eh.v, 1e-10 * scale));
    CHECK((eh.h_tot - eh.h_tot.adjoint()).norm() <= 1e-10 * eh.h_tot.norm());
    CHECK((eh.h_s - I * eh.v * mp.zeta_sqrt - h).norm() <= 1e-9 * scale);
    CHECK((eh.h_s + I * eh.v * mp.zeta_inv_sqrt -
           mp.zeta_sqrt * h * mp.zeta_inv_sqrt)
              .norm() <= 1e-9 * scale);
  }
}

TEST_CASE("two-level reduction of H_S and V") {
  for (double a = 0.1; a < 0.95; a += 0.1) {
    const CMat h = two_level(1.0, a);
    const MetricPair mp = build_metric_pair(h);
    const ExtendedHamiltonian eh = extended_hamiltonian(h, mp);
    const CMat v_ref = I / mp.c * (h - h.adjoint());
    const CMat hs_ref = (h * mp.eta.inverse() + mp.eta * h) / mp.c;
    CHECK((eh.v - v_ref).norm() <= 1e-9);
    CHECK((eh.h_s - hs_ref).norm() <= 1e-9);
  }
}

TEST_CASE("extended evolution is unitary and consistent with PT dynamics") {
  const CMat h = two_level(1.0, 0.75);
  const MetricPair mp = build_metric_pair(h);
  const ExtendedHamiltonian eh = extended_hamiltonian(h, mp);
  const CVec psi0{{1.0, 0.0}};
  const ExtendedState x0 = extend_state(psi0, mp);

  const ExtendedState same = evolve_extended(eh, x0, 0.0);
  CHECK((same.packed() - x0.packed()).norm() < 1e-12);

  for (double t : {1.0, 5.0, 10.0}) {
    const ExtendedState xt = evolve_extended(eh, x0, t);
    CHECK(std::sqrt(xt.squared_norm()) ==
          Approx(std::sqrt(x0.squared_norm())).margin(1e-9));
  }

  for (int k = 0; k < 50; ++k) {
    const double t = 10.0 * (k + 1) / 50.0;
    const ExtendedState xt = evolve_extended(eh, x0, t);
    const CVec direct = ((-I * t * h).exp() * psi0).normalized();
    CHECK(phase_aligned_distance(postselect(xt, Ancilla::Up).state, direct) <=
          1e-8);
    // Down branch obeys zeta^{1/2} H zeta^{-1/2}.
    const CMat h_down = mp.zeta_sqrt * h * mp.zeta_inv_sqrt;
    const CVec down_ref =
        ((-I * t * h_down).exp() * (mp.zeta_sqrt * psi0)).normalized();
    CHECK(phase_aligned_distance(postselect(xt, Ancilla::Down).state,
                                 down_ref) <= 1e-8);
    // Norm invariant along the trajectory.
    const CVec psit = (-I * t * h).exp() * psi0;
    const double q = (psit.adjoint() * mp.eta * psit)(0).real();
    CHECK(std::abs(xt.squared_norm() - mp.c * q) <= 1e-9);
  }
}

TEST_CASE("postselection errors and EP limit") {
  const MetricPair mp = build_metric_pair(two_level(1.0, 0.5));
  ExtendedState zero{CVec::Zero(2), CVec::Zero(2)};
  CHECK_THROWS_AS(postselect(zero, Ancilla::Up), ZeroBranch);

  double prev = 1.0;
  for (double a : {0.5, 0.9, 0.99, 0.999}) {
    const MetricPair m = build_metric_pair(two_level(1.0, a));
    const ExtendedState x = extend_state(CVec{{1.0, 0.0}}, m);
    const double p = postselect(x, Ancilla::Up).success_probability;
    CHECK(p < prev);  // p(up) -> 0 toward the EP
    prev = p;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("entanglement entropy limits") {
  ExtendedState product{CVec{{1.0, 0.0}}, CVec::Zero(2)};
  CHECK(entanglement_entropy(product) == Approx(0.0).margin(1e-12));
  ExtendedState bell{CVec{{1.0, 0.0}}, CVec{{0.0, 1.0}}};
  CHECK(entanglement_entropy(bell) == Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("entanglement oscillates with period T_E = T/2") {
  for (double a : {0.25, 0.5, 0.75}) {
    const CMat h = two_level(1.0, a);
    const MetricPair mp = build_metric_pair(h);
    const ExtendedHamiltonian eh = extended_hamiltonian(h, mp);
    const ExtendedState x0 = extend_state(CVec{{1.0, 0.0}}, mp);

    const double te_ref = M_PI / (2.0 * std::sqrt(1.0 - a * a));
    // S(0) is not an extremum of the oscillation, so first-return times do
    // not measure the period; use the spacing of successive maxima instead.
    const int n = 4000;
    const double t_max = 3.0 * te_ref;
    std::vector<double> ts(n), ss(n);
    for (int k = 0; k < n; ++k) {
      ts[k] = t_max * k / (n - 1);
      ss[k] = entanglement_entropy(evolve_extended(eh, x0, ts[k]));
    }
    std::vector<double> peaks;
    for (int k = 1; k + 1 < n; ++k)
      if (ss[k] >= ss[k - 1] && ss[k] > ss[k + 1])
        peaks.push_back(parabola_vertex(ts[k], ts[1] - ts[0], ss[k - 1],
                                        ss[k], ss[k + 1]));
    REQUIRE(peaks.size() >= 2);
    const double t_period =
        (peaks.back() - peaks.front()) / double(peaks.size() - 1);
    CHECK(t_period == Approx(te_ref).epsilon(0.01));

    // T_E is one half of the distinguishability period T.
    const auto series = distinguishability_series(
        h, DensityMatrix::pure(CVec{{1.0, 0.0}}),
        DensityMatrix::pure(CVec{{0.0, 1.0}}),
        3.0 * M_PI / std::sqrt(1.0 - a * a), 2000);
    const double t_rec = recurrence_time(series).value;
    CHECK(t_period == Approx(0.5 * t_rec).epsilon(0.01));
  }
}
