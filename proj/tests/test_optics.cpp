#include <catch2/catch_amalgamated.hpp>

#include "ptflow/fit.hpp"
#include "ptflow/optics.hpp"

using namespace ptflow;
using Catch::Approx;

namespace {

OpticsConfig small_config() {
  OpticsConfig cfg;
  cfg.length = 64.0 * M_PI;
  cfg.n = 2048;
  cfg.z_max = 50.0;
  return cfg;
}

double beam_norm(const BeamState& b) {
  return std::sqrt(beam_inner(b, b).real());
}

/// Second-moment width of an amplitude profile exp(-x^2/w^2): the intensity
/// is exp(-2x^2/w^2) with variance w^2/4, so w^2 = 4 <x^2>.
double gaussian_width(const BeamState& b) {
  double m0 = 0.0, m2 = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double p = std::norm(b.field(j));
    m0 += p;
    m2 += p * b.x(j) * b.x(j);
  }
  return std::sqrt(4.0 * m2 / m0);
}

}  // namespace

TEST_CASE("config validation") {
  OpticsConfig cfg = small_config();
  cfg.n = 1000;  // not a power of two
  CHECK_THROWS_AS(cfg.validate(), BadDimension);
  cfg = small_config();
  cfg.length = 10.0;  // not a multiple of the period
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.dz = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("make_gaussian rejects unresolvable widths") {
  OpticsConfig cfg = small_config();
  CHECK_THROWS_AS(make_gaussian(cfg, {0.1, 0.0, -1.0}), GridTooCoarse);
  CHECK_THROWS_AS(make_gaussian(cfg, {-1.0, 0.0, -1.0}), Error);
}

TEST_CASE("free diffraction follows the analytic spreading law") {
  OpticsConfig cfg = small_config();
  cfg.v0 = 0.0;
  const double w0 = 6.0 * M_PI;
  BeamState b = make_gaussian(cfg, {w0, 0.0, 0.0});
  CHECK(gaussian_width(b) == Approx(w0).epsilon(1e-8));
  SplitStepPropagator prop(cfg);
  for (double z : {2.0, 5.0, 10.0}) {
    const int steps = int(std::round(z / cfg.dz)) -
                      int(std::round(b.z / cfg.dz));
    b = prop.propagate(b, steps);
    const double ref = w0 * std::sqrt(1.0 + std::pow(4.0 * z / (w0 * w0), 2));
    CHECK(std::abs(gaussian_width(b) - ref) / ref < 1e-6);
  }
}

TEST_CASE("Hermitian potential conserves the norm and D") {
  OpticsConfig cfg = small_config();
  cfg.lam = 0.0;
  BeamState b1 = make_gaussian(cfg, {6.0 * M_PI, 0.0, -1.0});
  BeamState b2 = make_gaussian(cfg, {3.0 * M_PI, 5.0, -1.0});
  const double n0 = beam_inner(b1, b1).real();
  const double d0 = optics_distinguishability(b1, b2);
  SplitStepPropagator p1(cfg), p2(cfg);
  for (int k = 0; k < 5; ++k) {
    b1 = p1.propagate(b1, 1000);  // z advances by 10 per block
    b2 = p2.propagate(b2, 1000);
    CHECK(std::abs(beam_inner(b1, b1).real() - n0) / n0 < 1e-8);
    CHECK(std::abs(optics_distinguishability(b1, b2) - d0) < 1e-7);
  }
}

TEST_CASE("distinguishability basics") {
  OpticsConfig cfg = small_config();
  const BeamState a = make_gaussian(cfg, {6.0 * M_PI, 0.0, -1.0});
  CHECK(optics_distinguishability(a, a) == Approx(0.0).margin(1e-12));
  const BeamState c = make_gaussian(cfg, {2.0, -40.0, -1.0});
  const BeamState d = make_gaussian(cfg, {2.0, 40.0, -1.0});
  CHECK(optics_distinguishability(c, d) == Approx(1.0).margin(1e-9));
  OpticsConfig other = small_config();
  other.n = 1024;
  const BeamState e = make_gaussian(other, {6.0 * M_PI, 0.0, -1.0});
  CHECK_THROWS_AS(beam_inner(a, e), GridMismatch);
  SplitStepPropagator prop(cfg);
  CHECK_THROWS_AS(prop.propagate(e, 1), GridMismatch);
}

TEST_CASE("EP norm growth is asymptotically linear for k0 = -1") {
  OpticsConfig cfg = small_config();
  cfg.z_max = 400.0;
  BeamState b = make_gaussian(cfg, {6.0 * M_PI, 0.0, -1.0});
  SplitStepPropagator prop(cfg);
  std::vector<double> zs, ns;
  for (int k = 0; k < 40; ++k) {
    b = prop.propagate(b, 1000);  // dz * 1000 = 10
    if (b.z > 100.0) {
      zs.push_back(b.z);
      ns.push_back(beam_norm(b));
    }
  }
  const LinearFit f = linear_fit(zs, ns);
  CHECK(f.r_squared > 0.9999);  // linear growth of the norm with z
  CHECK(f.slope > 0.0);
}

TEST_CASE("unbroken potential: D returns close to its initial value") {
  OpticsConfig cfg = small_config();
  cfg.lam = 0.5;
  BeamState b1 = make_gaussian(cfg, {6.0 * M_PI, 10.0, -1.0});
  BeamState b2 = make_gaussian(cfg, {6.0 * M_PI, -10.0, -1.0});
  const double d0 = optics_distinguishability(b1, b2);
  SplitStepPropagator p1(cfg), p2(cfg);
  double best = 1e300;
  bool departed = false;
  for (int k = 0; k < 500; ++k) {
    b1 = p1.propagate(b1, 10);
    b2 = p2.propagate(b2, 10);
    const double d = optics_distinguishability(b1, b2);
    if (!departed) {
      departed = std::abs(d - d0) > 5e-3;
      continue;
    }
    best = std::min(best, std::abs(d - d0));
  }
  REQUIRE(departed);
  CHECK(best < 1e-3);
}

TEST_CASE("self-convergence under dz halving") {
  OpticsConfig cfg = small_config();
  OpticsConfig fine = cfg;
  fine.dz = cfg.dz / 2.0;
  for (auto variant :
       {EpDecayVariant::DifferentCenters, EpDecayVariant::DifferentWidths}) {
    GaussianSpec g1, g2;
    if (variant == EpDecayVariant::DifferentCenters) {
      g1 = {6.0 * M_PI, 10.0, -1.0};
      g2 = {6.0 * M_PI, -10.0, -1.0};
    } else {
      g1 = {6.0 * M_PI, 0.0, -1.0};
      g2 = {3.0 * M_PI, 0.0, -1.0};
    }
    const BeamState a1 = propagate(make_gaussian(cfg, g1), cfg, 5000);
    const BeamState a2 = propagate(make_gaussian(cfg, g2), cfg, 5000);
    const BeamState f1 = propagate(make_gaussian(fine, g1), fine, 10000);
    const BeamState f2 = propagate(make_gaussian(fine, g2), fine, 10000);
    const double d_coarse = optics_distinguishability(a1, a2);
    const double d_fine = optics_distinguishability(f1, f2);
    CHECK(std::abs(d_coarse - d_fine) < 1e-5);
  }
}

TEST_CASE("overflow guard trips on runaway gain") {
  OpticsConfig cfg = small_config();
  cfg.v0 = 100.0;
  cfg.lam = 10.0;
  cfg.dz = 1.0;
  BeamState b = make_gaussian(cfg, {6.0 * M_PI, 0.0, -1.0});
  SplitStepPropagator prop(cfg);
  CHECK_THROWS_AS(prop.propagate(b, 10), Overflow);
}

TEST_CASE("propagate argument validation") {
  OpticsConfig cfg = small_config();
  BeamState b = make_gaussian(cfg, {6.0 * M_PI, 0.0, -1.0});
  SplitStepPropagator prop(cfg);
  CHECK_THROWS_AS(prop.propagate(b, 0), Error);
}
