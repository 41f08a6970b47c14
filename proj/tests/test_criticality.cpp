#include <catch2/catch_amalgamated.hpp>

#include "ptflow/criticality.hpp"
#include "test_util.hpp"

using namespace ptflow;
using Catch::Approx;

namespace {

const Family kTwoLevel = [](double a) { return two_level(1.0, a); };

CMat spectator3(double a) {
  // p=2 EP block plus a real spectator level that carries the
  // second-largest imaginary part (zero) on the broken side.
  CMat h = CMat::Zero(3, 3);
  h.topLeftCorner(2, 2) = two_level(1.0, a);
  h(2, 2) = 2.0;
  return h;
}

std::vector<double> log_grid(double lo, double hi, int n, double center) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k)
    g.push_back(center + lo * std::pow(hi / lo, double(k) / (n - 1)));
  std::sort(g.begin(), g.end());
  return g;
}

}  // namespace

TEST_CASE("recurrence-time scan matches the closed form") {
  ScanOptions opt;
  opt.threads = 4;
  const auto grid = log_grid(-1e-1, -1e-3, 12, 1.0);  // a in [0.9, 0.999]
  const ScanResult sr = scan(kTwoLevel, grid, Observable::RecurrenceT, opt);
  double prev = 0.0;
  for (const auto& pt : sr.points) {
    REQUIRE(pt.ok);
    CHECK(pt.phase == Phase::Unbroken);
    const double ref = M_PI / std::sqrt(1.0 - pt.lambda * pt.lambda);
    CHECK(pt.value == Approx(ref).epsilon(0.01));
    CHECK(pt.value > prev);  // T(a) increasing toward the EP
    prev = pt.value;
  }
  const ExponentFit f = fit_exponent(sr, 1.0);
  CHECK(f.exponent == Approx(-0.5).margin(0.02));
}

TEST_CASE("relaxation-time scan matches the closed form") {
  ScanOptions opt;
  opt.threads = 4;
  const auto grid = log_grid(1e-3, 1e-1, 12, 1.0);  // a in [1.001, 1.1]
  const ScanResult sr = scan(kTwoLevel, grid, Observable::RelaxationTau, opt);
  for (const auto& pt : sr.points) {
    REQUIRE(pt.ok);
    CHECK(pt.phase == Phase::Broken);
    const double ref = 0.5 / std::sqrt(pt.lambda * pt.lambda - 1.0);
    CHECK(pt.value == Approx(ref).epsilon(0.05));
  }
  const ExponentFit f = fit_exponent(sr, 1.0);
  CHECK(f.exponent == Approx(-0.5).margin(0.02));
}

TEST_CASE("gap scans give the +1/2 exponents") {
  ScanOptions opt;
  const ScanResult sw =
      scan(kTwoLevel, log_grid(-1e-1, -1e-3, 12, 1.0),
           Observable::GapDeltaOmega, opt);
  const ScanResult sg =
      scan(kTwoLevel, log_grid(1e-3, 1e-1, 12, 1.0),
           Observable::GammaGapDeltaGamma, opt);
  CHECK(fit_exponent(sw, 1.0).exponent == Approx(0.5).margin(0.02));
  CHECK(fit_exponent(sg, 1.0).exponent == Approx(0.5).margin(0.02));
}

TEST_CASE("T and tau exponents agree within combined stderr") {
  ScanOptions opt;
  opt.threads = 4;
  const ExponentFit ft = fit_exponent(
      scan(kTwoLevel, log_grid(-1e-1, -1e-3, 12, 1.0),
           Observable::RecurrenceT, opt),
      1.0);
  const ExponentFit fu = fit_exponent(
      scan(kTwoLevel, log_grid(1e-3, 1e-1, 12, 1.0),
           Observable::RelaxationTau, opt),
      1.0);
  CHECK(std::abs(ft.exponent - fu.exponent) <=
        ft.stderr_ + fu.stderr_ + 0.02);
}

TEST_CASE("Hermitian family: recurrence scan fails pointwise, fit rejected") {
  const Family herm = [](double lam) {
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = 1.0;
    h(1, 1) = 2.0 + lam;
    return h;
  };
  const ScanResult sr =
      scan(herm, log_grid(-1e-1, -1e-3, 8, 0.0), Observable::RecurrenceT, {});
  // D(t) is constant for commuting diagonal initial states: no departure.
  for (const auto& pt : sr.points) CHECK_FALSE(pt.ok);
  CHECK_THROWS_AS(fit_exponent(sr, 0.0), InsufficientDecades);
}

TEST_CASE("empty grid raises") {
  CHECK_THROWS_AS(scan(kTwoLevel, {}, Observable::RecurrenceT, {}), EmptyGrid);
}

TEST_CASE("synthetic power law fits exactly") {
  ScanResult sr;
  sr.observable = Observable::RecurrenceT;
  for (int k = 0; k < 10; ++k) {
    ScanPoint pt;
    pt.lambda = 1e-3 * std::pow(1e2, k / 9.0);
    pt.value = 3.0 * std::pow(pt.lambda, -1.0 / 3.0);
    pt.ok = true;
    sr.points.push_back(pt);
  }
  const ExponentFit f = fit_exponent(sr, 0.0);
  CHECK(f.exponent == Approx(-1.0 / 3.0).margin(1e-6));
  CHECK(f.amplitude == Approx(3.0).margin(1e-6));
}

TEST_CASE("narrow grids are rejected") {
  ScanResult sr;
  sr.observable = Observable::RecurrenceT;
  for (int k = 0; k < 8; ++k) {
    ScanPoint pt;
    pt.lambda = 1e-2 + 1e-3 * k;  // spans well under a decade
    pt.value = 1.0 + 0.01 * k;
    pt.ok = true;
    sr.points.push_back(pt);
  }
  CHECK_THROWS_AS(fit_exponent(sr, 0.0), InsufficientDecades);
}

TEST_CASE("classify_ep: coalescing two-level branch") {
  const EPClassification cls = classify_ep(kTwoLevel, 1.0);
  CHECK(cls.phi2_coalesces);
  CHECK(cls.predicted_delta == 2);
}

TEST_CASE("classify_ep: spectator branch predicts delta = p-1") {
  const EPClassification cls = classify_ep(spectator3, 1.0);
  CHECK_FALSE(cls.phi2_coalesces);
  CHECK(cls.predicted_delta == 1);
}

TEST_CASE("classify_ep rejects a family without an EP") {
  const Family herm = [](double lam) {
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = 1.0;
    h(1, 1) = 2.0 + lam;
    return h;
  };
  CHECK_THROWS_AS(classify_ep(herm, 0.0), Error);
}

TEST_CASE("delta consistency: measured tail matches the prediction") {
  // Coalescing branch: two-level EP, delta = 2 (checked in test_dynamics).
  // Non-coalescing branch: 3x3 spectator model at its EP, delta = 1.
  CVec v1(3), v2(3);
  v1 << 1, 0, 1;
  v2 << 0, 1, 1;
  const auto s = distinguishability_series(
      spectator3(1.0), DensityMatrix::pure(v1), DensityMatrix::pure(v2),
      200.0, 2000);
  CHECK(tail_exponent(s, 20.0, 200.0).value == Approx(1.0).margin(0.1));
}
