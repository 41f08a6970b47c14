#ifndef PTFLOW_CRITICALITY_HPP
#define PTFLOW_CRITICALITY_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ptflow/common.hpp"
#include "ptflow/dynamics.hpp"
#include "ptflow/spectral.hpp"

namespace ptflow {

enum class Observable {
  RecurrenceT,
  RelaxationTau,
  GapDeltaOmega,
  GammaGapDeltaGamma
};

inline const char* to_string(Observable o) {
  switch (o) {
    case Observable::RecurrenceT: return "recurrence_T";
    case Observable::RelaxationTau: return "relaxation_tau";
    case Observable::GapDeltaOmega: return "gap_delta_omega";
    default: return "gamma_gap_delta_gamma";
  }
}

struct ScanOptions {
  int steps = 2000;          // time-grid points per dynamical observable
  double periods = 3.0;      // unbroken horizon in spectral periods
  double tau_multiple = 10.0;  // broken horizon in relaxation-time estimates
  double recurrence_eps = 1e-6;
  double tail_fraction = 0.5;
  unsigned threads = 1;
  std::optional<DensityMatrix> rho1;  // defaults: |0><0| and |1><1|
  std::optional<DensityMatrix> rho2;
};

struct ScanPoint {
  double lambda = 0.0;
  Phase phase = Phase::Unbroken;
  bool ok = false;
  double value = 0.0;
  double stderr_ = 0.0;
  std::string error;
};

struct ScanResult {
  Observable observable;
  std::vector<ScanPoint> points;
};

namespace detail {

inline DensityMatrix basis_projector(Eigen::Index n, Eigen::Index k) {
  CVec v = CVec::Zero(n);
  v(k) = 1.0;
  return DensityMatrix::pure(v);
}

inline double scan_observable(const CMat& h, const Eigensystem& es,
                              Observable obs, const ScanOptions& opt) {
  switch (obs) {
    case Observable::GapDeltaOmega: {
      // Minimum level spacing of the (real) spectrum.
      double gap = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < es.dim(); ++i)
        for (Eigen::Index j = i + 1; j < es.dim(); ++j)
          gap = std::min(gap,
                         std::abs(es.eigenvalues(i) - es.eigenvalues(j)));
      return gap;
    }
    case Observable::GammaGapDeltaGamma:
      // Largest minus second-largest imaginary part (sorted descending).
      return es.eigenvalues(0).imag() - es.eigenvalues(1).imag();
    case Observable::RecurrenceT: {
      const DensityMatrix r1 =
          opt.rho1 ? *opt.rho1 : basis_projector(es.dim(), 0);
      const DensityMatrix r2 =
          opt.rho2 ? *opt.rho2 : basis_projector(es.dim(), 1);
      const double gap = scan_observable(h, es, Observable::GapDeltaOmega, opt);
      if (!(gap > 0)) throw NoRecurrence("scan: degenerate spectrum");
      const double t_max = opt.periods * 2.0 * M_PI / gap;
      const auto series =
          distinguishability_series(h, r1, r2, t_max, opt.steps);
      return recurrence_time(series, opt.recurrence_eps).value;
    }
    case Observable::RelaxationTau:
    default: {
      const DensityMatrix r1 =
          opt.rho1 ? *opt.rho1 : basis_projector(es.dim(), 0);
      const DensityMatrix r2 =
          opt.rho2 ? *opt.rho2 : basis_projector(es.dim(), 1);
      const double dgamma =
          es.eigenvalues(0).imag() - es.eigenvalues(1).imag();
      if (!(dgamma > 0))
        throw NonExponentialTail("scan: no decaying gap in spectrum");
      const double t_max = opt.tau_multiple / dgamma;
      const auto series =
          distinguishability_series(h, r1, r2, t_max, opt.steps);
      return relaxation_time(series, opt.tail_fraction).value;
    }
  }
}

}  // namespace detail

/// Evaluates one observable per grid point; per-point failures are recorded
/// in the result rather than aborting the scan. Points are independent and
/// run on opt.threads workers, merged in grid order.
inline ScanResult scan(const Family& family, const std::vector<double>& grid,
                       Observable obs, const ScanOptions& opt = {}) {
  if (grid.empty()) throw EmptyGrid("scan: empty parameter grid");
  ScanResult sr;
  sr.observable = obs;
  sr.points.resize(grid.size());
  parallel_for(grid.size(), opt.threads, [&](std::size_t k) {
    ScanPoint& pt = sr.points[k];
    pt.lambda = grid[k];
    try {
      const CMat h = family(grid[k]);
      const Eigensystem es = eig_biorthogonal(h);
      pt.phase = classify_phase(es).phase;
      pt.value = detail::scan_observable(h, es, obs, opt);
      pt.ok = true;
    } catch (const Error& e) {
      pt.ok = false;
      pt.error = e.what();
    }
  });
  return sr;
}

struct ExponentFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double stderr_ = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;  // |lambda - lambda_EP| range used
  double window_hi = 0.0;
};

/// Log-log fit of the scanned observable against |lambda - lambda_EP|.
inline ExponentFit fit_exponent(const ScanResult& sr, double lambda_ep) {
  std::vector<double> x, y;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& pt : sr.points) {
    if (!pt.ok || !(pt.value > 0)) continue;
    const double d = std::abs(pt.lambda - lambda_ep);
    if (!(d > 0)) continue;
    x.push_back(std::log(d));
    y.push_back(std::log(pt.value));
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (x.size() < 5 || hi / lo < 10.0)
    throw InsufficientDecades(
        "fit_exponent: need >= 5 points spanning >= 1 decade");
  const LinearFit f = linear_fit(x, y);
  if (f.slope_stderr > 0.1)
    throw FitUnstable("fit_exponent: stderr = " +
                      std::to_string(f.slope_stderr));
  return {f.slope, std::exp(f.intercept), f.slope_stderr, f.r_squared, lo, hi};
}

struct EPClassification {
  bool phi2_coalesces = false;
  int predicted_delta = 1;  // 2 if coalescing, else p - 1
};

/// Tracks the broken-side eigenstate with the second largest imaginary part
/// toward the exceptional point and applies the delta in {2, p-1} dichotomy.
/// probe_offsets are positive distances on the broken side; when p is not
/// given it is estimated from the gap scaling over the same offsets.
inline EPClassification classify_ep(const Family& family, double lambda_ep,
                                    std::vector<double> probe_offsets = {},
                                    std::optional<int> order = std::nullopt) {
  if (probe_offsets.empty()) {
    for (int k = 0; k < 12; ++k)
      probe_offsets.push_back(1e-1 * std::pow(1e-2, k / 11.0));
  }
  std::sort(probe_offsets.begin(), probe_offsets.end(),
            std::greater<double>());

  const int p = order ? *order
                      : ep_order(family, lambda_ep, probe_offsets).p;

  // Reference EP eigenvector: the dominant eigenvector at the smallest
  // probed offset (the coalescing direction survives the limit).
  const Eigensystem es_ref =
      eig_biorthogonal(family(lambda_ep + probe_offsets.back()));
  const CVec ep_vec = es_ref.right.col(0);

  std::vector<double> dist;
  for (double off : probe_offsets) {
    const Eigensystem es = eig_biorthogonal(family(lambda_ep + off));
    if (classify_phase(es).phase != Phase::Broken)
      throw AmbiguousLimit("classify_ep: probe point is not in the broken phase");
    const double overlap = std::abs(ep_vec.dot(es.right.col(1)));
    dist.push_back(std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap)));
  }

  bool decreasing = true, increasing_or_flat = true;
  for (std::size_t k = 1; k < dist.size(); ++k) {
    if (dist[k] > dist[k - 1] + 1e-6) decreasing = false;
    if (dist[k] < dist[k - 1] - 1e-6) increasing_or_flat = false;
  }

  EPClassification cls;
  if (decreasing && dist.back() < 0.05) {
    cls.phi2_coalesces = true;
    cls.predicted_delta = 2;
  } else if (dist.back() > 0.1 && (increasing_or_flat || dist.back() > 0.5)) {
    cls.phi2_coalesces = false;
    cls.predicted_delta = std::max(1, p - 1);
  } else {
    throw AmbiguousLimit("classify_ep: non-monotone overlap trend");
  }
  return cls;
}

}  // namespace ptflow

#endif
