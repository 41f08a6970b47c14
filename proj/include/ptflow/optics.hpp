#ifndef PTFLOW_OPTICS_HPP
#define PTFLOW_OPTICS_HPP

#include <cmath>
#include <vector>

#include <fftw3.h>

#include "ptflow/common.hpp"
#include "ptflow/fit.hpp"

namespace ptflow {

/// Complex field on a uniform periodic transverse grid.
struct BeamState {
  double length = 0.0;  // domain length L, x in [-L/2, L/2)
  CVec field;
  double z = 0.0;

  Eigen::Index size() const { return field.size(); }
  double dx() const { return length / double(size()); }
  double x(Eigen::Index j) const { return -0.5 * length + dx() * double(j); }
};

struct GaussianSpec {
  double width = 6.0 * M_PI;
  double center = 0.0;
  double offset = -1.0;  // transverse wavenumber k0
};

/// Defaults follow the exceptional-point beam experiments: lattice period pi
/// so the EP potential is V0 e^{2ix}. Its k -> k+2 Fourier coupling makes the
/// k0 = -1 inputs exactly resonant with k = +1 (the band-edge degeneracy),
/// which is what produces the secular norm growth at lam = 1.
struct OpticsConfig {
  double v0 = 0.3;
  double lam = 1.0;  // non-Hermiticity, EP at lam = 1
  double period = M_PI;
  double length = 64.0 * M_PI;
  int n = 4096;
  double dz = 0.01;
  double z_max = 800.0;
  GaussianSpec input;

  void validate() const {
    if (!(dz > 0)) throw Error("OpticsConfig: dz must be > 0");
    if (n < 2 || (n & (n - 1)) != 0)
      throw BadDimension("OpticsConfig: N must be a power of two");
    const double cells = length / period;
    if (std::abs(cells - std::round(cells)) > 1e-9)
      throw Error("OpticsConfig: L must be an integer multiple of the period");
  }
};

inline BeamState make_gaussian(const OpticsConfig& cfg,
                               const GaussianSpec& g) {
  cfg.validate();
  BeamState b;
  b.length = cfg.length;
  b.field.resize(cfg.n);
  if (!(g.width > 0)) throw Error("make_gaussian: width must be > 0");
  if (g.width < 4.0 * b.dx())
    throw GridTooCoarse("make_gaussian: width under 4 grid spacings");
  for (Eigen::Index j = 0; j < cfg.n; ++j) {
    const double x = b.x(j);
    const double arg = (x - g.center) / g.width;
    b.field(j) = std::exp(-arg * arg) * std::exp(I * g.offset * x);
  }
  return b;
}

inline BeamState make_gaussian(const OpticsConfig& cfg) {
  return make_gaussian(cfg, cfg.input);
}

/// Strang split-step integrator for i d_z psi = -[d_x^2 + V_PT(x)] psi with
/// V_PT(x) = V0 [cos(2 pi x / a) + i lam sin(2 pi x / a)].
///
/// Owns the FFTW plans; one instance per grid. Propagation is sequential in
/// z but instances are independent.
class SplitStepPropagator {
 public:
  explicit SplitStepPropagator(const OpticsConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const int n = cfg.n;
    buf_.resize(n);
    plan_fwd_ = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(buf_.data()),
        reinterpret_cast<fftw_complex*>(buf_.data()), FFTW_FORWARD,
        FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(buf_.data()),
        reinterpret_cast<fftw_complex*>(buf_.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE);

    pot_half_.resize(n);
    pot_full_.resize(n);
    const double dx = cfg.length / n;
    for (int j = 0; j < n; ++j) {
      const double x = -0.5 * cfg.length + dx * j;
      const double phase = 2.0 * M_PI * x / cfg.period;
      const Cx v = cfg.v0 * (std::cos(phase) + I * cfg.lam * std::sin(phase));
      pot_half_[j] = std::exp(I * v * (0.5 * cfg.dz));
      pot_full_[j] = pot_half_[j] * pot_half_[j];
    }
    kin_.resize(n);
    const double dk = 2.0 * M_PI / cfg.length;
    for (int j = 0; j < n; ++j) {
      const double k = dk * ((j <= n / 2) ? j : j - n);
      kin_[j] = std::exp(-I * k * k * cfg.dz) / double(n);  // folds FFT scale
    }
  }

  ~SplitStepPropagator() {
    fftw_destroy_plan(plan_fwd_);
    fftw_destroy_plan(plan_bwd_);
  }

  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  BeamState propagate(const BeamState& psi, int steps) {
    if (steps < 1) throw Error("propagate: steps must be >= 1");
    if (psi.size() != Eigen::Index(cfg_.n) || psi.length != cfg_.length)
      throw GridMismatch("propagate: state grid does not match config");
    const int n = cfg_.n;
    for (int j = 0; j < n; ++j) buf_[j] = psi.field(j) * pot_half_[j];
    for (int s = 0; s < steps; ++s) {
      fftw_execute(plan_fwd_);
      for (int j = 0; j < n; ++j) buf_[j] *= kin_[j];
      fftw_execute(plan_bwd_);
      if (s + 1 < steps) {
        for (int j = 0; j < n; ++j) buf_[j] *= pot_full_[j];
      } else {
        for (int j = 0; j < n; ++j) buf_[j] *= pot_half_[j];
      }
      double peak = 0.0;
      for (int j = 0; j < n; ++j) peak = std::max(peak, std::abs(buf_[j]));
      if (peak > 1e100) throw Overflow("propagate: field amplitude overflow");
    }
    BeamState out;
    out.length = psi.length;
    out.z = psi.z + steps * cfg_.dz;
    out.field = Eigen::Map<const CVec>(buf_.data(), n);
    return out;
  }

 private:
  OpticsConfig cfg_;
  std::vector<Cx> buf_;
  std::vector<Cx> pot_half_, pot_full_, kin_;
  fftw_plan plan_fwd_, plan_bwd_;
};

inline BeamState propagate(const BeamState& psi, const OpticsConfig& cfg,
                           int steps) {
  SplitStepPropagator prop(cfg);
  return prop.propagate(psi, steps);
}

inline Cx beam_inner(const BeamState& a, const BeamState& b) {
  if (a.size() != b.size() || a.length != b.length)
    throw GridMismatch("beam_inner: grid mismatch");
  return a.field.dot(b.field) * a.dx();  // conjugates a; periodic rectangle rule
}

/// D(z) = sqrt(1 - |<psi,phi>|^2 / (<psi,psi><phi,phi>)).
inline double optics_distinguishability(const BeamState& psi,
                                        const BeamState& phi) {
  const double np = beam_inner(psi, psi).real();
  const double nf = beam_inner(phi, phi).real();
  if (!(np > 0) || !(nf > 0))
    throw Error("optics_distinguishability: zero field");
  const double ov = std::norm(beam_inner(psi, phi)) / (np * nf);
  return std::sqrt(std::max(0.0, 1.0 - std::min(ov, 1.0)));
}

enum class EpDecayVariant { DifferentCenters, DifferentWidths };

struct EpDecayResult {
  std::vector<double> zs;
  std::vector<double> d;   // distinguishability series
  double d_inf = 0.0;      // tail estimate (different_centers only)
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double fit_lo = 0.0, fit_hi = 0.0;
};

/// Exceptional-point decay experiments: beams with different centers give
/// |D - D_inf| ~ 1/z^2, beams with different widths give D ~ 1/z. D_inf is
/// estimated as the mean over the last 10% of samples (its exact value
/// depends on V0 and the period). The log-log fit runs over
/// [0.2 z_max, 0.8 z_max]: late enough that the resonant band-edge mode
/// dominates, while keeping a margin from the tail used for D_inf.
inline EpDecayResult ep_decay_experiment(OpticsConfig cfg,
                                         EpDecayVariant variant,
                                         int samples = 2000) {
  cfg.lam = 1.0;
  cfg.validate();

  GaussianSpec g1, g2;
  if (variant == EpDecayVariant::DifferentCenters) {
    g1 = {6.0 * M_PI, 10.0, -1.0};
    g2 = {6.0 * M_PI, -10.0, -1.0};
  } else {
    g1 = {6.0 * M_PI, 0.0, -1.0};
    g2 = {3.0 * M_PI, 0.0, -1.0};
  }

  BeamState b1 = make_gaussian(cfg, g1);
  BeamState b2 = make_gaussian(cfg, g2);
  SplitStepPropagator p1(cfg), p2(cfg);

  const int total_steps = int(std::round(cfg.z_max / cfg.dz));
  const int chunk = std::max(1, total_steps / samples);

  EpDecayResult res;
  res.zs.push_back(0.0);
  res.d.push_back(optics_distinguishability(b1, b2));
  for (int done = 0; done < total_steps;) {
    const int s = std::min(chunk, total_steps - done);
    b1 = p1.propagate(b1, s);
    b2 = p2.propagate(b2, s);
    done += s;
    res.zs.push_back(b1.z);
    res.d.push_back(optics_distinguishability(b1, b2));
  }

  // Tail mean over the last 10% of samples.
  const std::size_t nt = res.d.size();
  const std::size_t tail_start = nt - std::max<std::size_t>(1, nt / 10);
  double tail = 0.0;
  for (std::size_t k = tail_start; k < nt; ++k) tail += res.d[k];
  res.d_inf = tail / double(nt - tail_start);

  res.fit_lo = 0.2 * cfg.z_max;
  res.fit_hi = 0.8 * cfg.z_max;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < nt; ++k) {
    if (res.zs[k] < res.fit_lo || res.zs[k] > res.fit_hi) continue;
    const double v = (variant == EpDecayVariant::DifferentCenters)
                         ? std::abs(res.d[k] - res.d_inf)
                         : res.d[k];
    if (!(v > 0)) continue;
    x.push_back(std::log(res.zs[k]));
    y.push_back(std::log(v));
  }
  if (x.size() < 5) throw FitUnstable("ep_decay_experiment: too few fit points");
  const LinearFit f = linear_fit(x, y);
  if (f.slope_stderr > 0.1)
    throw FitUnstable("ep_decay_experiment: stderr = " +
                      std::to_string(f.slope_stderr));
  res.exponent = f.slope;
  res.exponent_stderr = f.slope_stderr;
  return res;
}

}  // namespace ptflow

#endif
