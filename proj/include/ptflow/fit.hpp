#ifndef PTFLOW_FIT_HPP
#define PTFLOW_FIT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "ptflow/common.hpp"

namespace ptflow {

/// Ordinary least squares for y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

inline LinearFit linear_fit(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("linear_fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw Error("linear_fit: need at least two points");

  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;

  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw FitUnstable("linear_fit: degenerate abscissae");

  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;

  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
  f.slope_stderr = (n > 2) ? std::sqrt(ss_res / double(n - 2) / sxx) : 0.0;
  return f;
}

/// Vertex abscissa of the parabola through (x0-h, ym), (x0, y0), (x0+h, yp),
/// clamped to [x0-h, x0+h]. Falls back to x0 when the points are collinear.
inline double parabola_vertex(double x0, double h, double ym, double y0,
                              double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (denom == 0.0) return x0;
  double d = 0.5 * h * (ym - yp) / denom;
  if (d > h) d = h;
  if (d < -h) d = -h;
  return x0 + d;
}

}  // namespace ptflow

#endif
