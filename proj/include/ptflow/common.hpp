#ifndef PTFLOW_COMMON_HPP
#define PTFLOW_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <functional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace ptflow {

using Cx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

constexpr Cx I{0.0, 1.0};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define PTFLOW_DEFINE_ERROR(Name)     \
  struct Name : Error {               \
    using Error::Error;               \
  }

PTFLOW_DEFINE_ERROR(DefectiveMatrix);
PTFLOW_DEFINE_ERROR(BadDimension);
PTFLOW_DEFINE_ERROR(DimensionMismatch);
PTFLOW_DEFINE_ERROR(NormalizationUnderflow);
PTFLOW_DEFINE_ERROR(NoRecurrence);
PTFLOW_DEFINE_ERROR(NonExponentialTail);
PTFLOW_DEFINE_ERROR(FitUnstable);
PTFLOW_DEFINE_ERROR(NoCoalescence);
PTFLOW_DEFINE_ERROR(InsufficientDecades);
PTFLOW_DEFINE_ERROR(AmbiguousLimit);
PTFLOW_DEFINE_ERROR(EmptyGrid);
PTFLOW_DEFINE_ERROR(BrokenPhase);
PTFLOW_DEFINE_ERROR(NotPositive);
PTFLOW_DEFINE_ERROR(NotPositiveDefinite);
PTFLOW_DEFINE_ERROR(NearEP);
PTFLOW_DEFINE_ERROR(ZeroBranch);
PTFLOW_DEFINE_ERROR(GridTooCoarse);
PTFLOW_DEFINE_ERROR(GridMismatch);
PTFLOW_DEFINE_ERROR(Overflow);

#undef PTFLOW_DEFINE_ERROR

/// Spectral norm (largest singular value).
inline double spectral_norm(const CMat& m) {
  return m.jacobiSvd().singularValues()(0);
}

inline bool is_hermitian(const CMat& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline CMat hermitize(const CMat& m) { return 0.5 * (m + m.adjoint()); }

inline void require_finite(const CMat& m, const char* what) {
  if (!m.allFinite()) throw Error(std::string(what) + ": non-finite entries");
}

/// Runs f(i) for i in [0, n) on up to nthreads workers. Results must be
/// written to disjoint slots; iteration order is not guaranteed.
inline void parallel_for(std::size_t n, unsigned nthreads,
                         const std::function<void(std::size_t)>& f) {
  if (nthreads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  nthreads = std::min<std::size_t>(nthreads, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += nthreads) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ptflow

#endif
