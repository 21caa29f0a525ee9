#ifndef CYLBIF_TRIDIAGONAL_HPP
#define CYLBIF_TRIDIAGONAL_HPP

// Symmetric tridiagonal eigenpairs by Sturm-sequence bisection and inverse
// iteration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cylbif/error.hpp"

namespace cylbif {

struct SymTridiagonal {
  std::vector<double> diag;  // n
  std::vector<double> off;   // n-1, off[k] couples k and k+1

  std::size_t size() const noexcept { return diag.size(); }

  double norm_inf() const {
    double m = 0.0;
    for (std::size_t k = 0; k < diag.size(); ++k) {
      double row = std::abs(diag[k]);
      if (k > 0) row += std::abs(off[k - 1]);
      if (k + 1 < diag.size()) row += std::abs(off[k]);
      m = std::max(m, row);
    }
    return m;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      double s = diag[k] * x[k];
      if (k > 0) s += off[k - 1] * x[k - 1];
      if (k + 1 < n) s += off[k] * x[k + 1];
      y[k] = s;
    }
    return y;
  }
};

/// Number of eigenvalues strictly below x (negative pivots of LDLᵀ of T - x).
inline std::size_t sturm_count(const SymTridiagonal& t, double x) {
  const double pivmin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double b2 = k > 0 ? t.off[k - 1] * t.off[k - 1] : 0.0;
    d = (t.diag[k] - x) - (k > 0 ? b2 / d : 0.0);
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

inline std::pair<double, double> gershgorin_bounds(const SymTridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < t.size(); ++k) {
    double r = 0.0;
    if (k > 0) r += std::abs(t.off[k - 1]);
    if (k + 1 < t.size()) r += std::abs(t.off[k]);
    lo = std::min(lo, t.diag[k] - r);
    hi = std::max(hi, t.diag[k] + r);
  }
  const double pad = 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
  return {lo - pad, hi + pad};
}

/// The index-th smallest eigenvalue (0-based), bisected to working precision.
inline double bisect_eigenvalue(const SymTridiagonal& t, std::size_t index) {
  auto [lo, hi] = gershgorin_bounds(t);
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Solves (T - shift) x = rhs by Gaussian elimination with partial pivoting;
/// exact zero pivots are replaced by a tiny perturbation.
inline std::vector<double> shifted_tridiagonal_solve(const SymTridiagonal& t, double shift,
                                                     std::vector<double> rhs) {
  const std::size_t n = t.size();
  const double tiny = std::numeric_limits<double>::epsilon() * std::max(t.norm_inf(), 1e-300);
  // Rows are (sub, diag, sup, sup2) after pivoting.
  std::vector<double> a(n), b(n), c(n), d(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = k > 0 ? t.off[k - 1] : 0.0;
    b[k] = t.diag[k] - shift;
    c[k] = k + 1 < n ? t.off[k] : 0.0;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (std::abs(a[k + 1]) > std::abs(b[k])) {
      std::swap(b[k], a[k + 1]);
      std::swap(c[k], b[k + 1]);
      std::swap(d[k], c[k + 1]);
      std::swap(rhs[k], rhs[k + 1]);
    }
    if (b[k] == 0.0) b[k] = tiny;
    const double m = a[k + 1] / b[k];
    b[k + 1] -= m * c[k];
    c[k + 1] -= m * d[k];
    rhs[k + 1] -= m * rhs[k];
  }
  if (b[n - 1] == 0.0) b[n - 1] = tiny;
  std::vector<double> x(n);
  for (std::size_t kk = n; kk-- > 0;) {
    double s = rhs[kk];
    if (kk + 1 < n) s -= c[kk] * x[kk + 1];
    if (kk + 2 < n) s -= d[kk] * x[kk + 2];
    x[kk] = s / b[kk];
  }
  return x;
}

struct TridiagonalEigenpairs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // Euclidean-orthonormal
};

/// The k smallest eigenpairs. Throws Stagnation if inverse iteration fails to
/// reach a small residual for some index.
inline TridiagonalEigenpairs smallest_eigenpairs(const SymTridiagonal& t, std::size_t k) {
  const std::size_t n = t.size();
  if (k == 0 || k > n) throw Error(ErrorKind::Validation, "smallest_eigenpairs: need 1 <= k <= n");
  const double scale = std::max(t.norm_inf(), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  TridiagonalEigenpairs out;
  out.values.reserve(k);
  out.vectors.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double lambda = bisect_eigenvalue(t, i);
    // Deterministic start vector with components in every mode.
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(j) + 0.3);
    double resid = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 8 && resid > 64.0 * eps * scale * std::sqrt(static_cast<double>(n)); ++it) {
      x = shifted_tridiagonal_solve(t, lambda, std::move(x));
      for (std::size_t p = 0; p < out.vectors.size(); ++p) {
        if (std::abs(out.values[p] - lambda) > 1e-3 * scale) continue;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += out.vectors[p][j] * x[j];
        for (std::size_t j = 0; j < n; ++j) x[j] -= dot * out.vectors[p][j];
      }
      double nrm = 0.0;
      for (double v : x) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw Error(ErrorKind::Stagnation, "inverse iteration broke down at index " + std::to_string(i + 1));
      for (double& v : x) v /= nrm;
      const auto tx = t.apply(x);
      resid = 0.0;
      for (std::size_t j = 0; j < n; ++j) resid = std::max(resid, std::abs(tx[j] - lambda * x[j]));
    }
    if (resid > 1e3 * eps * scale * std::sqrt(static_cast<double>(n)))
      throw Error(ErrorKind::Stagnation, "inverse iteration stagnated at index " + std::to_string(i + 1) +
                                             " (residual " + std::to_string(resid) + ")");
    out.values.push_back(lambda);
    out.vectors.push_back(std::move(x));
  }
  return out;
}

}  // namespace cylbif

#endif  // CYLBIF_TRIDIAGONAL_HPP
