#ifndef CYLBIF_BESSEL_HPP
#define CYLBIF_BESSEL_HPP

// Positive zeros j'_{ν,k} of J_ν'. Bracketed by a scan, then refined with a
// safeguarded Newton step whose derivative J_ν'' comes from Bessel's ODE.

#include <cmath>
#include <string>
#include <vector>

#include "cylbif/error.hpp"

namespace cylbif::bessel {

inline double jn(int nu, double x) { return std::cyl_bessel_j(static_cast<double>(nu), x); }

/// J_ν'(x) = (J_{ν-1}(x) - J_{ν+1}(x)) / 2, with J_{-1} = -J_1.
inline double jn_prime(int nu, double x) {
  if (nu == 0) return -jn(1, x);
  return 0.5 * (jn(nu - 1, x) - jn(nu + 1, x));
}

/// J_ν'' = -J_ν'/x - (1 - ν²/x²) J_ν, valid for x > 0.
inline double jn_second(int nu, double x) {
  const double n2 = static_cast<double>(nu) * nu;
  return -jn_prime(nu, x) / x - (1.0 - n2 / (x * x)) * jn(nu, x);
}

/// McMahon's large-zero expansion for j'_{ν,k}.
inline double mcmahon_guess(int nu, int k) {
  const double mu = 4.0 * nu * nu;
  const double beta = (k + 0.5 * nu - 0.75) * M_PI;
  return beta - (mu + 3.0) / (8.0 * beta) - 4.0 * (7.0 * mu * mu + 82.0 * mu - 9.0) / (3.0 * std::pow(8.0 * beta, 3));
}

inline double refine_root(int nu, double lo, double hi) {
  double flo = jn_prime(nu, lo);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double fx = jn_prime(nu, x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    double next = x - fx / jn_second(nu, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return x;
}

/// All zeros j'_{ν,k} ≤ x_max (x = 0 excluded), ascending. The scan step is
/// a quarter of π, below the minimal zero spacing.
inline std::vector<double> derivative_zeros(int nu, double x_max) {
  if (nu < 0) throw Error(ErrorKind::Validation, "derivative_zeros: order must be >= 0");
  std::vector<double> out;
  const double step = 0.25 * M_PI;
  // j'_{ν,1} >= ν for ν >= 1; J_0' has its first positive zero past 3.
  double a = nu == 0 ? 1.0 : std::max(0.5, static_cast<double>(nu) * (1.0 - 1e-12));
  double fa = jn_prime(nu, a);
  while (a < x_max + step) {
    const double b = a + step;
    const double fb = jn_prime(nu, b);
    if (fa == 0.0) {
      if (a <= x_max) out.push_back(a);
    } else if ((fa > 0.0) != (fb > 0.0) && fb != 0.0) {
      const double r = refine_root(nu, a, b);
      if (r <= x_max) out.push_back(r);
    }
    a = b;
    fa = fb;
  }
  return out;
}

/// The k-th positive zero of J_ν' (1-based).
inline double derivative_zero(int nu, int k) {
  if (k < 1) throw Error(ErrorKind::Validation, "derivative_zero: k must be >= 1");
  double x_max = mcmahon_guess(nu, k) + 2.0 * M_PI + nu;
  for (;;) {
    auto zs = derivative_zeros(nu, x_max);
    if (static_cast<int>(zs.size()) >= k) return zs[static_cast<std::size_t>(k) - 1];
    x_max *= 1.5;
  }
}

}  // namespace cylbif::bessel

#endif  // CYLBIF_BESSEL_HPP
