#ifndef CYLBIF_ODE_SHOOTING_HPP
#define CYLBIF_ODE_SHOOTING_HPP

// One-dimensional profiles: -u'' = f(u) on (0,1), u'(0) = u(1) = 0, found by
// shooting on the amplitude a = u(0).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cylbif/error.hpp"
#include "cylbif/nonlinearity.hpp"

namespace cylbif {

struct Trajectory {
  std::vector<double> u;   // M+1 nodes on the uniform grid of [0,1]
  std::vector<double> up;  // u' at the same nodes

  std::size_t intervals() const noexcept { return u.empty() ? 0 : u.size() - 1; }
};

struct OneDimSolution {
  std::vector<double> values;
  std::vector<double> derivative_values;
  double amplitude = 0.0;
  int nodal_count = 0;
  double residual = 0.0;

  std::size_t intervals() const noexcept { return values.empty() ? 0 : values.size() - 1; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(intervals()); }
  double x(std::size_t k) const noexcept { return static_cast<double>(k) * spacing(); }
};

struct ShootingConfig {
  int steps = 10000;
  double amplitude_low = 1e-2;
  double amplitude_high = 1e4;
  double tol_amplitude = 1e-12;
  double tol_terminal = 1e-10;
  int max_bisect = 200;
  double scan_factor = 1.25;

  void validate() const {
    if (steps < 100) throw Error(ErrorKind::Validation, "shooting steps must be >= 100");
    if (!(amplitude_low > 0.0 && amplitude_low < amplitude_high))
      throw Error(ErrorKind::Validation, "amplitude bracket must satisfy 0 < low < high");
    if (!(tol_amplitude > 0.0 && tol_terminal > 0.0))
      throw Error(ErrorKind::Validation, "shooting tolerances must be positive");
    if (max_bisect < 1) throw Error(ErrorKind::Validation, "max_bisect must be >= 1");
    if (!(scan_factor > 1.0)) throw Error(ErrorKind::Validation, "scan factor must exceed 1");
  }
};

/// Classical RK4 for u'' = -f(u), u(0) = amplitude, u'(0) = 0, with fixed
/// step 1/steps.
inline Trajectory integrate_ivp(const NonlinearityModel& model, double amplitude, int steps) {
  if (steps < 2) throw Error(ErrorKind::Validation, "integrate_ivp: steps must be >= 2");
  const double h = 1.0 / steps;
  Trajectory tr;
  tr.u.resize(static_cast<std::size_t>(steps) + 1);
  tr.up.resize(tr.u.size());
  double u = amplitude, v = 0.0;
  tr.u[0] = u;
  tr.up[0] = v;
  for (int k = 0; k < steps; ++k) {
    const double k1u = v, k1v = -eval_f(model, u);
    const double k2u = v + 0.5 * h * k1v, k2v = -eval_f(model, u + 0.5 * h * k1u);
    const double k3u = v + 0.5 * h * k2v, k3v = -eval_f(model, u + 0.5 * h * k2u);
    const double k4u = v + h * k3v, k4v = -eval_f(model, u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!std::isfinite(u) || !std::isfinite(v))
      throw Error(ErrorKind::Overflow,
                  "integrate_ivp: non-finite state at node " + std::to_string(k + 1));
    tr.u[static_cast<std::size_t>(k) + 1] = u;
    tr.up[static_cast<std::size_t>(k) + 1] = v;
  }
  return tr;
}

/// Strict sign changes between consecutive entries, ignoring entries with
/// magnitude <= tol.
inline int count_sign_changes(std::span<const double> values, double tol) {
  int changes = 0;
  int last_sign = 0;
  for (double v : values) {
    if (std::abs(v) <= tol) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++changes;
    last_sign = s;
  }
  return changes;
}

inline int count_nodal_domains_1d(std::span<const double> values, double tol) {
  if (tol < 0.0) throw Error(ErrorKind::Validation, "count_nodal_domains_1d: tol must be >= 0");
  const bool any = std::any_of(values.begin(), values.end(),
                               [tol](double v) { return std::abs(v) > tol; });
  if (!any) throw Error(ErrorKind::DegenerateInput, "count_nodal_domains_1d: all values below tol");
  return 1 + count_sign_changes(values, tol);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Default sign-change tolerance for sampled profiles.
inline double nodal_tolerance(std::span<const double> values) { return 1e-8 * max_abs(values); }

/// max over interior nodes of |-D²u - f(u)|; also stored in sol.residual.
inline double residual_check(OneDimSolution& sol, const NonlinearityModel& model) {
  const std::size_t m = sol.intervals();
  if (m < 4) throw Error(ErrorKind::Validation, "residual_check: need at least 4 intervals");
  const double inv_h2 = static_cast<double>(m) * static_cast<double>(m);
  double worst = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    const auto& u = sol.values;
    const double d2 = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_h2;
    worst = std::max(worst, std::abs(-d2 - eval_f(model, u[k])));
  }
  sol.residual = worst;
  return worst;
}

namespace detail {

// Zeros of u(·; a) in (0,1]: interior sign changes plus one if the terminal
// value has crossed. Monotone in a for superlinear f.
inline int zeros_up_to_terminal(const Trajectory& tr) {
  std::span<const double> interior(tr.u.data(), tr.u.size() - 1);
  const double tol = nodal_tolerance(interior);
  int changes = 0;
  int last_sign = 0;
  for (double v : interior) {
    if (std::abs(v) <= tol) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++changes;
    last_sign = s;
  }
  const double terminal = tr.u.back();
  if (terminal == 0.0 || (last_sign != 0 && (terminal > 0.0 ? 1 : -1) != last_sign)) ++changes;
  return changes;
}

}  // namespace detail

inline OneDimSolution make_solution(const NonlinearityModel& model, double amplitude, int steps) {
  Trajectory tr = integrate_ivp(model, amplitude, steps);
  OneDimSolution sol;
  sol.amplitude = amplitude;
  sol.values = std::move(tr.u);
  sol.derivative_values = std::move(tr.up);
  sol.derivative_values[0] = 0.0;
  // the equilibrium u ≡ 0 has no nodal domains
  sol.nodal_count = max_abs(sol.values) > 0.0 ? count_nodal_domains_1d(sol.values, nodal_tolerance(sol.values)) : 0;
  if (sol.intervals() >= 4) residual_check(sol, model);
  return sol;
}

/// Re-integrates a solution's amplitude on a grid with `intervals` cells.
inline OneDimSolution resample(const NonlinearityModel& model, const OneDimSolution& sol,
                               int intervals) {
  return make_solution(model, sol.amplitude, intervals);
}

/// Scan-then-bisect on the amplitude for the profile with n nodal domains.
inline OneDimSolution find_one_dim_solution(const NonlinearityModel& model, int n,
                                            const ShootingConfig& config = {}) {
  config.validate();
  if (n < 1) throw Error(ErrorKind::Validation, "find_one_dim_solution: n must be >= 1");
  auto zeros = [&](double a) { return detail::zeros_up_to_terminal(integrate_ivp(model, a, config.steps)); };

  // Geometric scan for the first amplitude with at least n zeros.
  double lo = config.amplitude_low;
  if (zeros(lo) >= n)
    throw Error(ErrorKind::NoSolution, "find_one_dim_solution: lower amplitude already has >= n zeros");
  double hi = lo;
  for (;;) {
    const double next = hi * config.scan_factor;
    if (next > config.amplitude_high)
      throw Error(ErrorKind::NoSolution, "find_one_dim_solution: no bracket for n = " +
                                             std::to_string(n) + " within the amplitude range");
    if (zeros(next) >= n) {
      hi = next;
      break;
    }
    lo = hi = next;
  }

  // Bisection on the zero count; the terminal value changes sign at the jump.
  int iters = 0;
  while (hi - lo > config.tol_amplitude * std::max(1.0, hi)) {
    if (++iters > config.max_bisect)
      throw Error(ErrorKind::Convergence, "find_one_dim_solution: bisection did not converge in " +
                                              std::to_string(config.max_bisect) + " steps");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (zeros(mid) >= n)
      hi = mid;
    else
      lo = mid;
  }
  const double t_lo = integrate_ivp(model, lo, config.steps).u.back();
  const double t_hi = integrate_ivp(model, hi, config.steps).u.back();
  double a_star = std::abs(t_lo) <= std::abs(t_hi) ? lo : hi;
  if (t_lo != t_hi && (t_lo > 0.0) != (t_hi > 0.0)) {
    const double secant = lo - t_lo * (hi - lo) / (t_hi - t_lo);
    if (secant >= lo && secant <= hi) a_star = secant;
  }

  OneDimSolution sol = make_solution(model, a_star, config.steps);
  if (!(std::abs(sol.values.back()) <= config.tol_terminal))
    throw Error(ErrorKind::Convergence, "find_one_dim_solution: terminal value " +
                                            std::to_string(sol.values.back()) + " above tolerance");
  if (sol.nodal_count != n)
    throw Error(ErrorKind::Convergence, "find_one_dim_solution: converged profile has " +
                                            std::to_string(sol.nodal_count) + " nodal domains, wanted " +
                                            std::to_string(n));
  return sol;
}

}  // namespace cylbif

#endif  // CYLBIF_ODE_SHOOTING_HPP
