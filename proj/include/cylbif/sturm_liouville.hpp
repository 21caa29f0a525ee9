#ifndef CYLBIF_STURM_LIOUVILLE_HPP
#define CYLBIF_STURM_LIOUVILLE_HPP

// -z'' - q z = αz on (0,1), z'(0) = z(1) = 0, discretized by central
// differences with a mirrored ghost node at x = 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cylbif/error.hpp"
#include "cylbif/nonlinearity.hpp"
#include "cylbif/ode_shooting.hpp"
#include "cylbif/tridiagonal.hpp"

namespace cylbif {

/// The symmetrized operator. Row 0 is scaled by 1/√2 so the ghost-node
/// Neumann row stays symmetric; eigenvectors map back by z₀ = √2·y₀.
struct SturmOperator {
  SymTridiagonal matrix;
  std::vector<double> potential;  // M+1 nodes
  int grid_size = 0;              // M intervals
};

struct SturmSpectrum {
  std::vector<double> alphas;
  std::vector<std::vector<double>> eigenfunctions;  // M+1 nodes, z(1) = 0
  std::vector<int> zero_counts;
  int grid_size = 0;
  std::vector<double> potential;

  double spacing() const noexcept { return 1.0 / grid_size; }
};

inline SturmOperator assemble_sl_operator(std::span<const double> potential, int grid_size) {
  if (grid_size < 2) throw Error(ErrorKind::Validation, "assemble_sl_operator: grid_size must be >= 2");
  if (potential.size() != static_cast<std::size_t>(grid_size) + 1)
    throw Error(ErrorKind::Validation, "assemble_sl_operator: potential must have grid_size+1 nodes");
  const std::size_t n = static_cast<std::size_t>(grid_size);
  const double inv_h2 = static_cast<double>(grid_size) * grid_size;
  SturmOperator op;
  op.grid_size = grid_size;
  op.potential.assign(potential.begin(), potential.end());
  op.matrix.diag.resize(n);
  op.matrix.off.resize(n - 1);
  for (std::size_t k = 0; k < n; ++k) op.matrix.diag[k] = 2.0 * inv_h2 - potential[k];
  for (std::size_t k = 0; k + 1 < n; ++k) op.matrix.off[k] = -inv_h2;
  op.matrix.off[0] = -std::sqrt(2.0) * inv_h2;
  return op;
}

/// Overload taking explicit node coordinates, which must be the uniform
/// partition of [0,1].
inline SturmOperator assemble_sl_operator(std::span<const double> nodes,
                                          std::span<const double> potential) {
  if (nodes.size() < 3) throw Error(ErrorKind::Validation, "assemble_sl_operator: too few nodes");
  const int m = static_cast<int>(nodes.size()) - 1;
  const double h = 1.0 / m;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (std::abs(nodes[k] - static_cast<double>(k) * h) > 1e-12)
      throw Error(ErrorKind::Validation, "assemble_sl_operator: grid is not the uniform partition of [0,1]");
  return assemble_sl_operator(potential, m);
}

/// Trapezoidal inner product on the node values.
inline double sl_inner(std::span<const double> a, std::span<const double> b) {
  const std::size_t m = a.size() - 1;
  double s = 0.5 * (a[0] * b[0] + a[m] * b[m]);
  for (std::size_t k = 1; k < m; ++k) s += a[k] * b[k];
  return s / static_cast<double>(m);
}

inline SturmSpectrum sl_eigenpairs(const SturmOperator& op, int k) {
  if (k < 1 || k > op.grid_size - 1)
    throw Error(ErrorKind::Validation, "sl_eigenpairs: need 1 <= k <= grid_size - 1");
  auto pairs = smallest_eigenpairs(op.matrix, static_cast<std::size_t>(k));
  SturmSpectrum spec;
  spec.grid_size = op.grid_size;
  spec.potential = op.potential;
  spec.alphas = std::move(pairs.values);
  const double root_m = std::sqrt(static_cast<double>(op.grid_size));
  for (auto& y : pairs.vectors) {
    std::vector<double> z(y.size() + 1, 0.0);
    for (std::size_t j = 0; j < y.size(); ++j) z[j] = y[j] * root_m;
    z[0] *= std::sqrt(2.0);
    if (z[0] < 0.0)
      for (double& v : z) v = -v;
    std::span<const double> interior(z.data(), z.size() - 1);
    spec.zero_counts.push_back(count_sign_changes(interior, 1e-8 * max_abs(z)));
    spec.eigenfunctions.push_back(std::move(z));
  }
  return spec;
}

inline bool oscillation_check(const SturmSpectrum& spec) {
  for (std::size_t i = 0; i < spec.eigenfunctions.size(); ++i) {
    const auto& z = spec.eigenfunctions[i];
    std::span<const double> interior(z.data(), z.size() - 1);
    if (count_sign_changes(interior, 1e-8 * max_abs(z)) != static_cast<int>(i)) return false;
  }
  return true;
}

inline int one_dim_morse(const SturmSpectrum& spec) {
  if (spec.alphas.empty() || spec.alphas.back() < 0.0)
    throw Error(ErrorKind::InsufficientSpectrum,
                "one_dim_morse: no nonnegative eigenvalue computed, increase k");
  return static_cast<int>(std::count_if(spec.alphas.begin(), spec.alphas.end(),
                                        [](double a) { return a < 0.0; }));
}

inline double nondegeneracy_margin(const SturmSpectrum& spec) {
  double m = std::numeric_limits<double>::infinity();
  for (double a : spec.alphas) m = std::min(m, std::abs(a));
  return m;
}

/// max_i ‖-D²zᵢ - q zᵢ - αᵢ zᵢ‖∞ over interior nodes, plus the Neumann row.
inline double eigen_residual(const SturmSpectrum& spec, std::size_t i) {
  const auto& z = spec.eigenfunctions.at(i);
  const auto& q = spec.potential;
  const double alpha = spec.alphas.at(i);
  const std::size_t m = z.size() - 1;
  const double inv_h2 = static_cast<double>(m) * m;
  double worst = std::abs(2.0 * (z[0] - z[1]) * inv_h2 - q[0] * z[0] - alpha * z[0]);
  for (std::size_t k = 1; k < m; ++k)
    worst = std::max(worst, std::abs((2.0 * z[k] - z[k - 1] - z[k + 1]) * inv_h2 - q[k] * z[k] - alpha * z[k]));
  return worst;
}

/// q(x) = f'(u(x)) sampled at the solution's nodes.
inline std::vector<double> linearized_potential(const NonlinearityModel& model, const OneDimSolution& sol) {
  std::vector<double> q(sol.values.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = eval_fprime(model, sol.values[k]);
  return q;
}

inline int default_eigen_count(int n) { return std::max(n + 5, 12); }

/// Spectrum of the linearization at `sol`, re-integrated on an M-interval grid.
inline SturmSpectrum one_dim_spectrum(const NonlinearityModel& model, const OneDimSolution& sol,
                                      int grid_size, int k) {
  const OneDimSolution on_grid = resample(model, sol, grid_size);
  return sl_eigenpairs(assemble_sl_operator(linearized_potential(model, on_grid), grid_size), k);
}

struct ExtrapolatedSpectrum {
  std::vector<int> grids;                    // ascending, each the double of the previous
  std::vector<std::vector<double>> raw;      // raw[level][i]
  std::vector<double> alphas;                // extrapolated
  std::vector<double> error_estimate;        // |finest raw - extrapolated|
  std::vector<double> extrapolation_spread;  // |full - one-level-lower extrapolant|
};

/// Richardson extrapolation in h² over grids that double (e.g. 500, 1000, 2000).
inline ExtrapolatedSpectrum richardson_spectrum(
    const std::function<std::vector<double>(int grid_size)>& potential_for_grid, int k,
    std::vector<int> grids = {500, 1000, 2000}) {
  if (grids.size() < 2) throw Error(ErrorKind::Validation, "richardson_spectrum: need >= 2 grids");
  for (std::size_t l = 1; l < grids.size(); ++l)
    if (grids[l] != 2 * grids[l - 1])
      throw Error(ErrorKind::Validation, "richardson_spectrum: grids must double");
  ExtrapolatedSpectrum out;
  out.grids = grids;
  for (int m : grids) {
    auto q = potential_for_grid(m);
    out.raw.push_back(sl_eigenpairs(assemble_sl_operator(q, m), k).alphas);
  }
  const std::size_t levels = grids.size();
  for (int i = 0; i < k; ++i) {
    std::vector<double> col(levels);
    for (std::size_t l = 0; l < levels; ++l) col[l] = out.raw[l][static_cast<std::size_t>(i)];
    // Neville-style table in powers of 4.
    std::vector<double> prev_top;
    double factor = 4.0;
    for (std::size_t order = 1; order < levels; ++order) {
      prev_top.push_back(col.back());
      for (std::size_t l = levels - 1; l >= order; --l) col[l] = (factor * col[l] - col[l - 1]) / (factor - 1.0);
      factor *= 4.0;
    }
    const double best = col.back();
    out.alphas.push_back(best);
    out.error_estimate.push_back(std::abs(out.raw.back()[static_cast<std::size_t>(i)] - best));
    out.extrapolation_spread.push_back(std::abs(best - prev_top.back()));
  }
  return out;
}

}  // namespace cylbif

#endif  // CYLBIF_STURM_LIOUVILLE_HPP
