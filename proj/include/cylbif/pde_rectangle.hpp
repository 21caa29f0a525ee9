#ifndef CYLBIF_PDE_RECTANGLE_HPP
#define CYLBIF_PDE_RECTANGLE_HPP

// The transported problem D_t u = f(u) on the unit square (s, y), where
// s = x'/L and D_t = -(tL)⁻² ∂²_s - ∂²_y, Dirichlet on y = 1 and Neumann on
// the other three sides.
//
// Grid vectors hold all nx·ny nodes, index j·nx + i (i along s, j along y).
// The last row j = ny-1 is the Dirichlet row and stays zero; the unknowns are
// the first nx·(ny-1) entries. Operators are kept in the weighted symmetric
// form K = W·(D_t - f'(u)) with W the trapezoidal node weights, so the
// eigenvalues of D_t - f'(u) are those of W^{-1/2} K W^{-1/2}.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cylbif/error.hpp"
#include "cylbif/morse_bifurcation.hpp"
#include "cylbif/nonlinearity.hpp"
#include "cylbif/ode_shooting.hpp"
#include "cylbif/sturm_liouville.hpp"

namespace cylbif {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Grid2D {
  int nx = 100;
  int ny = 100;

  Grid2D() = default;
  Grid2D(int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (nx < 16 || ny < 16) throw Error(ErrorKind::Validation, "Grid2D: nx, ny must be >= 16");
  }

  double hx() const noexcept { return 1.0 / (nx - 1); }
  double hy() const noexcept { return 1.0 / (ny - 1); }
  std::size_t nodes() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t unknowns() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny - 1); }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double s(int i) const noexcept { return i * hx(); }
  double y(int j) const noexcept { return j * hy(); }

  double wx(int i) const noexcept { return (i == 0 || i == nx - 1) ? 0.5 : 1.0; }
  double wy(int j) const noexcept { return (j == 0 || j == ny - 1) ? 0.5 : 1.0; }
};

/// Trapezoidal weights of the unknown nodes.
inline Eigen::VectorXd node_weights(const Grid2D& g) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(g.unknowns()));
  for (int j = 0; j < g.ny - 1; ++j)
    for (int i = 0; i < g.nx; ++i) w[static_cast<Eigen::Index>(g.index(i, j))] = g.wx(i) * g.wy(j);
  return w;
}

/// Weighted L² norm over the physical base (0,L) × (0,1).
inline double grid_norm(const std::vector<double>& u, const Grid2D& g, double L = 1.0) {
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double v = u[g.index(i, j)];
      s += g.wx(i) * g.wy(j) * v * v;
    }
  return std::sqrt(s * g.hx() * g.hy() * L);
}

/// W·(D_t - f'(u)) on the unknowns, symmetric.
struct LinearizedOperator {
  SparseMatrix K;
  Eigen::VectorXd weights;
  Grid2D grid;
  double t = 1.0;
  double length = 1.0;
  double potential_max = 0.0;  // max f'(u), bounds the spectrum from below

  Eigen::Index size() const noexcept { return K.rows(); }

  /// W^{-1/2} K W^{-1/2}, whose eigenvalues are those of D_t - f'(u).
  SparseMatrix symmetric() const {
    Eigen::VectorXd r = weights.cwiseSqrt().cwiseInverse();
    return r.asDiagonal() * K * r.asDiagonal();
  }
};

namespace detail {

// Weighted Laplacian part plus -W·diag(q).
inline LinearizedOperator assemble_weighted(const std::vector<double>& q, double t, double L, const Grid2D& g) {
  if (!(t > 0.0) || !(L > 0.0)) throw Error(ErrorKind::Validation, "transported operator needs t > 0 and L > 0");
  const double cx = 1.0 / ((t * L) * (t * L));
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const auto n = static_cast<Eigen::Index>(g.unknowns());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  LinearizedOperator op;
  op.grid = g;
  op.t = t;
  op.length = L;
  op.weights = node_weights(g);
  op.potential_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny - 1; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto row = static_cast<Eigen::Index>(g.index(i, j));
      const double wx = g.wx(i), wy = g.wy(j);
      double diag = 0.0;
      // s-direction edges, weight wy·cx/hx².
      if (i > 0) {
        trip.emplace_back(row, row - 1, -wy * cx * ihx2);
        diag += wy * cx * ihx2;
      }
      if (i < g.nx - 1) {
        trip.emplace_back(row, row + 1, -wy * cx * ihx2);
        diag += wy * cx * ihx2;
      }
      // y-direction edges, weight wx/hy²; the edge to the Dirichlet row only
      // contributes to the diagonal.
      if (j > 0) {
        trip.emplace_back(row, row - g.nx, -wx * ihy2);
        diag += wx * ihy2;
      }
      if (j < g.ny - 2) trip.emplace_back(row, row + g.nx, -wx * ihy2);
      diag += wx * ihy2;
      const double qn = q[g.index(i, j)];
      op.potential_max = std::max(op.potential_max, qn);
      trip.emplace_back(row, row, diag - wx * wy * qn);
    }
  }
  op.K.resize(n, n);
  op.K.setFromTriplets(trip.begin(), trip.end());
  return op;
}

}  // namespace detail

/// W·(D_t - f'(u)) for a grid vector u.
inline LinearizedOperator assemble_linearized(const std::vector<double>& u, double t, const NonlinearityModel& model,
                                              const Grid2D& grid, double L = 1.0) {
  if (u.size() != grid.nodes()) throw Error(ErrorKind::Validation, "assemble_linearized: u has wrong size");
  std::vector<double> q(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) q[k] = eval_fprime(model, u[k]);
  return detail::assemble_weighted(q, t, L, grid);
}

namespace detail {

inline SparseMatrix sparse_diagonal(const Eigen::VectorXd& d) {
  SparseMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index p = 0; p < d.size(); ++p) trip.emplace_back(p, p, d[p]);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace detail

/// The same operator plus c·I (in the unweighted sense).
inline LinearizedOperator shifted(LinearizedOperator op, double c) {
  op.K += detail::sparse_diagonal(c * op.weights);
  op.potential_max -= c;
  return op;
}

struct EigenSolveOptions {
  double tol = 1e-10;       // relative Ritz residual in the inverted spectrum
  int max_dimension = 400;  // Krylov dimension cap
};

/// The k smallest eigenvalues of D_t - f'(u): shift-invert Lanczos with full
/// reorthogonalization, shift below the spectrum so the factorization is SPD.
inline std::vector<double> smallest_eigenvalues(const LinearizedOperator& op, int k,
                                                const EigenSolveOptions& opts = {}) {
  const Eigen::Index n = op.size();
  if (k < 1 || k > n) throw Error(ErrorKind::Validation, "smallest_eigenvalues: need 1 <= k <= n");
  const double sigma = -op.potential_max - 1.0;
  SparseMatrix shiftedK = op.K;
  shiftedK += detail::sparse_diagonal(-sigma * op.weights);
  Eigen::SimplicialLDLT<SparseMatrix> solver(shiftedK);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "smallest_eigenvalues: factorization of the shifted operator failed");
  const Eigen::VectorXd sqrt_w = op.weights.cwiseSqrt();
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd y = solver.solve(sqrt_w.cwiseProduct(x));
    return sqrt_w.cwiseProduct(y);
  };

  const Eigen::Index m_max = std::min<Eigen::Index>(n, std::max<Eigen::Index>(opts.max_dimension, 2 * k + 10));
  Eigen::MatrixXd V(n, m_max);
  std::vector<double> alpha, beta;
  Eigen::VectorXd v(n);
  for (Eigen::Index p = 0; p < n; ++p) v[p] = 1.0 + 0.5 * std::sin(0.37 * static_cast<double>(p) + 0.1);
  v.normalize();
  V.col(0) = v;
  double last_resid = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < m_max; ++m) {
    Eigen::VectorXd w = apply(V.col(m));
    const double a = V.col(m).dot(w);
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd c = V.leftCols(m + 1).transpose() * w;
      w -= V.leftCols(m + 1) * c;
    }
    const double b = w.norm();
    const Eigen::Index dim = m + 1;
    const bool check = dim >= 2 * k && (dim % 10 == 0 || dim == m_max || b < 1e-14);
    if (check) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
      for (Eigen::Index p = 0; p < dim; ++p) {
        T(p, p) = alpha[static_cast<std::size_t>(p)];
        if (p + 1 < dim) T(p, p + 1) = T(p + 1, p) = beta[static_cast<std::size_t>(p)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      const auto& theta = es.eigenvalues();  // ascending; want the k largest
      bool ok = true;
      last_resid = 0.0;
      for (int q = 0; q < k; ++q) {
        const Eigen::Index idx = dim - 1 - q;
        const double r = std::abs(b * es.eigenvectors()(dim - 1, idx));
        last_resid = std::max(last_resid, r / std::abs(theta[idx]));
        if (r > opts.tol * std::abs(theta[idx])) ok = false;
      }
      if (ok || b < 1e-14) {
        std::vector<double> mu;
        for (int q = 0; q < k; ++q) mu.push_back(sigma + 1.0 / theta[dim - 1 - q]);
        std::sort(mu.begin(), mu.end());
        return mu;
      }
    }
    if (m + 1 == m_max) break;
    beta.push_back(b);
    V.col(m + 1) = w / b;
  }
  throw ConvergenceError("smallest_eigenvalues: Lanczos did not converge within dimension " + std::to_string(m_max),
                         last_resid);
}

/// Number of negative eigenvalues of D_t - f'(u), by Sylvester inertia of
/// the LDLᵀ factorization.
inline int negative_eigenvalue_count(const LinearizedOperator& op) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(op.K);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "negative_eigenvalue_count: LDLT factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  return static_cast<int>((d.array() < 0.0).count());
}

inline double one_dimensionality_deviation(const std::vector<double>& u, const Grid2D& g) {
  if (u.size() != g.nodes()) throw Error(ErrorKind::Validation, "deviation: u has wrong size");
  const double total = grid_norm(u, g);
  if (!(total > 0.0)) throw Error(ErrorKind::DegenerateInput, "deviation: u is identically zero");
  std::vector<double> diff(u.size());
  const double wsum = g.nx - 1.0;  // Σ wx
  for (int j = 0; j < g.ny; ++j) {
    double mean = 0.0;
    for (int i = 0; i < g.nx; ++i) mean += g.wx(i) * u[g.index(i, j)];
    mean /= wsum;
    for (int i = 0; i < g.nx; ++i) diff[g.index(i, j)] = u[g.index(i, j)] - mean;
  }
  return std::min(1.0, grid_norm(diff, g) / total);
}

/// 4-connected components of {|u| > tol} with constant sign.
inline int count_nodal_domains_2d(const std::vector<double>& u, const Grid2D& g, double tol) {
  if (tol < 0.0) throw Error(ErrorKind::Validation, "count_nodal_domains_2d: tol must be >= 0");
  if (u.size() != g.nodes()) throw Error(ErrorKind::Validation, "count_nodal_domains_2d: u has wrong size");
  auto sign = [&](std::size_t k) { return std::abs(u[k]) > tol ? (u[k] > 0.0 ? 1 : -1) : 0; };
  std::vector<char> seen(u.size(), 0);
  int components = 0;
  std::queue<std::pair<int, int>> q;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (seen[k] || sign(k) == 0) continue;
      const int sg = sign(k);
      ++components;
      seen[k] = 1;
      q.push({i, j});
      while (!q.empty()) {
        auto [a, b] = q.front();
        q.pop();
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int a2 = a + di[d], b2 = b + dj[d];
          if (a2 < 0 || b2 < 0 || a2 >= g.nx || b2 >= g.ny) continue;
          const std::size_t k2 = g.index(a2, b2);
          if (seen[k2] || sign(k2) != sg) continue;
          seen[k2] = 1;
          q.push({a2, b2});
        }
      }
    }
  }
  if (components == 0) throw Error(ErrorKind::DegenerateInput, "count_nodal_domains_2d: all nodes below tol");
  return components;
}

inline double default_nodal_tol_2d(const std::vector<double>& u) { return 1e-6 * max_abs(u); }

/// Discrete energy ½∫((tL)⁻²u_s² + u_y²) - F(u) over (0,L)×(0,1): edge
/// differences for the gradient, trapezoid for F. Its gradient is the
/// weighted residual, so critical points are exactly the discrete solutions.
inline double eval_energy(const std::vector<double>& u, double t, const NonlinearityModel& model, const Grid2D& g,
                          double L = 1.0) {
  if (u.size() != g.nodes()) throw Error(ErrorKind::Validation, "eval_energy: u has wrong size");
  const double cx = 1.0 / ((t * L) * (t * L));
  const double hx = g.hx(), hy = g.hy();
  double grad = 0.0, pot = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const double d = (u[g.index(i + 1, j)] - u[g.index(i, j)]) / hx;
      grad += g.wy(j) * cx * d * d;
    }
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (u[g.index(i, j + 1)] - u[g.index(i, j)]) / hy;
      grad += g.wx(i) * d * d;
    }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) pot += g.wx(i) * g.wy(j) * eval_F(model, u[g.index(i, j)]);
  return L * hx * hy * (0.5 * grad - pot);
}

struct BranchPoint {
  double t = 0.0;
  std::vector<double> solution;
  double deviation = 0.0;
  int nodal_count_2d = 0;
  int newton_iters = 0;
  double distance_to_1d = 0.0;
  double residual = 0.0;
  double energy = 0.0;
};

struct KernelMode {
  int i = 0;
  int j = 0;
  std::vector<double> w;
};

struct NewtonOptions {
  double tol = 1e-9;  // on ‖D_t u - f(u)‖∞
  int max_iters = 30;
};

/// Newton on the finite-difference form of -u'' = f(u), u'(0) = u(1) = 0, so
/// the profile is an exact discrete solution of the 2D scheme once embedded.
inline OneDimSolution polish_profile(const NonlinearityModel& model, OneDimSolution sol, double tol = 1e-12,
                                     int max_iters = 20) {
  const int m = static_cast<int>(sol.intervals());
  const double inv_h2 = static_cast<double>(m) * m;
  auto& u = sol.values;
  u.back() = 0.0;
  auto residual = [&](std::vector<double>& r) {
    double worst = 0.0;
    for (int k = 0; k < m; ++k) {
      const double left = k == 0 ? u[1] : u[static_cast<std::size_t>(k) - 1];
      const std::size_t kk = static_cast<std::size_t>(k);
      r[kk] = (2.0 * u[kk] - left - u[kk + 1]) * inv_h2 - eval_f(model, u[kk]);
      worst = std::max(worst, std::abs(r[kk]));
    }
    return worst;
  };
  std::vector<double> r(static_cast<std::size_t>(m));
  double rn = residual(r);
  // Below this the residual is rounding in the second difference.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * inv_h2 * max_abs(u);
  for (int it = 0; it < max_iters && rn > std::max(tol, floor); ++it) {
    auto op = assemble_sl_operator(linearized_potential(model, sol), m);
    // The symmetrized rows are D·A·D⁻¹ with D₀₀ = 1/√2.
    r[0] /= std::sqrt(2.0);
    for (double& v : r) v = -v;
    auto y = shifted_tridiagonal_solve(op.matrix, 0.0, r);
    y[0] *= std::sqrt(2.0);
    for (int k = 0; k < m; ++k) u[static_cast<std::size_t>(k)] += y[static_cast<std::size_t>(k)];
    rn = residual(r);
  }
  sol.residual = rn;
  sol.amplitude = u.front();
  return sol;
}

/// A fixed model, base length and grid, together with the embedded
/// one-dimensional profile u_ω and its discrete linearized spectrum on the
/// y-grid. u_ω solves the transported equation for every t.
class TransportedProblem {
 public:
  TransportedProblem(NonlinearityModel model, double length, Grid2D grid, const OneDimSolution& profile,
                     int eigen_count = 12)
      : model_(std::move(model)), length_(length), grid_(grid) {
    if (!(length > 0.0)) throw Error(ErrorKind::Validation, "TransportedProblem: L must be positive");
    profile_ = polish_profile(model_, resample(model_, profile, grid_.ny - 1));
    embedded_ = embed(profile_.values);
    spectrum_ = sl_eigenpairs(assemble_sl_operator(linearized_potential(model_, profile_), grid_.ny - 1),
                              std::min(eigen_count, grid_.ny - 2));
  }

  const NonlinearityModel& model() const noexcept { return model_; }
  double length() const noexcept { return length_; }
  const Grid2D& grid() const noexcept { return grid_; }
  const OneDimSolution& profile() const noexcept { return profile_; }
  const std::vector<double>& embedded() const noexcept { return embedded_; }
  const SturmSpectrum& spectrum() const noexcept { return spectrum_; }

  /// Replicates a y-profile (ny values) along s.
  std::vector<double> embed(const std::vector<double>& column) const {
    if (column.size() != static_cast<std::size_t>(grid_.ny))
      throw Error(ErrorKind::Validation, "embed: profile must have ny values");
    std::vector<double> u(grid_.nodes());
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i) u[grid_.index(i, j)] = j == grid_.ny - 1 ? 0.0 : column[static_cast<std::size_t>(j)];
    return u;
  }

  /// Discrete Neumann eigenvalue of -∂²_s for cos(jπs) on the s-grid.
  double discrete_base_eigenvalue(int j) const {
    const double hx = grid_.hx();
    return 2.0 / (hx * hx) * (1.0 - std::cos(j * M_PI * hx));
  }

  /// t at which αᵢ + λⱼ/(tL)² vanishes for the discrete operator.
  double discrete_bifurcation_time(int i, int j) const {
    const double a = spectrum_.alphas.at(static_cast<std::size_t>(i) - 1);
    if (!(a < 0.0)) throw Error(ErrorKind::Validation, "discrete_bifurcation_time: alpha_i must be negative");
    return std::sqrt(discrete_base_eigenvalue(j) / -a) / length_;
  }

  LinearizedOperator linearized(const std::vector<double>& u, double t) const {
    return assemble_linearized(u, t, model_, grid_, length_);
  }

  /// R(u) = D_t u - f(u) on the unknowns.
  Eigen::VectorXd residual(const std::vector<double>& u, const LinearizedOperator& lap) const {
    const auto n = static_cast<Eigen::Index>(grid_.unknowns());
    Eigen::Map<const Eigen::VectorXd> uu(u.data(), n);
    // lap carries -W f'(u); only its Laplacian part is wanted here, so it is
    // assembled with q = 0.
    Eigen::VectorXd r = (lap.K * uu).cwiseQuotient(lap.weights);
    for (Eigen::Index p = 0; p < n; ++p) r[p] -= eval_f(model_, u[static_cast<std::size_t>(p)]);
    return r;
  }

  double residual_norm(const std::vector<double>& u, double t) const {
    const auto lap = detail::assemble_weighted(std::vector<double>(grid_.nodes(), 0.0), t, length_, grid_);
    return residual(u, lap).lpNorm<Eigen::Infinity>();
  }

  BranchPoint newton_solve(std::vector<double> u, double t, const NewtonOptions& opts = {}) const {
    if (!(opts.tol > 0.0)) throw Error(ErrorKind::Validation, "newton_solve: tol must be positive");
    if (u.size() != grid_.nodes()) throw Error(ErrorKind::Validation, "newton_solve: initial guess has wrong size");
    const auto n = static_cast<Eigen::Index>(grid_.unknowns());
    const auto lap = detail::assemble_weighted(std::vector<double>(grid_.nodes(), 0.0), t, length_, grid_);
    for (int j = grid_.ny - 1, i = 0; i < grid_.nx; ++i) u[grid_.index(i, j)] = 0.0;
    Eigen::SimplicialLDLT<SparseMatrix> solver;
    Eigen::VectorXd r = residual(u, lap);
    double rnorm = r.lpNorm<Eigen::Infinity>();
    const double r0 = std::max(rnorm, 1.0);
    int iters = 0;
    bool analyzed = false;
    while (!(rnorm <= opts.tol)) {
      if (!std::isfinite(rnorm) || rnorm > 1e8 * r0)
        throw ConvergenceError("newton_solve: diverged at t = " + std::to_string(t), rnorm);
      if (iters >= opts.max_iters)
        throw ConvergenceError("newton_solve: no convergence in " + std::to_string(opts.max_iters) +
                                   " iterations at t = " + std::to_string(t),
                               rnorm);
      const auto jac = linearized(u, t);
      if (!analyzed) {
        solver.analyzePattern(jac.K);
        analyzed = true;
      }
      solver.factorize(jac.K);
      if (solver.info() != Eigen::Success)
        throw ConvergenceError("newton_solve: Jacobian factorization failed", rnorm);
      const Eigen::VectorXd delta = solver.solve(-jac.weights.cwiseProduct(r));
      for (Eigen::Index p = 0; p < n; ++p) u[static_cast<std::size_t>(p)] += delta[p];
      r = residual(u, lap);
      rnorm = r.lpNorm<Eigen::Infinity>();
      ++iters;
    }
    return describe(std::move(u), t, iters, rnorm);
  }

  /// Fills the diagnostics of a converged solution.
  BranchPoint describe(std::vector<double> u, double t, int iters, double rnorm) const {
    BranchPoint bp;
    bp.t = t;
    bp.newton_iters = iters;
    bp.residual = rnorm;
    const double unorm = grid_norm(u, grid_, length_);
    bp.deviation = unorm > 0.0 ? one_dimensionality_deviation(u, grid_) : 0.0;
    bp.nodal_count_2d = unorm > 0.0 ? count_nodal_domains_2d(u, grid_, default_nodal_tol_2d(u)) : 0;
    std::vector<double> diff(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) diff[k] = u[k] - embedded_[k];
    bp.distance_to_1d = grid_norm(diff, grid_, length_) / grid_norm(embedded_, grid_, length_);
    bp.energy = eval_energy(u, t, model_, grid_, length_);
    bp.solution = std::move(u);
    return bp;
  }

  KernelMode kernel_mode(int i, int j) const { return build_kernel_mode(spectrum_, i, j, length_, grid_); }

  static KernelMode build_kernel_mode(const SturmSpectrum& spec, int i, int j, double L, const Grid2D& grid) {
    if (spec.grid_size != grid.ny - 1)
      throw Error(ErrorKind::Validation, "build_kernel_mode: spectrum grid does not match ny - 1");
    if (i < 1 || static_cast<std::size_t>(i) > spec.alphas.size())
      throw Error(ErrorKind::Validation, "build_kernel_mode: eigenfunction index out of range");
    if (j < 0) throw Error(ErrorKind::Validation, "build_kernel_mode: j must be >= 0");
    if (j == 0 && std::abs(spec.alphas[static_cast<std::size_t>(i) - 1]) > default_tol_zero(spec.alphas))
      throw Error(ErrorKind::InvalidKernel, "build_kernel_mode: j = 0 is not a kernel direction unless alpha_i = 0");
    const auto& z = spec.eigenfunctions[static_cast<std::size_t>(i) - 1];
    KernelMode km{i, j, std::vector<double>(grid.nodes())};
    for (int jj = 0; jj < grid.ny; ++jj)
      for (int ii = 0; ii < grid.nx; ++ii)
        km.w[grid.index(ii, jj)] = z[static_cast<std::size_t>(jj)] * std::cos(j * M_PI * grid.s(ii));
    const double nrm = grid_norm(km.w, grid, L);
    for (double& v : km.w) v /= nrm;
    return km;
  }

 private:
  NonlinearityModel model_;
  double length_;
  Grid2D grid_;
  OneDimSolution profile_;
  std::vector<double> embedded_;
  SturmSpectrum spectrum_;
};

/// ‖(D_t - f'(u_ω)) w‖∞ for a grid vector w.
inline double linearized_residual(const TransportedProblem& prob, const std::vector<double>& w, double t) {
  const auto op = prob.linearized(prob.embedded(), t);
  const auto n = static_cast<Eigen::Index>(prob.grid().unknowns());
  Eigen::Map<const Eigen::VectorXd> ww(w.data(), n);
  return (op.K * ww).cwiseQuotient(op.weights).lpNorm<Eigen::Infinity>();
}

struct ContinuationOptions {
  int steps = 6;
  double dt0 = 0.0;   // 0 → 1e-2·t̄
  double eps0 = 0.0;  // 0 → 1e-2·‖u_ω‖
  int max_halvings = 6;
  // Multiples of eps0 tried in turn for the first point.
  std::vector<double> eps_ladder = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  double half_branch_sign = 1.0;  // selects +w or -w
  double t_lower = 0.0;           // continuation stops outside [t_lower, t_upper]
  double t_upper = std::numeric_limits<double>::infinity();
  NewtonOptions newton;
};

struct Branch {
  double t_bar = 0.0;           // continuum value handed in
  double t_bar_discrete = 0.0;  // degeneracy of the discrete operator
  int direction = 1;
  double eps_used = 0.0;
  std::vector<BranchPoint> points;
  std::string termination;
};

namespace detail {

inline std::vector<double> axpy(const std::vector<double>& base, double a, const std::vector<double>& dir) {
  std::vector<double> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = base[k] + a * dir[k];
  return out;
}

inline bool fell_back(const BranchPoint& bp, const NewtonOptions& opts) { return bp.distance_to_1d < 10.0 * opts.tol; }

}  // namespace detail

/// Branch switching at a simple degeneracy and natural-parameter continuation
/// away from it on the side `direction`.
inline Branch continue_branch(const TransportedProblem& prob, const BifurcationPoint& point, int direction,
                              ContinuationOptions opts = {}) {
  if (!point.simple || point.pairs.size() != 1)
    throw Error(ErrorKind::Validation, "continue_branch: bifurcation point must be simple");
  if (direction != 1 && direction != -1) throw Error(ErrorKind::Validation, "continue_branch: direction must be +-1");
  const auto [i, j] = point.pairs.front();
  Branch br;
  br.t_bar = point.t_bar;
  br.t_bar_discrete = prob.discrete_bifurcation_time(i, j);
  br.direction = direction;
  const double tb = br.t_bar_discrete;
  if (opts.dt0 <= 0.0) opts.dt0 = 1e-2 * tb;
  if (opts.eps0 <= 0.0) opts.eps0 = 1e-2 * grid_norm(prob.embedded(), prob.grid(), prob.length());
  const auto mode = prob.kernel_mode(i, j);

  double t = tb + direction * opts.dt0;
  std::optional<BranchPoint> first;
  for (double factor : opts.eps_ladder) {
    const double eps = opts.half_branch_sign * factor * opts.eps0;
    try {
      auto bp = prob.newton_solve(detail::axpy(prob.embedded(), eps, mode.w), t, opts.newton);
      if (!detail::fell_back(bp, opts.newton)) {
        br.eps_used = eps;
        first = std::move(bp);
        break;
      }
    } catch (const ConvergenceError&) {
    }
  }
  if (!first)
    throw Error(ErrorKind::BranchNotFound, "continue_branch: Newton returns to u_omega at t = " + std::to_string(t) +
                                               " for every perturbation size");
  br.points.push_back(std::move(*first));

  double dt = opts.dt0;
  br.termination = "completed";
  while (static_cast<int>(br.points.size()) < opts.steps) {
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings && !accepted; ++h) {
      if (h > 0) dt *= 0.5;
      const auto& last = br.points.back();
      const double t_next = last.t + direction * dt;
      if (!(t_next > opts.t_lower && t_next <= opts.t_upper)) {
        br.termination = "t-limit reached";
        break;
      }
      std::vector<double> guess = last.solution;
      if (br.points.size() >= 2) {
        const auto& prev = br.points[br.points.size() - 2];
        guess = detail::axpy(last.solution, (t_next - last.t) / (last.t - prev.t),
                             detail::axpy(last.solution, -1.0, prev.solution));
      }
      try {
        auto bp = prob.newton_solve(std::move(guess), t_next, opts.newton);
        if (detail::fell_back(bp, opts.newton)) continue;
        br.points.push_back(std::move(bp));
        accepted = true;
      } catch (const ConvergenceError&) {
      }
    }
    if (br.termination == "t-limit reached") break;
    if (!accepted) {
      br.termination = "step-halving exhausted";
      break;
    }
  }
  return br;
}

/// Walks a branch back toward its degeneracy at the given offsets |t - t̄|
/// (descending), scaling the previous deviation by √(offset ratio) as the
/// pitchfork predictor.
inline std::vector<BranchPoint> backtrack_branch(const TransportedProblem& prob, const Branch& br,
                                                 const std::vector<double>& offsets, const NewtonOptions& newton = {}) {
  if (br.points.empty()) throw Error(ErrorKind::Validation, "backtrack_branch: empty branch");
  std::vector<BranchPoint> out;
  out.reserve(offsets.size());
  const BranchPoint* prev = &br.points.front();
  double prev_off = std::abs(prev->t - br.t_bar_discrete);
  for (double off : offsets) {
    if (!(off > 0.0 && off < prev_off)) throw Error(ErrorKind::Validation, "backtrack_branch: offsets must shrink");
    const double scale = std::sqrt(off / prev_off);
    std::vector<double> guess(prev->solution.size());
    for (std::size_t k = 0; k < guess.size(); ++k)
      guess[k] = prob.embedded()[k] + scale * (prev->solution[k] - prob.embedded()[k]);
    auto bp = prob.newton_solve(std::move(guess), br.t_bar_discrete + br.direction * off, newton);
    if (detail::fell_back(bp, newton))
      throw Error(ErrorKind::BranchNotFound, "backtrack_branch: collapsed onto u_omega at offset " + std::to_string(off));
    out.push_back(std::move(bp));
    prev = &out.back();
    prev_off = off;
  }
  return out;
}

/// Relative distance between u and its reflection s -> 1 - s of v.
inline double reflection_distance(const std::vector<double>& u, const std::vector<double>& v, const Grid2D& g) {
  std::vector<double> diff(u.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) diff[g.index(i, j)] = u[g.index(i, j)] - v[g.index(g.nx - 1 - i, j)];
  return grid_norm(diff, g) / std::max(grid_norm(u, g), std::numeric_limits<double>::min());
}

}  // namespace cylbif

#endif  // CYLBIF_PDE_RECTANGLE_HPP
