#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"
#include "cylbif/morse_bifurcation.hpp"
#include "cylbif/pde_rectangle.hpp"
#include "support.hpp"

using namespace cylbif;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;
const NonlinearityModel kCubic = CubicFamily{0.0, 1.0};

const TransportedProblem& cubic_problem() {
  static const TransportedProblem prob(kCubic, 1.0, Grid2D(48, 48), find_one_dim_solution(kCubic, 1));
  return prob;
}

std::vector<double> separable(const Grid2D& g, int j) {
  std::vector<double> u(g.nodes());
  for (int b = 0; b < g.ny; ++b)
    for (int a = 0; a < g.nx; ++a) u[g.index(a, b)] = std::cos(j * kPi * g.s(a)) * std::cos(kPi * g.y(b) / 2);
  return u;
}

// discrete eigenvalues of the mixed y-problem and the Neumann s-problem
double dy(const Grid2D& g, int a) {
  const double h = g.hy();
  return 2.0 / (h * h) * (1.0 - std::cos((2 * a - 1) * kPi * h / 2));
}
double dx(const Grid2D& g, int b) {
  const double h = g.hx();
  return 2.0 / (h * h) * (1.0 - std::cos(b * kPi * h));
}

}  // namespace

TEST_CASE("Grid2D validation", "[pde]") {
  REQUIRE_ERROR_KIND(Grid2D(15, 40), ErrorKind::Validation);
  const Grid2D g(20, 30);
  CHECK(g.unknowns() == 20u * 29u);
  CHECK_THAT(g.hx(), WithinRel(1.0 / 19.0, 1e-15));
}

TEST_CASE("zero solution gives the separable mixed-BC Laplacian", "[pde]") {
  const Grid2D g(40, 40);
  const auto op = assemble_linearized(std::vector<double>(g.nodes(), 0.0), 1.0, LaneEmden{3.0}, g);
  const auto ev = smallest_eigenvalues(op, 5);
  std::vector<double> want;
  for (int a = 1; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) want.push_back(dy(g, a) + dx(g, b));
  std::sort(want.begin(), want.end());
  for (std::size_t k = 0; k < 5; ++k) CHECK_THAT(ev[k], WithinRel(want[k], 1e-10));
  // continuum values to second order
  CHECK_THAT(ev[0], WithinRel(kPi * kPi / 4, 2e-3));
  CHECK_THAT(ev[1], WithinRel(kPi * kPi / 4 + kPi * kPi, 2e-3));
  CHECK(op.symmetric().isApprox(SparseMatrix(op.symmetric().transpose())));
}

TEST_CASE("shifting the operator shifts every eigenvalue", "[pde]") {
  const auto& prob = cubic_problem();
  const auto op = prob.linearized(prob.embedded(), 1.3);
  const auto a = smallest_eigenvalues(op, 6);
  const auto b = smallest_eigenvalues(shifted(op, 2.5), 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK_THAT(b[k], WithinAbs(a[k] + 2.5, 1e-8));
}

TEST_CASE("2D spectrum at u_omega is the discrete alpha + lambda sum", "[pde]") {
  const auto& prob = cubic_problem();
  for (double t : {0.7, 1.0, 2.2}) {
    const auto ev = smallest_eigenvalues(prob.linearized(prob.embedded(), t), 8);
    std::vector<double> sums;
    for (double a : prob.spectrum().alphas)
      for (int j = 0; j < 12; ++j) sums.push_back(a + prob.discrete_base_eigenvalue(j) / (t * t));
    std::sort(sums.begin(), sums.end());
    for (std::size_t k = 0; k < 8; ++k) CHECK_THAT(ev[k], WithinAbs(sums[k], 1e-8 * std::max(1.0, std::abs(sums[k]))));
  }
}

TEST_CASE("kernel crossing at the discrete degeneracy", "[pde]") {
  const auto& prob = cubic_problem();
  const double tb = prob.discrete_bifurcation_time(1, 1);
  const auto at = smallest_eigenvalues(prob.linearized(prob.embedded(), tb), 3);
  double smallest = 1e300;
  for (double v : at) smallest = std::min(smallest, std::abs(v));
  CHECK(smallest < 1e-7);
  const int below = negative_eigenvalue_count(prob.linearized(prob.embedded(), tb * 0.99));
  const int above = negative_eigenvalue_count(prob.linearized(prob.embedded(), tb * 1.01));
  CHECK(below == 1);
  CHECK(above - below == 1);
}

TEST_CASE("Newton fixed points", "[pde]") {
  const auto& prob = cubic_problem();
  for (double t : {0.5, 2.0}) {
    const auto bp = prob.newton_solve(prob.embedded(), t);
    CHECK(bp.newton_iters <= 1);
    CHECK(bp.distance_to_1d <= 1e-9);
    CHECK(bp.residual <= 1e-9);
  }
  const auto zero = prob.newton_solve(std::vector<double>(prob.grid().nodes(), 0.0), 1.0);
  CHECK(max_abs(zero.solution) == 0.0);
  REQUIRE_ERROR_KIND(prob.newton_solve(prob.embedded(), 1.0, NewtonOptions{0.0, 5}), ErrorKind::Validation);
  std::vector<double> wild(prob.grid().nodes(), 50.0);
  REQUIRE_ERROR_KIND(prob.newton_solve(wild, 1.0, NewtonOptions{1e-12, 2}), ErrorKind::Convergence);
}

TEST_CASE("kernel modes", "[pde]") {
  const Grid2D g(40, 40);
  const int m = g.ny - 1;
  const auto spec = sl_eigenpairs(assemble_sl_operator(std::vector<double>(m + 1, 0.0), m), 4);
  const auto km = TransportedProblem::build_kernel_mode(spec, 1, 1, 1.0, g);
  CHECK_THAT(grid_norm(km.w, g), WithinRel(1.0, 1e-12));
  const auto ref = separable(g, 1);
  const double scale = km.w[0] / ref[0];
  for (std::size_t k = 0; k < ref.size(); k += 13) CHECK_THAT(km.w[k], WithinAbs(scale * ref[k], 1e-12));
  REQUIRE_ERROR_KIND(TransportedProblem::build_kernel_mode(spec, 1, 0, 1.0, g), ErrorKind::InvalidKernel);

  const auto& prob = cubic_problem();
  const auto w = prob.kernel_mode(1, 1);
  const double hx = prob.grid().hx(), hy = prob.grid().hy();
  CHECK(linearized_residual(prob, w.w, prob.discrete_bifurcation_time(1, 1)) <= 1e-7 * max_abs(w.w));
  // at the continuum t̄ the residual is a truncation error
  const auto pts = degeneracy_times(prob.spectrum().alphas, neumann_eigenvalues(Interval{1.0}, 40.0), 2.0);
  CHECK(linearized_residual(prob, w.w, pts[0].t_bar) <= 10.0 * (hx * hx + hy * hy) * max_abs(w.w));
}

TEST_CASE("one_dimensionality_deviation", "[pde]") {
  const auto& prob = cubic_problem();
  const auto& g = prob.grid();
  CHECK(one_dimensionality_deviation(prob.embedded(), g) <= 1e-14);
  CHECK_THAT(one_dimensionality_deviation(separable(g, 1), g), WithinAbs(1.0, 1e-12));
  const auto w = prob.kernel_mode(1, 1).w;
  const auto mixed = detail::axpy(prob.embedded(), 0.1, w);
  CHECK_THAT(one_dimensionality_deviation(mixed, g), WithinRel(0.1 * grid_norm(w, g) / grid_norm(mixed, g), 1e-2));
  REQUIRE_ERROR_KIND(one_dimensionality_deviation(std::vector<double>(g.nodes(), 0.0), g), ErrorKind::DegenerateInput);
}

TEST_CASE("count_nodal_domains_2d", "[pde]") {
  const auto& prob = cubic_problem();
  const auto& g = prob.grid();
  CHECK(count_nodal_domains_2d(prob.embedded(), g, default_nodal_tol_2d(prob.embedded())) == 1);
  const TransportedProblem two(kCubic, 1.0, g, find_one_dim_solution(kCubic, 2));
  CHECK(count_nodal_domains_2d(two.embedded(), g, default_nodal_tol_2d(two.embedded())) == 2);
  const auto sep = separable(g, 1);
  CHECK(count_nodal_domains_2d(sep, g, default_nodal_tol_2d(sep)) == 2);
  REQUIRE_ERROR_KIND(count_nodal_domains_2d(std::vector<double>(g.nodes(), 0.0), g, 0.0), ErrorKind::DegenerateInput);
}

TEST_CASE("eval_energy", "[pde]") {
  const auto& prob = cubic_problem();
  const auto& g = prob.grid();
  CHECK(eval_energy(std::vector<double>(g.nodes(), 0.0), 1.0, kCubic, g) == 0.0);
  const double e1 = eval_energy(prob.embedded(), 0.6, kCubic, g);
  const double e2 = eval_energy(prob.embedded(), 3.1, kCubic, g);
  CHECK(e1 == e2);
  CHECK(e1 > 0.0);
}

TEST_CASE("branch switching and continuation on a coarse grid", "[pde]") {
  const auto& prob = cubic_problem();
  const auto pts = degeneracy_times(prob.spectrum().alphas, neumann_eigenvalues(Interval{1.0}, 40.0), 2.0);
  REQUIRE(pts[0].simple);
  ContinuationOptions co;
  co.steps = 4;
  const auto br = continue_branch(prob, pts[0], +1, co);
  REQUIRE(br.points.size() == 4);
  CHECK(br.termination == "completed");
  const double e1d = eval_energy(prob.embedded(), br.points[0].t, kCubic, prob.grid());
  for (std::size_t k = 0; k < br.points.size(); ++k) {
    const auto& p = br.points[k];
    CHECK(p.residual <= co.newton.tol);
    CHECK(p.deviation > 1e-3);
    CHECK(p.distance_to_1d > 0.0);
    CHECK(p.nodal_count_2d == 1);
    CHECK(negative_eigenvalue_count(prob.linearized(p.solution, p.t)) >= p.nodal_count_2d);
    CHECK(p.energy != e1d);
    if (k > 0) CHECK(p.t > br.points[k - 1].t);
  }

  auto mirror = co;
  mirror.half_branch_sign = -1.0;
  mirror.steps = 1;
  const auto other = continue_branch(prob, pts[0], +1, mirror);
  CHECK(reflection_distance(br.points[0].solution, other.points[0].solution, prob.grid()) < 1e-6);

  std::vector<double> offs;
  double off = br.points[0].t - br.t_bar_discrete;
  for (int k = 0; k < 3; ++k) offs.push_back(off *= 0.2);
  const auto back = backtrack_branch(prob, br, offs, co.newton);
  REQUIRE(back.size() == 3);
  CHECK(back[0].distance_to_1d < br.points[0].distance_to_1d);
  CHECK(back[1].distance_to_1d < back[0].distance_to_1d);
  CHECK(back[2].distance_to_1d < back[1].distance_to_1d);

  auto limited = co;
  limited.steps = 50;
  limited.t_upper = br.points[0].t + 2.5 * br.points[0].t * 1e-2;
  CHECK(continue_branch(prob, pts[0], +1, limited).termination == "t-limit reached");
}

TEST_CASE("continuation error paths", "[pde]") {
  const auto& prob = cubic_problem();
  BifurcationPoint twofold;
  twofold.t_bar = 1.0;
  twofold.pairs = {{1, 1}};
  twofold.kernel_multiplicity = 2;
  twofold.simple = false;
  REQUIRE_ERROR_KIND(continue_branch(prob, twofold, 1), ErrorKind::Validation);
  // subcritical side: Newton falls back to u_omega
  const auto pts = degeneracy_times(prob.spectrum().alphas, neumann_eigenvalues(Interval{1.0}, 40.0), 2.0);
  ContinuationOptions co;
  co.eps_ladder = {1.0, 2.0, 4.0};
  REQUIRE_ERROR_KIND(continue_branch(prob, pts[0], -1, co), ErrorKind::BranchNotFound);
}
