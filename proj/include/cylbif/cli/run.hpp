#ifndef CYLBIF_CLI_RUN_HPP
#define CYLBIF_CLI_RUN_HPP

// Subcommand orchestration: each subcommand writes <subcommand>.csv and
// summary.json into the output directory and maps failures onto exit codes.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cylbif/base_spectrum.hpp"
#include "cylbif/cli/config.hpp"
#include "cylbif/cli/csv.hpp"
#include "cylbif/log.hpp"
#include "cylbif/morse_bifurcation.hpp"
#include "cylbif/nonlinearity.hpp"
#include "cylbif/ode_shooting.hpp"
#include "cylbif/pde_rectangle.hpp"
#include "cylbif/sturm_liouville.hpp"

namespace cylbif::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kNonConvergence = 3,
  kNoSolution = 4,
  kUsage = 64,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Convergence:
    case ErrorKind::Stagnation:
    case ErrorKind::Overflow:
      return kNonConvergence;
    case ErrorKind::NoSolution:
    case ErrorKind::BranchNotFound:
      return kNoSolution;
    default:
      return kValidation;
  }
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"check-f",   "solve-1d",           "spectrum-1d",          "base-eigs",
                                                 "morse",     "bifurcation-points", "verify-decomposition", "continue"};
  return names;
}

struct RunOptions {
  int threads = 1;
  std::uint64_t seed = 42;
};

/// Runs fn(k) for k in [0, count) on up to `threads` workers; each index is
/// written by exactly one worker.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class Runner {
 public:
  Runner(RunConfig config, RunOptions opts) : cfg_(std::move(config)), opts_(opts) {
    summary_["schema_version"] = kSchemaVersion;
    json hashed = cfg_.raw;
    hashed.erase("output_dir");
    summary_["config_hash"] = config_hash(hashed);
    summary_["grids"] = cfg_.raw.at("grids");
    summary_["tolerances"] = cfg_.raw.at("tolerances");
    summary_["model"] = cfg_.model.describe();
    summary_["seed"] = opts_.seed;
  }

  int run(const std::string& sub) {
    summary_["subcommand"] = sub;
    std::filesystem::create_directories(cfg_.output_dir);
    int code = kOk;
    try {
      if (sub == "check-f") code = check_f();
      else if (sub == "solve-1d") solve_1d();
      else if (sub == "spectrum-1d") spectrum_1d();
      else if (sub == "base-eigs") base_eigs();
      else if (sub == "morse") morse();
      else if (sub == "bifurcation-points") bifurcation_points();
      else if (sub == "verify-decomposition") verify_decomposition();
      else if (sub == "continue") code = continue_branches();
      else return kUsage;
    } catch (const Error& e) {
      log::error(e.what());
      summary_["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
      code = exit_code_for(e.kind());
    }
    summary_["exit_code"] = code;
    write_summary();
    return code;
  }

  const json& summary() const noexcept { return summary_; }

 private:
  std::string path(const std::string& name) const { return (std::filesystem::path(cfg_.output_dir) / name).string(); }

  void write_summary() const {
    std::ofstream out(path("summary.json"));
    out << summary_.dump(2) << '\n';
  }

  ShootingConfig shooting_config(int steps) const {
    ShootingConfig sc;
    sc.steps = steps;
    const json& sh = cfg_.raw.at("shooting");
    sc.amplitude_low = sh.at("amplitude_low").get<double>();
    sc.amplitude_high = sh.at("amplitude_high").get<double>();
    sc.max_bisect = sh.at("max_bisect").get<int>();
    sc.tol_amplitude = cfg_.tol("tol_amplitude");
    sc.tol_terminal = cfg_.tol("tol_terminal");
    return sc;
  }

  void require_hypotheses() const {
    const auto samples = default_hypothesis_samples();
    const auto rep = check_hypotheses(cfg_.model, samples);
    if (!rep.ok()) throw Error(ErrorKind::Validation, "model " + cfg_.model.describe() + " violates the hypotheses");
  }

  const OneDimSolution& profile() {
    if (!profile_) {
      require_hypotheses();
      profile_ = find_one_dim_solution(cfg_.model, cfg_.nodal_n, shooting_config(cfg_.ode_M));
      log::info("profile amplitude " + format_double(profile_->amplitude));
    }
    return *profile_;
  }

  int eigen_count() const {
    const int k = cfg_.raw.at("eigen_count").get<int>();
    return k > 0 ? k : default_eigen_count(cfg_.nodal_n);
  }

  /// Alphas used downstream: the synthetic override, or the computed
  /// spectrum (Richardson-extrapolated over eig_M/4, eig_M/2, eig_M when
  /// requested). Returns {alphas, complete-below bound}.
  std::pair<std::vector<double>, double> alphas(bool force_richardson = false) {
    if (cfg_.alphas) {
      summary_["alphas_source"] = "config";
      return {*cfg_.alphas, std::numeric_limits<double>::infinity()};
    }
    const auto& sol = profile();
    const int k = eigen_count();
    if (force_richardson || cfg_.raw.at("richardson").get<bool>()) {
      if (cfg_.eig_M % 4 != 0) throw Error(ErrorKind::Validation, "richardson needs eig_M divisible by 4");
      auto ex = richardson_spectrum([&](int m) { return linearized_potential(cfg_.model, resample(cfg_.model, sol, m)); },
                                    k, {cfg_.eig_M / 4, cfg_.eig_M / 2, cfg_.eig_M});
      summary_["alphas_source"] = "richardson";
      summary_["alpha_error_estimates"] = ex.error_estimate;
      return {ex.alphas, ex.alphas.back()};
    }
    auto spec = one_dim_spectrum(cfg_.model, sol, cfg_.eig_M, k);
    summary_["alphas_source"] = "fd";
    return {spec.alphas, spec.alphas.back()};
  }

  BaseSpectrumOptions base_options() const {
    BaseSpectrumOptions o;
    o.merge_rel_tol = cfg_.tol("merge_rel_tol");
    o.rotation_invariant_only = cfg_.raw.at("rotation_invariant").get<bool>();
    return o;
  }

  std::vector<double> t_grid() const {
    std::vector<double> ts(static_cast<std::size_t>(cfg_.t_samples));
    for (int k = 0; k < cfg_.t_samples; ++k)
      ts[static_cast<std::size_t>(k)] = cfg_.t_min + (cfg_.t_max - cfg_.t_min) * k / (cfg_.t_samples - 1);
    return ts;
  }

  double interval_length() const {
    auto* iv = std::get_if<Interval>(&cfg_.base);
    if (!iv) throw Error(ErrorKind::Validation, "this subcommand needs an interval base");
    return iv->length;
  }

  // --- subcommands -------------------------------------------------------

  int check_f() {
    const auto samples = default_hypothesis_samples();
    const auto rep = check_hypotheses(cfg_.model, samples);
    CsvWriter csv(path("check-f.csv"), {"s", "f", "fprime", "F", "superlinear_ok", "sign_ok"});
    for (double s : samples) {
      const double f = eval_f(cfg_.model, s);
      csv.cell(s).cell(f).cell(eval_fprime(cfg_.model, s)).cell(eval_F(cfg_.model, s));
      csv.cell(eval_fprime(cfg_.model, s) * s * s - f * s > 0.0).cell(s * f > 0.0);
      csv.end_row();
    }
    summary_["results"] = {{"superlinear", rep.superlinear},
                           {"sign", rep.sign},
                           {"superlinear_failures", rep.superlinear_failures.size()},
                           {"sign_failures", rep.sign_failures.size()}};
    return rep.ok() ? kOk : kValidation;
  }

  void solve_1d() {
    const auto& sol = profile();
    CsvWriter csv(path("solve-1d.csv"), {"x", "u", "uprime"});
    for (std::size_t k = 0; k < sol.values.size(); ++k) {
      csv.cell(sol.x(k)).cell(sol.values[k]).cell(sol.derivative_values[k]);
      csv.end_row();
    }
    summary_["results"] = {{"amplitude", sol.amplitude}, {"nodal_count", sol.nodal_count}, {"residual", sol.residual}};
  }

  void spectrum_1d() {
    const auto& sol = profile();
    const auto spec = one_dim_spectrum(cfg_.model, sol, cfg_.eig_M, eigen_count());
    CsvWriter csv(path("spectrum-1d.csv"), {"i", "alpha_i", "zero_count_i"});
    for (std::size_t i = 0; i < spec.alphas.size(); ++i) {
      csv.cell(i + 1).cell(spec.alphas[i]).cell(spec.zero_counts[i]);
      csv.end_row();
    }
    if (cfg_.raw.at("write_eigenfunctions").get<bool>()) {
      for (std::size_t i = 0; i < spec.eigenfunctions.size(); ++i) {
        CsvWriter ef(path("eigenfunction_" + std::to_string(i + 1) + ".csv"), {"x", "z"});
        const auto& z = spec.eigenfunctions[i];
        for (std::size_t k = 0; k < z.size(); ++k) {
          ef.cell(static_cast<double>(k) / spec.grid_size).cell(z[k]);
          ef.end_row();
        }
      }
    }
    json results = {{"m_xn", one_dim_morse(spec)},
                    {"nondegeneracy_margin", nondegeneracy_margin(spec)},
                    {"oscillation_ok", oscillation_check(spec)},
                    {"alphas", spec.alphas}};
    if (cfg_.raw.at("richardson").get<bool>()) results["alphas_extrapolated"] = alphas(true).first;
    summary_["results"] = results;
  }

  void base_eigs() {
    const double cutoff = cfg_.raw.at("cutoff").get<double>();
    const auto spec = neumann_eigenvalues(cfg_.base, cutoff, base_options());
    CsvWriter csv(path("base-eigs.csv"), {"j", "lambda_j", "multiplicity", "label"});
    for (std::size_t j = 0; j < spec.levels.size(); ++j) {
      csv.cell(j).cell(spec.levels[j].value).cell(spec.levels[j].multiplicity).cell(spec.levels[j].label());
      csv.end_row();
    }
    summary_["results"] = {{"levels", spec.levels.size()},
                           {"eigenvalues_with_multiplicity", counting_function(spec, cutoff)},
                           {"cutoff", cutoff}};
  }

  BaseSpectrum unit_base_for(const std::vector<double>& a, double t_max) const {
    const double need = std::max(1.0, -a.front()) * t_max * t_max * (1.0 + 1e-6) + 1.0;
    return neumann_eigenvalues(cfg_.base, std::max(cfg_.raw.at("cutoff").get<double>(), need), base_options());
  }

  void morse() {
    const auto [a, complete] = alphas();
    (void)complete;
    const auto base = unit_base_for(a, cfg_.t_max);
    const auto rep = morse_index(a, base, cfg_.tol("tol_zero_rel") * std::max(1.0, std::abs(a.front())));
    const auto ts = t_grid();
    std::vector<MorseSample> samples(ts.size());
    parallel_for(ts.size(), opts_.threads, [&](std::size_t k) {
      samples[k] = morse_vs_t(a, base, std::span<const double>(&ts[k], 1)).front();
    });
    CsvWriter csv(path("morse.csv"), {"t", "m"});
    json degenerate = json::array();
    for (const auto& s : samples) {
      csv.cell(s.t).cell(s.m);
      csv.end_row();
      if (s.degenerate) degenerate.push_back(s.t);
    }
    json results = {{"m_xn", rep.m_xn},
                    {"m", rep.m},
                    {"contributions", rep.contributions},
                    {"degenerate", rep.degenerate},
                    {"zero_multiplicity", rep.zero_multiplicity},
                    {"tol_zero", rep.tol_zero},
                    {"degenerate_samples", degenerate},
                    {"ground_state_flag", a.front() < 0.0 ? json(ground_state_flag(a, base)) : json(nullptr)}};
    const int checks = cfg_.raw.at("random_checks").get<int>();
    if (checks > 0) results["random_checks"] = random_morse_checks(checks);
    summary_["results"] = results;
  }

  json random_morse_checks(int count) const {
    std::mt19937_64 rng(opts_.seed);
    auto uniform = [&](double lo, double hi) {
      return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    int agree = 0;
    for (int c = 0; c < count; ++c) {
      std::vector<double> a(2 + rng() % 5);
      for (auto& v : a) v = uniform(-80.0, 20.0);
      a.push_back(uniform(0.5, 40.0));
      std::sort(a.begin(), a.end());
      BaseDomain d = (rng() % 2) ? BaseDomain(Interval{uniform(0.3, 4.0)}) : BaseDomain(Rectangle{uniform(0.3, 3.0), uniform(0.3, 3.0)});
      const auto base = neumann_eigenvalues(d, 100.0);
      const auto rep = morse_index(a, base);
      std::size_t brute = 0;
      for (double ai : a)
        for (const auto& l : base.levels)
          if (ai + l.value < 0.0) brute += static_cast<std::size_t>(l.multiplicity);
      if (brute == static_cast<std::size_t>(rep.m)) ++agree;
    }
    return {{"count", count}, {"agree", agree}};
  }

  void bifurcation_points() {
    const auto [a, complete] = alphas();
    (void)complete;
    const auto base = unit_base_for(a, cfg_.t_max);
    const auto points = degeneracy_times(a, base, cfg_.t_max, cfg_.tol("group_rel_tol"));
    CsvWriter csv(path("bifurcation-points.csv"), {"t_bar", "i", "j", "multiplicity", "simple"});
    for (const auto& p : points) {
      for (const auto& pr : p.pairs) {
        csv.cell(p.t_bar).cell(pr.i).cell(pr.j).cell(p.kernel_multiplicity).cell(p.simple);
        csv.end_row();
      }
    }
    summary_["results"] = {{"count", points.size()}, {"t_max", cfg_.t_max}};
  }

  void verify_decomposition() {
    const double L = interval_length();
    const auto& sol = profile();
    const auto [a, complete] = alphas(true);
    const int k = cfg_.raw.at("decomposition_count").get<int>();
    const double t = cfg_.raw.at("decomposition_t").get<double>();
    TransportedProblem prob(cfg_.model, L, Grid2D(cfg_.nx, cfg_.ny), sol, eigen_count());
    EigenSolveOptions eo;
    eo.tol = cfg_.tol("lanczos_tol");
    const auto ev = smallest_eigenvalues(prob.linearized(prob.embedded(), t), k, eo);
    const double reach = a.back();
    auto base = scale_spectrum(neumann_eigenvalues(Interval{L}, (reach - a.front()) * t * t + 1.0), t);
    const auto composed = compose_spectrum(a, base, reach, complete).values();
    if (composed.size() < static_cast<std::size_t>(k))
      throw Error(ErrorKind::Coverage, "verify-decomposition: composed spectrum too short, raise eigen_count");
    CsvWriter csv(path("verify-decomposition.csv"), {"k", "eig_2d", "composed", "rel_error"});
    double worst = 0.0;
    for (int q = 0; q < k; ++q) {
      const double c = composed[static_cast<std::size_t>(q)];
      const double rel = std::abs(ev[static_cast<std::size_t>(q)] - c) / std::abs(c);
      worst = std::max(worst, rel);
      csv.cell(q + 1).cell(ev[static_cast<std::size_t>(q)]).cell(c).cell(rel);
      csv.end_row();
    }
    summary_["results"] = {{"worst_rel_error", worst}, {"t", t}, {"nx", cfg_.nx}, {"ny", cfg_.ny}};
  }

  void dump_solution(const std::string& name, const BranchPoint& bp, const Grid2D& g, double L) const {
    CsvWriter csv(path(name), {"x_prime", "x_N", "u"});
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        csv.cell(L * g.s(i)).cell(g.y(j)).cell(bp.solution[g.index(i, j)]);
        csv.end_row();
      }
  }

  int continue_branches() {
    const double L = interval_length();
    const auto& sol = profile();
    const auto [a, complete] = alphas(true);
    (void)complete;
    const json& cc = cfg_.raw.at("continuation");
    const int pi = cc.at("pair").at(0).get<int>(), pj = cc.at("pair").at(1).get<int>();
    const auto points = degeneracy_times(a, unit_base_for(a, cfg_.t_max), cfg_.t_max, cfg_.tol("group_rel_tol"));
    const BifurcationPoint* target = nullptr;
    for (const auto& p : points)
      for (const auto& pr : p.pairs)
        if (pr.i == pi && pr.j == pj) target = &p;
    if (!target) throw Error(ErrorKind::Validation, "continue: pair (i,j) has no degeneracy below t_max");
    if (!target->simple) throw Error(ErrorKind::Validation, "continue: selected degeneracy is not simple");

    TransportedProblem prob(cfg_.model, L, Grid2D(cfg_.nx, cfg_.ny), sol, eigen_count());
    ContinuationOptions co;
    co.steps = cc.at("steps").get<int>();
    co.max_halvings = cc.at("max_halvings").get<int>();
    co.newton.tol = cfg_.tol("newton_tol");
    co.t_lower = cfg_.t_min;
    co.t_upper = cfg_.t_max;
    const double tb = prob.discrete_bifurcation_time(pi, pj);
    co.dt0 = cc.at("dt0_rel").get<double>() * tb;
    co.eps0 = cc.at("eps0_rel").get<double>() * grid_norm(prob.embedded(), prob.grid(), L);

    struct Outcome {
      std::string name;
      std::optional<Branch> branch;
      std::vector<BranchPoint> back;
      std::string note;
    };
    std::vector<Outcome> outcomes = {{"plus", {}, {}, {}}, {"minus", {}, {}, {}}};
    parallel_for(outcomes.size(), opts_.threads, [&](std::size_t k) {
      ContinuationOptions local = co;
      local.half_branch_sign = k == 0 ? 1.0 : -1.0;
      for (int dir : {1, -1}) {
        try {
          outcomes[k].branch = continue_branch(prob, *target, dir, local);
          break;
        } catch (const Error& e) {
          outcomes[k].note += std::string(dir > 0 ? "t+: " : "t-: ") + e.what() + "; ";
        }
      }
      if (!outcomes[k].branch) return;
      const int nb = cc.at("backtrack").get<int>();
      const double ratio = cc.at("backtrack_ratio").get<double>();
      std::vector<double> offs;
      double off = std::abs(outcomes[k].branch->points.front().t - outcomes[k].branch->t_bar_discrete);
      for (int b = 0; b < nb; ++b) offs.push_back(off *= ratio);
      try {
        outcomes[k].back = backtrack_branch(prob, *outcomes[k].branch, offs, co.newton);
      } catch (const Error& e) {
        outcomes[k].note += std::string("backtrack: ") + e.what();
      }
    });

    CsvWriter csv(path("continue.csv"),
                  {"branch", "phase", "t", "deviation", "distance_to_1d", "nodal_count", "newton_iters", "energy"});
    json branches = json::array();
    const bool dump = cc.at("dump_solutions").get<bool>();
    bool any = false;
    for (const auto& o : outcomes) {
      json jb = {{"name", o.name}, {"found", o.branch.has_value()}, {"note", o.note}};
      if (o.branch) {
        any = true;
        const auto& br = *o.branch;
        jb["direction"] = br.direction;
        jb["eps_used"] = br.eps_used;
        jb["termination"] = br.termination;
        jb["points"] = br.points.size();
        jb["t_last"] = br.points.back().t;
        for (std::size_t q = 0; q < br.points.size(); ++q) {
          const auto& p = br.points[q];
          csv.cell(o.name).cell("continue").cell(p.t).cell(p.deviation).cell(p.distance_to_1d);
          csv.cell(p.nodal_count_2d).cell(p.newton_iters).cell(p.energy);
          csv.end_row();
          if (dump) dump_solution("branch_" + o.name + "_" + std::to_string(q) + ".csv", p, prob.grid(), L);
        }
        for (const auto& p : o.back) {
          csv.cell(o.name).cell("backtrack").cell(p.t).cell(p.deviation).cell(p.distance_to_1d);
          csv.cell(p.nodal_count_2d).cell(p.newton_iters).cell(p.energy);
          csv.end_row();
        }
      }
      branches.push_back(jb);
    }
    json results = {{"t_bar", target->t_bar},
                    {"t_bar_discrete", tb},
                    {"pair", {pi, pj}},
                    {"one_dim_energy", eval_energy(prob.embedded(), tb, cfg_.model, prob.grid(), L)},
                    {"branches", branches}};
    if (outcomes[0].branch && outcomes[1].branch &&
        outcomes[0].branch->points.front().t == outcomes[1].branch->points.front().t)
      results["reflection_distance"] = reflection_distance(outcomes[0].branch->points.front().solution,
                                                           outcomes[1].branch->points.front().solution, prob.grid());
    summary_["results"] = results;
    if (!any) {
      summary_["error"] = {{"kind", "branch-not-found"}, {"message", "no half-branch found on either side"}};
      return kNoSolution;
    }
    return kOk;
  }

  RunConfig cfg_;
  RunOptions opts_;
  json summary_;
  std::optional<OneDimSolution> profile_;
};

/// Entry point shared by the executable and the tests.
inline int run(const std::string& subcommand, const RunConfig& config, const RunOptions& opts = {}) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
    log::error("unknown subcommand '" + subcommand + "'");
    return kUsage;
  }
  Runner runner(config, opts);
  return runner.run(subcommand);
}

}  // namespace cylbif::cli

#endif  // CYLBIF_CLI_RUN_HPP
