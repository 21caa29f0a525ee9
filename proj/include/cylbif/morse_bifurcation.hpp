#ifndef CYLBIF_MORSE_BIFURCATION_HPP
#define CYLBIF_MORSE_BIFURCATION_HPP

// Full linearized spectrum of a one-dimensional profile as the sums αᵢ + λⱼ,
// the resulting Morse index, and the scalings t̄ at which a sum vanishes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cylbif/base_spectrum.hpp"
#include "cylbif/error.hpp"
#include "cylbif/log.hpp"

namespace cylbif {

struct ComposedEntry {
  double value = 0.0;
  int i = 0;  // 1-based index into alphas
  int j = 0;  // base level index, 0 for λ₀
  int multiplicity = 1;
};

struct ComposedSpectrum {
  std::vector<ComposedEntry> entries;
  double cutoff = 0.0;

  std::size_t negative_count() const {
    std::size_t c = 0;
    for (const auto& e : entries)
      if (e.value < 0.0) c += static_cast<std::size_t>(e.multiplicity);
    return c;
  }

  /// Values with multiplicity, ascending.
  std::vector<double> values() const {
    std::vector<double> out;
    for (const auto& e : entries) out.insert(out.end(), static_cast<std::size_t>(e.multiplicity), e.value);
    return out;
  }
};

/// `alpha_complete_below`: every α not in the list exceeds this value. A
/// finite synthetic list is complete (infinity); a computed spectrum is only
/// complete up to its largest entry.
inline ComposedSpectrum compose_spectrum(std::span<const double> alphas, const BaseSpectrum& base, double cutoff,
                                         double alpha_complete_below = std::numeric_limits<double>::infinity()) {
  if (alphas.empty()) throw Error(ErrorKind::Validation, "compose_spectrum: empty alpha list");
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw Error(ErrorKind::Validation, "compose_spectrum: alphas must be sorted");
  if (alpha_complete_below < cutoff)
    throw Error(ErrorKind::Coverage, "compose_spectrum: alpha list does not reach the cutoff");
  if (base.cutoff < cutoff - alphas.front())
    throw Error(ErrorKind::Coverage, "compose_spectrum: base spectrum enumerated only to " +
                                         std::to_string(base.cutoff) + ", need " +
                                         std::to_string(cutoff - alphas.front()));
  ComposedSpectrum out;
  out.cutoff = cutoff;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    for (std::size_t j = 0; j < base.levels.size(); ++j) {
      const double v = alphas[i] + base.levels[j].value;
      if (v > cutoff) break;
      out.entries.push_back({v, static_cast<int>(i) + 1, static_cast<int>(j), base.levels[j].multiplicity});
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const ComposedEntry& a, const ComposedEntry& b) { return a.value < b.value; });
  return out;
}

inline double default_tol_zero(std::span<const double> alphas) {
  return 1e-8 * std::max(1.0, alphas.empty() ? 0.0 : std::abs(alphas.front()));
}

struct MorseReport {
  int m = 0;
  int m_xn = 0;
  std::vector<int> contributions;  // per negative αᵢ: #{j >= 1 : λⱼ < -αᵢ}
  bool degenerate = false;
  int zero_multiplicity = 0;
  double tol_zero = 0.0;
};

inline MorseReport morse_index(std::span<const double> alphas, const BaseSpectrum& base,
                               std::optional<double> tol_zero = std::nullopt) {
  if (alphas.empty() || !std::is_sorted(alphas.begin(), alphas.end()))
    throw Error(ErrorKind::Validation, "morse_index: alphas must be nonempty and sorted");
  if (alphas.back() < 0.0)
    throw Error(ErrorKind::InsufficientSpectrum, "morse_index: no nonnegative alpha, one-dimensional index unknown");
  MorseReport r;
  r.tol_zero = tol_zero.value_or(default_tol_zero(alphas));
  for (double a : alphas)
    if (a < 0.0) ++r.m_xn;
  if (r.m_xn > 0 && base.cutoff < -alphas.front())
    throw Error(ErrorKind::Coverage, "morse_index: base spectrum does not reach -alpha_1");
  r.m = r.m_xn;
  for (int i = 0; i < r.m_xn; ++i) {
    int c = 0;
    for (std::size_t j = 1; j < base.levels.size(); ++j)
      if (base.levels[j].value < -alphas[static_cast<std::size_t>(i)]) c += base.levels[j].multiplicity;
    r.contributions.push_back(c);
    r.m += c;
  }
  // Degeneracy: some sum within tol_zero of zero. Sums with α >= λ_cutoff
  // cannot be small, so the enumerated base suffices.
  for (double a : alphas) {
    for (const auto& l : base.levels) {
      if (std::abs(a + l.value) < r.tol_zero) {
        r.degenerate = true;
        r.zero_multiplicity += l.multiplicity;
      }
    }
  }
  // Independent route: count negative entries of the composed multiset.
  const auto composed = compose_spectrum(alphas, base, 0.0);
  if (composed.negative_count() != static_cast<std::size_t>(r.m))
    throw std::logic_error("morse_index: formula and composed spectrum disagree");
  return r;
}

struct BifurcationPair {
  int i = 0;
  int j = 0;
};

struct BifurcationPoint {
  double t_bar = 0.0;
  std::vector<BifurcationPair> pairs;
  int kernel_multiplicity = 0;
  bool simple = false;
  bool coincidental = false;  // distinct (i, j) pairs merged by tolerance
};

inline std::vector<BifurcationPoint> degeneracy_times(std::span<const double> alphas, const BaseSpectrum& base,
                                                      double t_max, double group_rel_tol = 1e-9) {
  if (!(t_max > 0.0)) throw Error(ErrorKind::Validation, "degeneracy_times: t_max must be positive");
  std::vector<BifurcationPoint> raw;
  if (alphas.empty() || !(alphas.front() < 0.0)) return raw;
  if (base.cutoff < -alphas.front() * t_max * t_max)
    throw Error(ErrorKind::Coverage, "degeneracy_times: base spectrum must reach (-alpha_1) t_max^2 = " +
                                         std::to_string(-alphas.front() * t_max * t_max));
  for (std::size_t i = 0; i < alphas.size() && alphas[i] < 0.0; ++i) {
    for (std::size_t j = 1; j < base.levels.size(); ++j) {
      const double t = std::sqrt(base.levels[j].value / -alphas[i]);
      if (t > t_max) break;
      raw.push_back({t, {{static_cast<int>(i) + 1, static_cast<int>(j)}}, base.levels[j].multiplicity, false, false});
    }
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const BifurcationPoint& a, const BifurcationPoint& b) { return a.t_bar < b.t_bar; });
  std::vector<BifurcationPoint> out;
  for (auto& p : raw) {
    if (!out.empty() && p.t_bar - out.back().t_bar <= group_rel_tol * p.t_bar) {
      auto& q = out.back();
      q.pairs.push_back(p.pairs.front());
      q.kernel_multiplicity += p.kernel_multiplicity;
      q.coincidental = true;
      log::info("warning: distinct pairs share t_bar = " + std::to_string(q.t_bar) + "; reported as non-simple");
      continue;
    }
    out.push_back(std::move(p));
  }
  for (auto& p : out) p.simple = p.kernel_multiplicity == 1;
  return out;
}

struct MorseSample {
  double t = 0.0;
  int m = 0;
  bool degenerate = false;
};

inline std::vector<MorseSample> morse_vs_t(std::span<const double> alphas, const BaseSpectrum& base,
                                           std::span<const double> t_grid) {
  std::vector<MorseSample> out;
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t > prev)) throw Error(ErrorKind::Validation, "morse_vs_t: t grid must be positive and ascending");
    prev = t;
    const auto r = morse_index(alphas, scale_spectrum(base, t));
    out.push_back({t, r.m, r.degenerate});
  }
  return out;
}

/// True iff λ₁(ω) < -α₁: a Morse-index-one solution cannot be one-dimensional.
inline bool ground_state_flag(std::span<const double> alphas, const BaseSpectrum& base) {
  if (alphas.empty() || !(alphas.front() < 0.0))
    throw Error(ErrorKind::Validation, "ground_state_flag: requires alpha_1 < 0");
  if (base.levels.size() < 2) {
    if (base.cutoff >= -alphas.front()) return false;
    throw Error(ErrorKind::Coverage, "ground_state_flag: base spectrum does not reach -alpha_1");
  }
  return base.levels[1].value < -alphas.front();
}

}  // namespace cylbif

#endif  // CYLBIF_MORSE_BIFURCATION_HPP
