#ifndef CYLBIF_BASE_SPECTRUM_HPP
#define CYLBIF_BASE_SPECTRUM_HPP

// Neumann eigenvalues of the base ω (interval, rectangle or disk), merged into
// distinct levels with multiplicities, and their behaviour under ω -> tω.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "cylbif/bessel.hpp"
#include "cylbif/error.hpp"

namespace cylbif {

struct Interval {
  double length = 1.0;
};
struct Rectangle {
  double a = 1.0;
  double b = 1.0;
};
struct Disk {
  double radius = 1.0;
};

using BaseDomain = std::variant<Interval, Rectangle, Disk>;

inline void validate(const BaseDomain& domain) {
  const bool ok = std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval>) return d.length > 0.0 && std::isfinite(d.length);
        else if constexpr (std::is_same_v<T, Rectangle>) return d.a > 0.0 && d.b > 0.0 && std::isfinite(d.a * d.b);
        else return d.radius > 0.0 && std::isfinite(d.radius);
      },
      domain);
  if (!ok) throw Error(ErrorKind::Validation, "base domain dimensions must be positive and finite");
}

inline int dimension(const BaseDomain& domain) { return std::holds_alternative<Interval>(domain) ? 1 : 2; }

inline double measure(const BaseDomain& domain) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval>) return d.length;
        else if constexpr (std::is_same_v<T, Rectangle>) return d.a * d.b;
        else return M_PI * d.radius * d.radius;
      },
      domain);
}

inline BaseDomain scaled(const BaseDomain& domain, double t) {
  if (!(t > 0.0)) throw Error(ErrorKind::Domain, "scaling factor must be positive");
  return std::visit(
      [t](const auto& d) -> BaseDomain {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval>) return Interval{d.length * t};
        else if constexpr (std::is_same_v<T, Rectangle>) return Rectangle{d.a * t, d.b * t};
        else return Disk{d.radius * t};
      },
      domain);
}

struct BaseLevel {
  double value = 0.0;
  int multiplicity = 1;
  std::vector<std::string> labels;

  std::string label() const {
    std::string s;
    for (std::size_t i = 0; i < labels.size(); ++i) s += (i ? "|" : "") + labels[i];
    return s;
  }
};

/// Distinct Neumann levels ≤ cutoff, λ₀ = 0 first. Every eigenvalue above
/// `cutoff` is absent, every one at or below it is present.
struct BaseSpectrum {
  std::vector<BaseLevel> levels;
  double cutoff = 0.0;

  std::size_t size() const noexcept { return levels.size(); }

  /// Eigenvalue list with repetitions.
  std::vector<double> with_multiplicity() const {
    std::vector<double> out;
    for (const auto& l : levels) out.insert(out.end(), static_cast<std::size_t>(l.multiplicity), l.value);
    return out;
  }

  /// First positive level, if enumerated.
  double lambda1() const {
    if (levels.size() < 2)
      throw Error(ErrorKind::Coverage, "base spectrum has no positive level below its cutoff");
    return levels[1].value;
  }
};

struct BaseSpectrumOptions {
  double merge_rel_tol = 1e-9;
  std::size_t max_modes = 200000;
  bool rotation_invariant_only = false;  // disk: keep ν = 0 only
};

namespace detail {

struct Mode {
  double value;
  int multiplicity;
  std::string label;
};

inline BaseSpectrum merge_modes(std::vector<Mode> modes, double cutoff, double rel_tol) {
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.value < b.value; });
  BaseSpectrum spec;
  spec.cutoff = cutoff;
  for (auto& m : modes) {
    if (!spec.levels.empty()) {
      auto& last = spec.levels.back();
      if (m.value - last.value <= rel_tol * std::abs(m.value)) {
        last.multiplicity += m.multiplicity;
        last.labels.push_back(std::move(m.label));
        continue;
      }
    }
    spec.levels.push_back(BaseLevel{m.value, m.multiplicity, {std::move(m.label)}});
  }
  return spec;
}

inline void check_budget(std::size_t count, std::size_t limit) {
  if (count > limit)
    throw Error(ErrorKind::Resource, "Neumann mode enumeration exceeds the limit of " + std::to_string(limit));
}

}  // namespace detail

inline BaseSpectrum neumann_eigenvalues(const BaseDomain& domain, double cutoff,
                                        const BaseSpectrumOptions& opts = {}) {
  validate(domain);
  if (!(cutoff > 0.0) || !std::isfinite(cutoff))
    throw Error(ErrorKind::Validation, "neumann_eigenvalues: cutoff must be positive and finite");
  std::vector<detail::Mode> modes;
  if (auto* iv = std::get_if<Interval>(&domain)) {
    const double k = M_PI / iv->length;
    for (long j = 0;; ++j) {
      const double v = (j * k) * (j * k);
      if (v > cutoff) break;
      detail::check_budget(modes.size() + 1, opts.max_modes);
      modes.push_back({v, 1, std::to_string(j)});
    }
  } else if (auto* rc = std::get_if<Rectangle>(&domain)) {
    const double ka = M_PI / rc->a, kb = M_PI / rc->b;
    for (long m = 0; (m * ka) * (m * ka) <= cutoff; ++m) {
      for (long n = 0;; ++n) {
        const double v = (m * ka) * (m * ka) + (n * kb) * (n * kb);
        if (v > cutoff) break;
        detail::check_budget(modes.size() + 1, opts.max_modes);
        modes.push_back({v, 1, "(" + std::to_string(m) + "," + std::to_string(n) + ")"});
      }
    }
  } else {
    const double r = std::get<Disk>(domain).radius;
    const double x_max = r * std::sqrt(cutoff);
    modes.push_back({0.0, 1, "(0,0)"});
    for (int nu = 0; static_cast<double>(nu) <= x_max; ++nu) {
      if (opts.rotation_invariant_only && nu > 0) break;
      const auto zeros = bessel::derivative_zeros(nu, x_max);
      if (zeros.empty() && nu > 0) break;
      for (std::size_t k = 0; k < zeros.size(); ++k) {
        detail::check_budget(modes.size() + 1, opts.max_modes);
        const double v = (zeros[k] / r) * (zeros[k] / r);
        if (v > cutoff) continue;
        modes.push_back({v, nu == 0 ? 1 : 2, "(" + std::to_string(nu) + "," + std::to_string(k + 1) + ")"});
      }
    }
  }
  return detail::merge_modes(std::move(modes), cutoff, opts.merge_rel_tol);
}

inline BaseSpectrum scale_spectrum(const BaseSpectrum& spec, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::Domain, "scale_spectrum: t must be positive");
  BaseSpectrum out = spec;
  const double inv = 1.0 / (t * t);
  for (auto& l : out.levels) l.value *= inv;
  out.cutoff = spec.cutoff * inv;
  return out;
}

/// Number of eigenvalues ≤ Λ, with multiplicity.
inline std::size_t counting_function(const BaseSpectrum& spec, double lambda) {
  std::size_t c = 0;
  for (const auto& l : spec.levels)
    if (l.value <= lambda) c += static_cast<std::size_t>(l.multiplicity);
  return c;
}

/// Leading Weyl term |ω| Λ^{d/2} / ((4π)^{d/2} Γ(d/2 + 1)).
inline double weyl_estimate(const BaseDomain& domain, double lambda) {
  const double d = dimension(domain);
  return measure(domain) * std::pow(lambda, 0.5 * d) / (std::pow(4.0 * M_PI, 0.5 * d) * std::tgamma(0.5 * d + 1.0));
}

}  // namespace cylbif

#endif  // CYLBIF_BASE_SPECTRUM_HPP
