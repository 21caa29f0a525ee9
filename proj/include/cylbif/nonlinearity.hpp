#ifndef CYLBIF_NONLINEARITY_HPP
#define CYLBIF_NONLINEARITY_HPP

// Reaction terms f for -Δu = f(u): the Lane-Emden power |s|^{p-2}s and the
// odd cubic c1·s + c3·s³, with derivative and primitive.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cylbif/error.hpp"

namespace cylbif {

struct LaneEmden {
  double p = 3.0;
};

struct CubicFamily {
  double c1 = 0.0;
  double c3 = 1.0;
};

/// A reaction term. LaneEmden with p <= 2 is representable on purpose; it is
/// rejected by check_hypotheses(), not here.
class NonlinearityModel {
 public:
  using Variant = std::variant<LaneEmden, CubicFamily>;

  NonlinearityModel() : NonlinearityModel(LaneEmden{3.0}) {}

  /* implicit */ NonlinearityModel(LaneEmden le) : v_(le) {
    if (!std::isfinite(le.p) || le.p <= 1.0)
      throw Error(ErrorKind::Validation, "lane_emden exponent must be finite and > 1");
  }

  /* implicit */ NonlinearityModel(CubicFamily c) : v_(c) {
    if (!std::isfinite(c.c1) || !std::isfinite(c.c3) || c.c3 <= 0.0 || c.c1 < 0.0)
      throw Error(ErrorKind::Validation, "cubic family requires c1 >= 0 and c3 > 0");
  }

  const Variant& variant() const noexcept { return v_; }

  std::string describe() const {
    if (auto* le = std::get_if<LaneEmden>(&v_)) return "lane_emden(p=" + std::to_string(le->p) + ")";
    auto& c = std::get<CubicFamily>(v_);
    return "cubic(c1=" + std::to_string(c.c1) + ",c3=" + std::to_string(c.c3) + ")";
  }

 private:
  Variant v_;
};

inline double eval_f(const NonlinearityModel& model, double s) {
  return std::visit(
      [s](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LaneEmden>) {
          if (s == 0.0) return 0.0;
          return std::pow(std::abs(s), m.p - 2.0) * s;
        } else {
          return m.c1 * s + m.c3 * s * s * s;
        }
      },
      model.variant());
}

inline double eval_fprime(const NonlinearityModel& model, double s) {
  return std::visit(
      [s](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LaneEmden>) {
          if (s == 0.0) {
            if (m.p > 2.0) return 0.0;
            if (m.p == 2.0) return 1.0;
            return std::numeric_limits<double>::infinity();
          }
          return (m.p - 1.0) * std::pow(std::abs(s), m.p - 2.0);
        } else {
          return m.c1 + 3.0 * m.c3 * s * s;
        }
      },
      model.variant());
}

/// Primitive F(s) = ∫₀ˢ f.
inline double eval_F(const NonlinearityModel& model, double s) {
  return std::visit(
      [s](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LaneEmden>) {
          return std::pow(std::abs(s), m.p) / m.p;
        } else {
          const double s2 = s * s;
          return 0.5 * m.c1 * s2 + 0.25 * m.c3 * s2 * s2;
        }
      },
      model.variant());
}

struct HypothesisReport {
  bool superlinear = true;  // f'(s) > f(s)/s
  bool sign = true;         // s·f(s) > 0
  std::vector<double> superlinear_failures;
  std::vector<double> sign_failures;

  bool ok() const noexcept { return superlinear && sign; }
};

inline HypothesisReport check_hypotheses(const NonlinearityModel& model,
                                         std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorKind::Validation, "check_hypotheses: empty sample list");
  HypothesisReport report;
  for (double s : samples) {
    if (s == 0.0 || !std::isfinite(s))
      throw Error(ErrorKind::Validation, "check_hypotheses: samples must be finite and nonzero");
    const double f = eval_f(model, s);
    // Multiply through by s² to stay clear of the division.
    if (!(eval_fprime(model, s) * s * s - f * s > 0.0)) {
      report.superlinear = false;
      report.superlinear_failures.push_back(s);
    }
    if (!(s * f > 0.0)) {
      report.sign = false;
      report.sign_failures.push_back(s);
    }
  }
  return report;
}

/// Symmetric log-spaced sample set used by the CLI and the default check.
inline std::vector<double> default_hypothesis_samples(double lo = 1e-3, double hi = 1e3,
                                                      int per_sign = 61) {
  std::vector<double> out;
  out.reserve(2 * static_cast<std::size_t>(per_sign));
  const double step = std::log(hi / lo) / (per_sign - 1);
  for (int k = 0; k < per_sign; ++k) {
    const double s = lo * std::exp(step * k);
    out.push_back(-s);
    out.push_back(s);
  }
  return out;
}

}  // namespace cylbif

#endif  // CYLBIF_NONLINEARITY_HPP
