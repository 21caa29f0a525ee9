#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"
#include "cylbif/base_spectrum.hpp"
#include "cylbif/bessel.hpp"
#include "oracles/bessel_series.hpp"
#include "support.hpp"

using namespace cylbif;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("interval spectrum below 100", "[base]") {
  const auto s = neumann_eigenvalues(Interval{1.0}, 100.0);
  REQUIRE(s.levels.size() == 4);
  CHECK(s.levels[0].value == 0.0);
  CHECK_THAT(s.levels[1].value, WithinAbs(9.8696, 1e-4));
  CHECK_THAT(s.levels[2].value, WithinAbs(39.4784, 1e-4));
  CHECK_THAT(s.levels[3].value, WithinAbs(88.8264, 1e-4));
  for (const auto& l : s.levels) CHECK(l.multiplicity == 1);
  CHECK(s.levels[2].label() == "2");
}

TEST_CASE("unit square spectrum merges the (1,0)/(0,1) tie", "[base]") {
  const auto s = neumann_eigenvalues(Rectangle{1.0, 1.0}, 20.0);
  REQUIRE(s.levels.size() == 3);
  CHECK(s.levels[0].value == 0.0);
  CHECK_THAT(s.levels[1].value, WithinRel(kPi * kPi, 1e-15));
  CHECK(s.levels[1].multiplicity == 2);
  CHECK(s.levels[1].labels.size() == 2);
  CHECK_THAT(s.levels[2].value, WithinRel(2 * kPi * kPi, 1e-15));
  CHECK(s.levels[2].multiplicity == 1);
  CHECK(s.with_multiplicity().size() == 4);
}

TEST_CASE("library Bessel derivative zeros match the series oracle", "[base][oracle]") {
  CHECK_THAT(oracle::bessel_j_prime_zero(1, 1.0, 3.0), WithinAbs(1.84118, 1e-5));
  struct Case {
    int nu;
    double lo, hi;
  };
  // brackets taken from sign changes of the oracle's J_nu'
  const std::vector<Case> cases = {{0, 3.0, 4.5}, {0, 6.5, 7.5}, {1, 1.0, 3.0}, {1, 5.0, 6.0},
                                   {2, 2.5, 3.5}, {3, 3.5, 4.5}, {5, 6.0, 7.0}};
  for (const auto& c : cases) {
    const double want = oracle::bessel_j_prime_zero(c.nu, c.lo, c.hi);
    const auto zs = bessel::derivative_zeros(c.nu, c.hi);
    REQUIRE_FALSE(zs.empty());
    INFO("nu = " << c.nu << " want " << want);
    CHECK_THAT(zs.back(), WithinRel(want, 1e-12));
  }
}

TEST_CASE("disk spectrum below 5", "[base][oracle]") {
  const auto s = neumann_eigenvalues(Disk{1.0}, 5.0);
  REQUIRE(s.levels.size() == 2);
  CHECK(s.levels[0].value == 0.0);
  const double j11 = oracle::bessel_j_prime_zero(1, 1.0, 3.0);
  CHECK_THAT(s.levels[1].value, WithinRel(j11 * j11, 1e-12));
  CHECK_THAT(s.levels[1].value, WithinAbs(3.3900, 1e-4));
  CHECK(s.levels[1].multiplicity == 2);
}

TEST_CASE("rotation-invariant disk modes keep nu = 0 only", "[base]") {
  BaseSpectrumOptions o;
  o.rotation_invariant_only = true;
  const auto s = neumann_eigenvalues(Disk{1.0}, 60.0, o);
  for (const auto& l : s.levels) CHECK(l.multiplicity == 1);
  REQUIRE(s.levels.size() >= 2);
  CHECK_THAT(std::sqrt(s.levels[1].value), WithinRel(oracle::bessel_j_prime_zero(0, 3.0, 4.5), 1e-12));
}

TEST_CASE("scale_spectrum examples", "[base]") {
  const auto s = neumann_eigenvalues(Interval{1.0}, 50.0);
  CHECK_THAT(scale_spectrum(s, 2.0).levels[1].value, WithinRel(kPi * kPi / 4, 1e-15));
  const auto id = scale_spectrum(s, 1.0);
  for (std::size_t j = 0; j < s.levels.size(); ++j) CHECK(id.levels[j].value == s.levels[j].value);
  REQUIRE_ERROR_KIND(scale_spectrum(s, 0.0), ErrorKind::Domain);
  REQUIRE_ERROR_KIND(scale_spectrum(s, -1.0), ErrorKind::Domain);
}

TEST_CASE("scaling law matches direct computation on the scaled domain", "[base][property]") {
  const std::vector<BaseDomain> domains = {Interval{1.0}, Interval{2.3}, Rectangle{1.0, 1.0}, Rectangle{1.0, 2.7},
                                           Disk{1.0}};
  const double cutoff = 400.0;
  for (const auto& d : domains) {
    const auto unit = neumann_eigenvalues(d, cutoff);
    for (double t : {0.5, 1.0, 2.0, 3.7}) {
      const auto via_scale = scale_spectrum(unit, t);
      const auto direct = neumann_eigenvalues(scaled(d, t), cutoff / (t * t));
      // compare strictly inside the cutoff to avoid boundary roundoff
      std::size_t count = 0;
      for (std::size_t j = 0; j < via_scale.levels.size(); ++j) {
        if (via_scale.levels[j].value > 0.999 * via_scale.cutoff) break;
        REQUIRE(j < direct.levels.size());
        CHECK(via_scale.levels[j].multiplicity == direct.levels[j].multiplicity);
        if (direct.levels[j].value == 0.0)
          CHECK(via_scale.levels[j].value == 0.0);
        else
          CHECK_THAT(via_scale.levels[j].value, WithinRel(direct.levels[j].value, 1e-12));
        ++count;
      }
      CHECK(count >= 5);
    }
  }
}

TEST_CASE("Weyl counting sanity", "[base][property]") {
  const std::vector<BaseDomain> domains = {Interval{1.0}, Interval{3.0}, Rectangle{1.0, 1.0}, Rectangle{2.0, 0.5},
                                           Disk{1.0}, Disk{2.0}};
  for (const auto& d : domains) {
    const double lambda = 4000.0;
    const auto s = neumann_eigenvalues(d, lambda);
    const double ratio = static_cast<double>(counting_function(s, lambda)) / weyl_estimate(d, lambda);
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
  }
}

TEST_CASE("base spectrum structural invariants", "[base][property]") {
  for (const BaseDomain& d : {BaseDomain(Interval{0.7}), BaseDomain(Rectangle{1.3, 0.4}), BaseDomain(Disk{0.8})}) {
    const auto s = neumann_eigenvalues(d, 800.0);
    REQUIRE(s.levels.size() >= 2);
    CHECK(s.levels[0].value == 0.0);
    CHECK(s.levels[0].multiplicity == 1);
    for (std::size_t j = 1; j < s.levels.size(); ++j) {
      CHECK(s.levels[j].value > s.levels[j - 1].value);
      CHECK(s.levels[j].multiplicity >= 1);
      CHECK(s.levels[j].value <= 800.0);
    }
  }
}

TEST_CASE("base spectrum error paths", "[base]") {
  BaseSpectrumOptions tight;
  tight.max_modes = 50;
  REQUIRE_ERROR_KIND(neumann_eigenvalues(Rectangle{1, 1}, 1e5, tight), ErrorKind::Resource);
  REQUIRE_ERROR_KIND(neumann_eigenvalues(Interval{-1.0}, 10.0), ErrorKind::Validation);
  REQUIRE_ERROR_KIND(neumann_eigenvalues(Interval{1.0}, 0.0), ErrorKind::Validation);
  REQUIRE_ERROR_KIND(neumann_eigenvalues(Interval{1.0}, 1.0).lambda1(), ErrorKind::Coverage);
}
