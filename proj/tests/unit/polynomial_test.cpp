#include <doctest.h>

#include <algorithm>

#include "mislab/polynomial.hpp"
#include "oracles.hpp"

using mislab::cplx;

TEST_CASE("horner agrees with explicit powers") {
  oracle::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = gen.coeffs(gen.integer(1, 9));
    const cplx z = gen.in_disk(1.5);
    const auto ref = oracle::eval_powers(c, {z.real(), z.imag()});
    CHECK(std::abs(mislab::horner(c, z) - cplx(ref.real(), ref.imag())) <= 1e-12 * (1.0 + std::abs(ref)));
  }
}

TEST_CASE("jet and derivative coefficients") {
  const std::vector<cplx> p = {1.0, -3.0, 0.0, 2.0};  // 1 - 3z + 2z^3
  const auto d = mislab::derivative(p);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == cplx(-3.0));
  CHECK(d[1] == cplx(0.0));
  CHECK(d[2] == cplx(6.0));
  const auto jet = mislab::horner_jet(p, cplx(2.0, 0.0));
  CHECK(jet.value == cplx(11.0));
  CHECK(jet.deriv == cplx(21.0));
  CHECK(mislab::derivative_at(p, cplx(2.0, 0.0), 2) == cplx(24.0));
}

TEST_CASE("multiply, subtract, reversed, effective degree") {
  const std::vector<cplx> a = {1.0, 1.0}, b = {-1.0, 1.0};
  const auto m = mislab::multiply(a, b);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == cplx(-1.0));
  CHECK(m[1] == cplx(0.0));
  CHECK(m[2] == cplx(1.0));
  const auto s = mislab::subtract(m, a);
  CHECK(s[0] == cplx(-2.0));
  CHECK(s[1] == cplx(-1.0));
  const auto r = mislab::reversed(a, 3);
  REQUIRE(r.size() == 4);
  CHECK(r[3] == cplx(1.0));
  CHECK(r[2] == cplx(1.0));
  CHECK(r[0] == cplx(0.0));
  CHECK(mislab::effective_degree(std::vector<cplx>{1.0, 2.0, 1e-20}, 1e-14) == 1);
  CHECK(mislab::effective_degree(std::vector<cplx>{0.0, 0.0}, 1e-14) == -1);
}

TEST_CASE("aberth recovers planted roots") {
  oracle::Gen gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int deg = gen.integer(2, 9);
    std::vector<cplx> roots;
    for (int i = 0; i < deg; ++i) roots.push_back(gen.in_disk(3.0));
    std::vector<cplx> p = {1.0};
    for (const cplx r : roots) p = mislab::multiply(p, std::vector<cplx>{-r, 1.0});
    const auto res = mislab::aberth_roots(p);
    REQUIRE(res.roots.size() == roots.size());
    for (const cplx r : roots) {
      double best = 1e300;
      for (const cplx s : res.roots) best = std::min(best, std::abs(r - s));
      CHECK(best <= 1e-8 * (1.0 + std::abs(r)));
    }
    for (const cplx s : res.roots) CHECK(mislab::relative_residual(p, s) <= 1e-12);
  }
}

TEST_CASE("aberth handles roots far from the origin") {
  // (z - 1e6)(z + 0.5)
  const std::vector<cplx> p = {-5e5, -1e6 + 0.5, 1.0};
  const auto res = mislab::aberth_roots(p);
  REQUIRE(res.roots.size() == 2);
  const double big = std::max(std::abs(res.roots[0]), std::abs(res.roots[1]));
  const double small = std::min(std::abs(res.roots[0]), std::abs(res.roots[1]));
  CHECK(big == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(small == doctest::Approx(0.5).epsilon(1e-12));
}
