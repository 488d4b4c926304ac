#include <doctest.h>

#include <algorithm>

#include "mislab/critical.hpp"
#include "mislab/error.hpp"
#include "oracles.hpp"

using mislab::cplx;
using mislab::RationalMap;
using mislab::SpherePoint;

namespace {

const SpherePoint* find_near(const std::vector<SpherePoint>& pts, const SpherePoint& p, double tol) {
  for (const auto& q : pts)
    if (oracle::chordal(p, q) < tol) return &q;
  return nullptr;
}

const mislab::CriticalPoint* entry_near(const mislab::CriticalSet& set, const SpherePoint& p, double tol = 1e-8) {
  for (const auto& e : set.entries)
    if (oracle::chordal(e.point, p) < tol) return &e;
  return nullptr;
}

RationalMap random_map(oracle::Gen& gen, int d) {
  for (;;) {
    try {
      return RationalMap(gen.coeffs(d + 1), gen.coeffs(d + 1));
    } catch (const mislab::Error&) {
    }
  }
}

}  // namespace

TEST_CASE("critical points of z^2") {
  const auto set = mislab::critical_points(oracle::quad_map(0.0));
  REQUIRE(set.entries.size() == 2);
  const auto* zero = entry_near(set, SpherePoint::from_complex(0.0));
  const auto* inf = entry_near(set, SpherePoint::infinity());
  REQUIRE(zero);
  REQUIRE(inf);
  CHECK(zero->multiplicity == 1);
  CHECK(inf->multiplicity == 1);
  CHECK(zero->super_attracting);
  CHECK(inf->super_attracting);
  CHECK(set.non_super_attracting().empty());
}

TEST_CASE("wronskian matches the symbolic form") {
  const RationalMap m({1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0});  // (z^2+1)/(z^2-1)
  const auto w = mislab::wronskian(m);
  const auto ref = oracle::wronskian({1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0});  // -4z
  REQUIRE(ref.size() == 2);
  CHECK(ref[1] == cplx(-4.0));
  REQUIRE(w.size() >= 2);
  CHECK(std::abs(w[0]) < 1e-15);
  CHECK(std::abs(w[1] - ref[1]) < 1e-14);
  for (std::size_t i = 2; i < w.size(); ++i) CHECK(std::abs(w[i]) < 1e-15);

  const auto set = mislab::critical_points(m);
  CHECK(set.entries.size() == 2);
  CHECK(entry_near(set, SpherePoint::from_complex(0.0)));
  CHECK(entry_near(set, SpherePoint::infinity()));

  oracle::Gen gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const RationalMap r = random_map(gen, gen.integer(2, 5));
    const std::vector<cplx> P(r.numer().begin(), r.numer().end()), Q(r.denom().begin(), r.denom().end());
    const auto lib = mislab::wronskian(r);
    const auto naive = oracle::wronskian(P, Q);
    for (std::size_t i = 0; i < std::max(lib.size(), naive.size()); ++i) {
      const cplx a = i < lib.size() ? lib[i] : cplx{};
      const cplx b = i < naive.size() ? naive[i] : cplx{};
      CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
    }
  }
}

TEST_CASE("quadratic polynomials have critical points 0 and infinity") {
  oracle::Gen gen(32);
  for (int trial = 0; trial < 30; ++trial) {
    const auto set = mislab::critical_points(oracle::quad_map(gen.in_disk(2.0)));
    CHECK(set.entries.size() == 2);
    CHECK(entry_near(set, SpherePoint::from_complex(0.0)));
    const auto* inf = entry_near(set, SpherePoint::infinity());
    REQUIRE(inf);
    CHECK(inf->super_attracting);
  }
}

TEST_CASE("multiple critical points keep their multiplicity") {
  const auto cube = mislab::critical_points(RationalMap::polynomial({0.0, 0.0, 0.0, 1.0}));
  REQUIRE(cube.entries.size() == 2);
  for (const auto& e : cube.entries) CHECK(e.multiplicity == 2);
  // z^4 + z: critical points are the cube roots of -1/4, plus infinity (mult 3).
  const auto quart = mislab::critical_points(RationalMap::polynomial({0.0, 1.0, 0.0, 0.0, 1.0}));
  CHECK(quart.total_multiplicity() == 6);
  const auto* inf = entry_near(quart, SpherePoint::infinity());
  REQUIRE(inf);
  CHECK(inf->multiplicity == 3);
}

TEST_CASE("multiplicities sum to 2d-2 with small residuals") {
  oracle::Gen gen(33);
  for (int d = 2; d <= 5; ++d) {
    for (int trial = 0; trial < 100; ++trial) {
      const RationalMap r = random_map(gen, d);
      const auto set = mislab::critical_points(r);
      CHECK(set.total_multiplicity() == 2 * d - 2);
      for (const auto& e : set.entries) CHECK(e.residual <= 1e-8);
    }
  }
}

TEST_CASE("postcritical samples") {
  const auto cheb = mislab::postcritical_sample(oracle::quad_map(-2.0), 0, 10);
  REQUIRE(cheb.points.size() == 2);
  CHECK(find_near(cheb.points, SpherePoint::from_complex(-2.0), 1e-12));
  CHECK(find_near(cheb.points, SpherePoint::from_complex(2.0), 1e-12));

  CHECK(mislab::postcritical_sample(oracle::quad_map(0.0), 0, 10).points.empty());
  CHECK(mislab::postcritical_sample(oracle::quad_map(0.0), 5, 10).points.empty());

  const cplx i(0.0, 1.0);
  const auto mis = mislab::postcritical_sample(oracle::quad_map(i), 0, 8);
  CHECK(mis.points.size() == 3);
  for (const cplx z : {i, -1.0 + i, -i}) CHECK(find_near(mis.points, SpherePoint::from_complex(z), 1e-12));
  for (const auto& tail : mis.per_critical_origin)
    for (const int n : tail.indices) CHECK((n > 0 && n <= 8));

  CHECK_THROWS_AS(mislab::postcritical_sample(oracle::quad_map(i), 4, 4), mislab::Error);
}

TEST_CASE("critical gap") {
  const auto g = mislab::critical_gap(oracle::quad_map(-2.0), 0, 10);
  CHECK_FALSE(g.empty_postcritical);
  CHECK(g.gap == doctest::Approx(4.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(g.gap == doctest::Approx(oracle::euclid3(cplx(0.0), cplx(2.0))).epsilon(1e-12));

  const cplx i(0.0, 1.0);
  double ref = 1e9;
  for (const cplx z : {i, -1.0 + i, -i}) ref = std::min(ref, oracle::euclid3(cplx(0.0), z));
  const auto gi = mislab::critical_gap(oracle::quad_map(i), 0, 8);
  CHECK(gi.gap == doctest::Approx(ref).epsilon(1e-12));
  CHECK(gi.gap > 0.0);

  const auto g0 = mislab::critical_gap(oracle::quad_map(0.0), 0, 10);
  CHECK(g0.empty_postcritical);
  CHECK(std::isinf(g0.gap));
}

TEST_CASE("critical gap is monotone in the horizon and the cut") {
  oracle::Gen gen(34);
  for (int trial = 0; trial < 20; ++trial) {
    const RationalMap m = oracle::quad_map(gen.in_disk(1.0) + cplx(-0.5, 0.0));
    double prev = std::numeric_limits<double>::infinity();
    for (const int n_max : {4, 8, 16, 32}) {
      const double g = mislab::critical_gap(m, 0, n_max).gap;
      CHECK(g <= prev);
      prev = g;
    }
    prev = 0.0;
    for (const int k : {0, 2, 4, 8}) {
      const double g = mislab::critical_gap(m, k, 32).gap;
      CHECK(g >= prev);
      prev = g;
    }
  }
}

TEST_CASE("critical neighborhoods") {
  const mislab::CriticalNeighborhood u(0.5, {SpherePoint::from_complex(0.0)});
  CHECK(u.contains(SpherePoint::from_complex(0.1)));
  CHECK_FALSE(u.contains(SpherePoint::from_complex(2.0)));
  CHECK(u.distance(SpherePoint::infinity()) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mislab::CriticalNeighborhood(0.0, {}), mislab::Error);
}
