#include <doctest.h>

#include <algorithm>

#include "mislab/classifier.hpp"
#include "mislab/error.hpp"
#include "oracles.hpp"

using mislab::CycleKind;
using mislab::cplx;
using mislab::RationalMap;
using mislab::SpherePoint;

namespace {

const mislab::PeriodicOrbitRecord* cycle_through(const mislab::PeriodicSearch& s, const SpherePoint& p) {
  for (const auto& o : s.orbits)
    for (const auto& q : o.cycle)
      if (oracle::chordal(p, q) < 1e-8) return &o;
  return nullptr;
}

// R^p(z) in the plane, extended precision.
oracle::lcplx iterate_planar(const RationalMap& m, oracle::lcplx z, int p) {
  const std::vector<cplx> P(m.numer().begin(), m.numer().end()), Q(m.denom().begin(), m.denom().end());
  for (int j = 0; j < p; ++j) z = oracle::eval_powers(P, z) / oracle::eval_powers(Q, z);
  return z;
}

}  // namespace

TEST_CASE("fixed points of z^2") {
  const auto s = mislab::find_periodic_orbits(oracle::quad_map(0.0), 1);
  REQUIRE(s.orbits.size() == 3);
  const auto* zero = cycle_through(s, SpherePoint::from_complex(0.0));
  const auto* inf = cycle_through(s, SpherePoint::infinity());
  const auto* one = cycle_through(s, SpherePoint::from_complex(1.0));
  REQUIRE(zero);
  REQUIRE(inf);
  REQUIRE(one);
  CHECK(zero->kind == CycleKind::super_attracting);
  CHECK(inf->kind == CycleKind::super_attracting);
  CHECK(one->kind == CycleKind::repelling);
  CHECK(std::abs(one->multiplier - cplx(2.0)) < 1e-10);
}

TEST_CASE("fixed points of z^2 - 2") {
  const auto s = mislab::find_periodic_orbits(oracle::quad_map(-2.0), 1);
  const auto* two = cycle_through(s, SpherePoint::from_complex(2.0));
  const auto* minus_one = cycle_through(s, SpherePoint::from_complex(-1.0));
  REQUIRE(two);
  REQUIRE(minus_one);
  CHECK(std::abs(two->multiplier - cplx(4.0)) < 1e-10);
  CHECK(std::abs(minus_one->multiplier - cplx(-2.0)) < 1e-10);
  CHECK(two->kind == CycleKind::repelling);
}

TEST_CASE("attracting fixed point of z^2 - 0.5") {
  const auto s = mislab::find_periodic_orbits(oracle::quad_map(-0.5), 1);
  const double z = (1.0 - std::sqrt(3.0)) / 2.0;
  const auto* sink = cycle_through(s, SpherePoint::from_complex(z));
  REQUIRE(sink);
  CHECK(sink->kind == CycleKind::sink);
  CHECK(std::abs(sink->multiplier - cplx(2.0 * z)) < 1e-10);
}

TEST_CASE("periodic point count matches d^p + 1") {
  for (const cplx c : {cplx(-2.0), cplx(0.0, 1.0), cplx(0.3, 0.6)}) {
    const auto s = mislab::find_periodic_orbits(oracle::quad_map(c), 4);
    for (int p = 1; p <= 4; ++p) {
      int points = 0;
      for (const auto& o : s.orbits)
        if (p % o.period == 0) points += o.period;
      CHECK(points == (1 << p) + 1);
    }
  }
}

TEST_CASE("cycles close up and multipliers match finite differences") {
  oracle::Gen gen(41);
  for (int trial = 0; trial < 6; ++trial) {
    const RationalMap m = oracle::quad_map(gen.in_disk(1.5));
    const auto s = mislab::find_periodic_orbits(m, 5);
    for (const auto& o : s.orbits) {
      for (std::size_t i = 0; i < o.cycle.size(); ++i) {
        SpherePoint z = o.cycle[i];
        for (int j = 0; j < o.period; ++j) z = mislab::evaluate(m, z);
        CHECK(oracle::chordal(z, o.cycle[i]) <= 1e-9);
      }
      const SpherePoint& z0 = o.cycle.front();
      if (z0.is_infinity() || std::abs(z0.to_complex()) > 2.0 || o.kind == CycleKind::super_attracting) continue;
      const cplx z = z0.to_complex();
      const long double h = 1e-6L;
      const oracle::lcplx zl(z.real(), z.imag());
      const oracle::lcplx fd =
          (iterate_planar(m, zl + h, o.period) - iterate_planar(m, zl - h, o.period)) / (2.0L * h);
      const cplx fdd(static_cast<double>(fd.real()), static_cast<double>(fd.imag()));
      CHECK(std::abs(fdd - o.multiplier) <= 1e-5 * std::abs(o.multiplier));
    }
  }
}

TEST_CASE("multiplier bands") {
  CHECK(mislab::classify_multiplier(1e-12) == CycleKind::super_attracting);
  CHECK(mislab::classify_multiplier(0.5) == CycleKind::sink);
  CHECK(mislab::classify_multiplier(std::polar(1.0 + 5e-7, 1.0)) == CycleKind::parabolic_candidate);
  CHECK(mislab::classify_multiplier(std::polar(1.0 - 5e-7, 1.0)) == CycleKind::parabolic_candidate);
  CHECK(mislab::classify_multiplier(1.1) == CycleKind::repelling);
  CHECK_THROWS_AS(mislab::find_periodic_orbits(oracle::quad_map(0.0), 21), mislab::Error);
}

TEST_CASE("classification examples") {
  const auto cand = mislab::classify_map(oracle::quad_map(-2.0), 0.5, 0, 200, 8);
  CHECK(cand.verdict == mislab::Verdict::misiurewicz_candidate);
  CHECK(cand.gap == doctest::Approx(4.0 / std::sqrt(5.0)).epsilon(1e-12));

  const auto sink = mislab::classify_map(oracle::quad_map(-0.5), 0.1, 0, 200, 8);
  CHECK(sink.verdict == mislab::Verdict::rejected);
  CHECK(sink.reason == mislab::RejectReason::sink_found);
  CHECK_FALSE(sink.evidence.empty());

  const auto close = mislab::classify_map(oracle::quad_map(-2.0), 1.8, 0, 200, 8);
  CHECK(close.verdict == mislab::Verdict::rejected);
  CHECK(close.reason == mislab::RejectReason::postcritical_enters_U_delta);
  CHECK(close.evidence.orbit_index >= 1);
  CHECK(close.evidence.distance < 1.8);

  // a = -1: the critical point lies on a super-attracting 2-cycle.
  const auto basilica = mislab::classify_map(oracle::quad_map(-1.0), 0.3, 0, 200, 4);
  CHECK(basilica.verdict == mislab::Verdict::misiurewicz_candidate);

  // a = 1/4: parabolic fixed point 1/2.
  const auto cusp = mislab::classify_map(oracle::quad_map(0.25), 0.3, 0, 200, 2);
  CHECK(cusp.verdict == mislab::Verdict::rejected);
  CHECK(cusp.reason == mislab::RejectReason::parabolic_candidate_found);
}

TEST_CASE("doubling the margin tests against U_{2 delta}") {
  mislab::ClassifyOptions opts;
  opts.margin_factor = 2.0;
  // gap 4/sqrt(5) ~ 1.789 lies between 0.5 * 2 and 1.0 * 2
  CHECK(mislab::classify_map(oracle::quad_map(-2.0), 0.5, 0, 100, 4, opts).verdict ==
        mislab::Verdict::misiurewicz_candidate);
  CHECK(mislab::classify_map(oracle::quad_map(-2.0), 1.0, 0, 100, 4, opts).verdict == mislab::Verdict::rejected);
}

TEST_CASE("verdicts are monotone in delta and in the cut") {
  const cplx i(0.0, 1.0);
  const std::vector<cplx> params = {-2.0, i, -1.543689012692076, 0.2 + 0.6 * i, cplx(-0.1011, 0.9563)};
  for (const cplx c : params) {
    const RationalMap m = oracle::quad_map(c);
    bool rejected = false;
    for (const double delta : {0.05, 0.1, 0.3, 0.6, 1.0, 1.5, 1.9}) {
      const auto v = mislab::classify_map(m, delta, 0, 120, 4);
      if (rejected && v.reason != mislab::RejectReason::sink_found &&
          v.reason != mislab::RejectReason::parabolic_candidate_found)
        CHECK(v.verdict == mislab::Verdict::rejected);
      if (v.reason == mislab::RejectReason::postcritical_enters_U_delta) rejected = true;
    }
    bool candidate = false;
    for (const int k : {0, 1, 2, 4, 8}) {
      const auto v = mislab::classify_map(m, 0.3, k, 120, 4);
      if (candidate) CHECK(v.verdict == mislab::Verdict::misiurewicz_candidate);
      if (v.verdict == mislab::Verdict::misiurewicz_candidate) candidate = true;
    }
  }
}

TEST_CASE("expansion estimates") {
  const auto cheb = mislab::expansion_estimate(oracle::quad_map(-2.0), 0.05, 10, 400);
  CHECK(cheb.admissible > 0);
  CHECK(cheb.lambda_hat >= 3.5);
  CHECK(cheb.lambda_hat <= 4.5);
  CHECK(cheb.lambda_hat > 1.0);

  const auto sq = mislab::expansion_estimate(oracle::quad_map(0.0), {SpherePoint::from_complex(1.0)}, 0.01, 10, 400);
  CHECK(sq.lambda_hat == doctest::Approx(2.0).epsilon(0.02));

  try {
    mislab::expansion_estimate(oracle::quad_map(-2.0), 0.05, 10, 0);
    FAIL("no samples accepted");
  } catch (const mislab::Error& e) {
    CHECK(e.kind() == mislab::ErrorKind::NoAdmissibleSamples);
  }
}
