#include <doctest.h>

#include <algorithm>

#include "mislab/density.hpp"
#include "mislab/error.hpp"
#include "oracles.hpp"

using mislab::cplx;
using mislab::DiagnosticsConfig;
using mislab::DyadicDisk;
using mislab::ParamFamily;
using mislab::ScanOptions;

namespace {

// Roots in p of (phat - p)^2 = z^2 p (1 - p) / n.
std::pair<double, double> wilson_roots(long k, long n, double z) {
  const long double nn = n, ph = static_cast<long double>(k) / nn, z2 = static_cast<long double>(z) * z;
  const long double qa = 1.0L + z2 / nn, qb = -(2.0L * ph + z2 / nn), qc = ph * ph;
  const long double disc = std::sqrt(qb * qb - 4.0L * qa * qc);
  return {static_cast<double>((-qb - disc) / (2.0L * qa)), static_cast<double>((-qb + disc) / (2.0L * qa))};
}

long outcome_total(const mislab::ScanReport& r) {
  return r.count_return + r.count_sink + r.count_candidate + r.count_indeterminate;
}

}  // namespace

TEST_CASE("disks per level") {
  CHECK(mislab::disks_per_level(0.5) == 13);
  CHECK(mislab::disks_per_level(0.25) == 26);
  CHECK(mislab::disks_per_level(0.05) == 126);
}

TEST_CASE("dyadic cover covers each annulus") {
  oracle::Gen gen(5);
  for (const double k0 : {0.5, 0.25, 0.05}) {
    const double r = 1e-3;
    const int levels = 3;
    const auto cover = mislab::dyadic_cover(r, k0, levels);
    REQUIRE(cover.size() == static_cast<std::size_t>(levels * mislab::disks_per_level(k0)));
    for (const auto& d : cover) {
      const double rho = std::ldexp(r, -d.level);
      CHECK(std::abs(d.center) == doctest::Approx(rho).epsilon(1e-12));
      CHECK(d.radius == doctest::Approx(k0 * rho).epsilon(1e-12));
    }
    int uncovered = 0;
    for (int trial = 0; trial < 20000; ++trial) {
      const int l = gen.integer(1, levels);
      const double rho = std::ldexp(r, -l);
      const cplx p = gen.on_circle(rho * gen.range(1.0 - k0 / 2.0, 1.0 + k0 / 2.0));
      const bool hit = std::any_of(cover.begin(), cover.end(), [&](const DyadicDisk& d) {
        return d.level == l && std::abs(p - d.center) <= d.radius;
      });
      if (!hit) ++uncovered;
    }
    CHECK(uncovered == 0);
  }
  CHECK_THROWS_AS(mislab::dyadic_cover(0.0, 0.25, 2), mislab::Error);
  CHECK_THROWS_AS(mislab::dyadic_cover(1.0, 0.25, 0), mislab::Error);
}

TEST_CASE("wilson interval") {
  for (const auto& [k, n] : std::vector<std::pair<long, long>>{{1, 10}, {5, 10}, {9, 10}, {3, 1000}, {500, 1000}}) {
    const auto ci = mislab::wilson_interval(k, n);
    const auto [lo, hi] = wilson_roots(k, n, 1.959963984540054);
    CHECK(ci.lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(hi).epsilon(1e-12));
  }
  const auto zero = mislab::wilson_interval(0, 1000);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(wilson_roots(0, 1000, 1.959963984540054).second).epsilon(1e-12));
  const auto all = mislab::wilson_interval(1000, 1000);
  CHECK(all.hi == doctest::Approx(1.0));
  CHECK(all.lo == doctest::Approx(wilson_roots(1000, 1000, 1.959963984540054).first).epsilon(1e-9));
}

TEST_CASE("scan rejects small sample counts") {
  const ParamFamily local = oracle::quad_family().shifted(-2.0);
  DiagnosticsConfig cfg;
  CHECK_THROWS_AS(mislab::scan_disk(local, {cplx(1e-4, 0.0), 2.5e-5, 1, 0}, cfg, 99, 1), mislab::Error);
}

TEST_CASE("scan in the main cardioid finds sinks") {
  // z^2 + a has an attracting fixed point when |1 - sqrt(1 - 4a)| < 1.
  const cplx base(-0.2, 0.0);
  const DyadicDisk disk{cplx(1e-3, 0.0), 2.5e-4, 1, 0};
  for (const cplx a : {base + disk.center + disk.radius, base + disk.center - disk.radius})
    REQUIRE(std::abs(1.0 - std::sqrt(1.0 - 4.0 * a)) < 1.0);
  const ParamFamily local = oracle::quad_family().shifted(base);
  DiagnosticsConfig cfg;
  const auto rep = mislab::scan_disk(local, disk, cfg, 200, 3);
  CHECK(rep.frac_sink >= 0.99);
  CHECK(outcome_total(rep) == rep.samples);
}

TEST_CASE("scan partition, determinism and seed dependence") {
  const ParamFamily local = oracle::quad_family().shifted(-2.0);
  DiagnosticsConfig cfg;
  const DyadicDisk disk{cplx(0.0, 2.5e-4), 6.25e-5, 2, 6};
  ScanOptions one;
  one.threads = 1;
  ScanOptions three;
  three.threads = 3;
  const auto a = mislab::scan_disk(local, disk, cfg, 400, 11, one);
  const auto b = mislab::scan_disk(local, disk, cfg, 400, 11, three);
  CHECK(outcome_total(a) == a.samples);
  CHECK(a.frac_return + a.frac_sink + a.frac_candidate + a.frac_indeterminate == doctest::Approx(1.0));
  CHECK(a.count_return == b.count_return);
  CHECK(a.count_sink == b.count_sink);
  CHECK(a.count_candidate == b.count_candidate);
  CHECK(a.count_indeterminate == b.count_indeterminate);
  CHECK(a.count_sink_super_attracting <= a.count_sink);

  const auto c = mislab::scan_disk(local, disk, cfg, 400, 12, one);
  CHECK(outcome_total(c) == c.samples);
  // Two independent estimates of one proportion: 5 standard errors.
  const double p = 0.5 * (a.frac_sink + c.frac_sink);
  CHECK(std::abs(a.frac_sink - c.frac_sink) <= 5.0 * std::sqrt(2.0 * p * (1.0 - p) / 400.0) + 1e-12);

  if (a.return_time) CHECK(*a.return_time <= cfg.N_tilde);
  if (a.n_escape) CHECK(*a.n_escape >= 1);
}

TEST_CASE("constant family gives identical disks") {
  const ParamFamily flat(2, {{{-0.2, 0.0}}, {{0.0, 0.0}}, {{1.0, 0.0}}}, {{{1.0, 0.0}}}, 1e-3, mislab::MarkedCritical{});
  DiagnosticsConfig cfg;
  const auto cover = mislab::dyadic_cover(1e-3, cfg.k0, 1);
  const auto first = mislab::scan_disk(flat, cover[0], cfg, 100, 1);
  for (std::size_t i : {std::size_t{5}, std::size_t{17}}) {
    const auto other = mislab::scan_disk(flat, cover[i], cfg, 100, 1);
    CHECK(other.count_sink == first.count_sink);
    CHECK(other.count_candidate == first.count_candidate);
    CHECK(other.count_return == first.count_return);
  }
  CHECK(first.frac_sink == 1.0);
}

TEST_CASE("degree count on explicit maps") {
  const DyadicDisk disk{cplx(0.3, 0.1), 0.01, 1, 0};
  auto affine = [&](cplx a) { return mislab::SpherePoint::from_complex(3.0 * a + 1.0); };
  CHECK(mislab::degree_count(affine, disk, 40, 8, 0.0).max_preimage_count == 1);
  CHECK(mislab::degree_count(affine, disk, 40, 8, 1e-12).max_preimage_count == 1);
  auto square = [&](cplx a) {
    const cplx u = (a - disk.center) / disk.radius;
    return mislab::SpherePoint::from_complex(u * u);
  };
  CHECK(mislab::degree_count(square, disk, 48, 16, 0.0).max_preimage_count == 2);
  CHECK_THROWS_AS(mislab::degree_count(affine, disk, 1, 8, 0.0), mislab::Error);
}

TEST_CASE("degree audit near the Chebyshev parameter stays bounded") {
  const ParamFamily local = oracle::quad_family().shifted(-2.0);
  DiagnosticsConfig cfg;
  const DyadicDisk disk{cplx(5e-4, 0.0), 1.25e-4, 1, 0};
  const auto audit = mislab::degree_audit(local, disk, cfg, 32, 6);
  CHECK(audit.step >= 1);
  CHECK(audit.max_preimage_count >= 1);
  CHECK(audit.max_preimage_count <= 4);
}
