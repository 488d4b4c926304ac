#include "mislab/critical.hpp"

#include <algorithm>
#include <cmath>

#include "mislab/error.hpp"

namespace mislab {

int CriticalSet::total_multiplicity() const {
  int s = 0;
  for (const auto& e : entries) s += e.multiplicity;
  return s;
}

std::vector<SpherePoint> CriticalSet::non_super_attracting() const {
  std::vector<SpherePoint> out;
  for (const auto& e : entries)
    if (!e.super_attracting) out.push_back(e.point);
  return out;
}

std::vector<SpherePoint> CriticalSet::super_attracting() const {
  std::vector<SpherePoint> out;
  for (const auto& e : entries)
    if (e.super_attracting) out.push_back(e.point);
  return out;
}

std::vector<cplx> wronskian(const RationalMap& map) {
  const auto dp = derivative(map.numer());
  const auto dq = derivative(map.denom());
  auto w = subtract(multiply(dp, map.denom()), multiply(map.numer(), dq));
  // The z^(2d-1) terms cancel identically.
  w.resize(static_cast<std::size_t>(2 * map.degree() - 1), cplx{0.0, 0.0});
  return w;
}

namespace {

struct Cluster {
  std::vector<cplx> roots;
  bool at_infinity = false;
  int infinity_count = 0;

  int size() const { return static_cast<int>(roots.size()) + infinity_count; }
  SpherePoint center() const {
    if (at_infinity) return SpherePoint::infinity();
    cplx s{0.0, 0.0};
    for (const auto& r : roots) s += r;
    return SpherePoint::from_complex(s / static_cast<double>(roots.size()));
  }
};

// |W^(j)(z)| / j! against the size of the coefficients, in the chart where
// |z| <= 1.
bool derivative_test(const std::vector<cplx>& w, cplx z, int order) {
  const double scale = max_abs(w);
  const double r = std::max(1.0, std::abs(z));
  std::vector<cplx> d(w.begin(), w.end());
  double fact = 1.0;
  for (int j = 0; j < order; ++j) {
    if (j > 0) fact *= j;
    const double deg = static_cast<double>(w.size()) - 1.0 - j;
    const double v = std::abs(horner(d, z)) / (fact * scale * std::pow(r, std::max(deg, 0.0)));
    if (v > 1e-6) return false;
    d = derivative(d);
  }
  return true;
}

void flag_cycles(const RationalMap& map, CriticalPoint& cp, const CriticalOptions& opts) {
  SpherePoint z = cp.point;
  for (int p = 1; p <= opts.cycle_search_period; ++p) {
    try {
      z = evaluate(map, z);
    } catch (const Error&) {
      return;
    }
    if (chordal_distance(z, cp.point) < opts.cycle_tolerance) {
      cp.super_attracting = true;
      cp.cycle_period = p;
      return;
    }
  }
}

}  // namespace

CriticalSet critical_points(const RationalMap& map, const CriticalOptions& opts) {
  const auto w = wronskian(map);
  const int m = 2 * map.degree() - 2;
  const int e = effective_degree(w, 1e-13);
  if (e < 0) throw Error(ErrorKind::DegenerateMap, "Wronskian vanishes identically");

  std::vector<cplx> roots;
  if (e > 0) {
    const std::vector<cplx> trimmed(w.begin(), w.begin() + e + 1);
    const auto rr = aberth_roots(trimmed);
    roots = rr.roots;
  }

  std::vector<Cluster> clusters;
  if (m - e > 0) {
    Cluster inf;
    inf.at_infinity = true;
    inf.infinity_count = m - e;
    clusters.push_back(inf);
  }
  for (const auto& r : roots) {
    const SpherePoint p = SpherePoint::from_complex(r);
    bool placed = false;
    for (auto& c : clusters) {
      if (chordal_distance(c.center(), p) < opts.cluster_radius) {
        c.roots.push_back(r);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back(Cluster{{r}, false, 0});
  }

  // Secondary merge for high-multiplicity roots, which binary64 scatters
  // beyond the primary radius.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < clusters.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < clusters.size() && !merged; ++j) {
        if (chordal_distance(clusters[i].center(), clusters[j].center()) >= opts.merge_radius) continue;
        Cluster u = clusters[i];
        u.roots.insert(u.roots.end(), clusters[j].roots.begin(), clusters[j].roots.end());
        u.at_infinity = clusters[i].at_infinity || clusters[j].at_infinity;
        u.infinity_count += clusters[j].infinity_count;
        if (!u.at_infinity && !derivative_test(w, u.center().to_complex(), u.size())) continue;
        if (u.at_infinity) {
          // Merge into infinity when the reversed Wronskian has the combined
          // zero order at w = 0 up to the stray roots' size.
          const auto rev = reversed(w, static_cast<std::size_t>(m));
          cplx wc{0.0, 0.0};
          for (const auto& r : u.roots) wc += 1.0 / r;
          wc /= static_cast<double>(std::max<std::size_t>(u.roots.size(), 1));
          if (!derivative_test(rev, wc, u.size())) continue;
        }
        clusters[i] = std::move(u);
        clusters.erase(clusters.begin() + static_cast<long>(j));
        merged = true;
      }
    }
  }

  CriticalSet out;
  for (const auto& c : clusters) {
    CriticalPoint cp;
    cp.point = c.center();
    cp.multiplicity = c.size();
    if (!c.at_infinity) {
      const cplx z = cp.point.to_complex();
      cp.residual = relative_residual(w, z);
      if (!(cp.residual <= opts.residual_tolerance) && cp.multiplicity == 1)
        throw Error(ErrorKind::RootFindingDivergence, "critical point residual above tolerance");
    }
    flag_cycles(map, cp, opts);
    out.entries.push_back(cp);
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    const bool ia = a.point.is_infinity();
    const bool ib = b.point.is_infinity();
    if (ia != ib) return ib;
    if (ia) return false;
    const cplx za = a.point.to_complex();
    const cplx zb = b.point.to_complex();
    if (za.real() != zb.real()) return za.real() < zb.real();
    return za.imag() < zb.imag();
  });
  return out;
}

// ---------------------------------------------------------------------------

PostcriticalSample postcritical_sample(const RationalMap& map, const CriticalSet& crit, int k, int n_max,
                                       const PostcriticalOptions& opts) {
  if (k < 0 || n_max <= k) throw Error(ErrorKind::InvalidArgument, "postcritical sample needs n_max > k >= 0");
  PostcriticalSample s;
  s.k = k;
  s.n_max = n_max;

  // Points of the super-attracting cycles, for capture detection.
  std::vector<SpherePoint> sa_cycle;
  for (const auto& e : crit.entries) {
    if (!e.super_attracting) continue;
    SpherePoint z = e.point;
    for (int p = 0; p < e.cycle_period; ++p) {
      sa_cycle.push_back(z);
      z = evaluate(map, z);
    }
  }

  auto near_any = [](const std::vector<SpherePoint>& set, const SpherePoint& p, double radius) {
    for (const auto& q : set)
      if (chordal_distance(p, q) < radius) return true;
    return false;
  };

  for (const auto& e : crit.entries) {
    if (e.super_attracting) continue;
    CriticalOrbitTail tail;
    tail.critical = e.point;
    SpherePoint z = e.point;
    for (int n = 1; n <= n_max; ++n) {
      try {
        z = evaluate(map, z);
      } catch (const Error& err) {
        throw err.at_index(n - 1);
      }
      if (near_any(sa_cycle, z, opts.capture_radius)) {
        tail.truncated = true;
        tail.truncated_at = n;
        break;
      }
      if (n <= k) continue;
      tail.tail.push_back(z);
      tail.indices.push_back(n);
      if (!near_any(s.points, z, opts.dedupe_radius)) s.points.push_back(z);
    }
    s.per_critical_origin.push_back(std::move(tail));
  }
  return s;
}

PostcriticalSample postcritical_sample(const RationalMap& map, int k, int n_max) {
  return postcritical_sample(map, critical_points(map), k, n_max);
}

CriticalNeighborhood::CriticalNeighborhood(double d, std::vector<SpherePoint> c)
    : delta(d), centers(std::move(c)) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "neighborhood radius must be positive");
}

double CriticalNeighborhood::distance(const SpherePoint& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) best = std::min(best, chordal_distance(p, c));
  return best;
}

CriticalGap critical_gap(const CriticalSet& crit, const PostcriticalSample& sample) {
  CriticalGap g;
  const auto centers = crit.non_super_attracting();
  if (centers.empty() || sample.points.empty()) return g;
  g.empty_postcritical = false;
  for (const auto& c : centers)
    for (const auto& p : sample.points) g.gap = std::min(g.gap, chordal_distance(c, p));
  return g;
}

CriticalGap critical_gap(const RationalMap& map, int k, int n_max) {
  const auto crit = critical_points(map);
  return critical_gap(crit, postcritical_sample(map, crit, k, n_max));
}

}  // namespace mislab
