#pragma once

#include <limits>
#include <vector>

#include "mislab/sphere.hpp"

namespace mislab {

struct CriticalPoint {
  SpherePoint point;
  int multiplicity = 1;
  bool super_attracting = false;
  int cycle_period = 0;  // period of the super-attracting cycle, 0 if none
  double residual = 0.0;
};

struct CriticalSet {
  std::vector<CriticalPoint> entries;

  int total_multiplicity() const;
  std::vector<SpherePoint> non_super_attracting() const;
  std::vector<SpherePoint> super_attracting() const;
};

struct CriticalOptions {
  double cluster_radius = 1e-6;       // chordal
  double merge_radius = 1e-3;         // secondary merge, needs the derivative test
  double residual_tolerance = 1e-8;   // relative |W(z)|
  int cycle_search_period = 64;
  double cycle_tolerance = 1e-9;      // chordal
};

// Critical points of R with multiplicity (roots of P'Q - PQ' plus the
// multiplicity at infinity), flagged when they lie on a super-attracting cycle.
CriticalSet critical_points(const RationalMap& map, const CriticalOptions& opts = {});

// The Wronskian P'Q - PQ'.
std::vector<cplx> wronskian(const RationalMap& map);

struct CriticalOrbitTail {
  SpherePoint critical;
  std::vector<SpherePoint> tail;  // f^n(c) for the stored n
  std::vector<int> indices;       // the n of each tail point
  bool truncated = false;         // orbit captured by a super-attracting cycle
  int truncated_at = -1;
};

struct PostcriticalSample {
  int k = 0;
  int n_max = 0;
  std::vector<SpherePoint> points;  // deduplicated union of all tails
  std::vector<CriticalOrbitTail> per_critical_origin;
};

struct PostcriticalOptions {
  double dedupe_radius = 1e-12;   // chordal
  double capture_radius = 1e-6;   // chordal distance to a super-attracting cycle
};

// Forward orbits f^n(c), k < n <= n_max, of the non-super-attracting critical
// points.
PostcriticalSample postcritical_sample(const RationalMap& map, const CriticalSet& crit, int k, int n_max,
                                       const PostcriticalOptions& opts = {});
PostcriticalSample postcritical_sample(const RationalMap& map, int k, int n_max);

// Union of chordal balls B(c, delta) over the non-super-attracting critical
// points.
struct CriticalNeighborhood {
  double delta = 0.0;
  std::vector<SpherePoint> centers;

  CriticalNeighborhood(double delta, std::vector<SpherePoint> centers);
  double distance(const SpherePoint& p) const;
  bool contains(const SpherePoint& p) const { return distance(p) < delta; }
};

struct CriticalGap {
  double gap = std::numeric_limits<double>::infinity();
  bool empty_postcritical = true;  // gap is the +inf sentinel
};

CriticalGap critical_gap(const RationalMap& map, int k, int n_max);
CriticalGap critical_gap(const CriticalSet& crit, const PostcriticalSample& sample);

}  // namespace mislab
