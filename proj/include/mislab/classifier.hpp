#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mislab/critical.hpp"
#include "mislab/sphere.hpp"

namespace mislab {

enum class CycleKind { super_attracting, sink, parabolic_candidate, repelling };

const char* to_string(CycleKind kind) noexcept;

struct MultiplierBands {
  double super_attracting = 1e-8;  // |m| below this
  double parabolic = 1e-6;         // | |m| - 1 | within this
};

CycleKind classify_multiplier(cplx multiplier, const MultiplierBands& bands = {});

struct PeriodicOrbitRecord {
  std::vector<SpherePoint> cycle;
  int period = 0;
  cplx multiplier{0.0, 0.0};
  CycleKind kind = CycleKind::repelling;
};

struct PeriodicSearchOptions {
  int seeds = 0;              // per period; 0 means 40 p d^2
  int newton_iterations = 80;
  int refine_rounds = 2;           // seed doublings while the point count is short
  double cycle_tolerance = 1e-9;   // chordal |R^p(z) - z|
  double dedupe_radius = 1e-7;     // chordal
  MultiplierBands bands;
};

struct PeriodicSearch {
  std::vector<PeriodicOrbitRecord> orbits;
  int seeds_tried = 0;
  int seeds_dropped = 0;  // Newton runs that did not converge
  // Periods whose points fell short of d^p + 1 after all refinement rounds.
  std::vector<int> incomplete_periods;
};

// Multiplier of the cycle through z: the derivative of R^p in the chart of z.
cplx cycle_multiplier(const RationalMap& map, const SpherePoint& z, int period);

// Cycles of exact period p <= p_max found by Newton's method on R^p(z) - z
// from quasi-uniform seeds; p_max is capped at 20.
PeriodicSearch find_periodic_orbits(const RationalMap& map, int p_max, const PeriodicSearchOptions& opts = {});

enum class Verdict { misiurewicz_candidate, rejected, indeterminate };
enum class RejectReason {
  none,
  sink_found,
  parabolic_candidate_found,
  postcritical_enters_U_delta,
  critical_cycle_capture,  // a free critical orbit falls into a super-attracting basin
  indeterminate_budget,
};

const char* to_string(Verdict v) noexcept;
const char* to_string(RejectReason r) noexcept;

struct VerdictEvidence {
  int orbit_index = -1;              // n of the offending f^n(c)
  std::optional<SpherePoint> critical;
  std::optional<SpherePoint> point;
  double distance = 0.0;
  std::optional<PeriodicOrbitRecord> cycle;
  std::string note;

  bool empty() const { return orbit_index < 0 && !cycle && note.empty(); }
};

struct ClassifyOptions {
  double margin_factor = 1.0;  // test P^k against U_{margin * delta}
  PeriodicSearchOptions periodic;
};

struct ClassificationVerdict {
  Verdict verdict = Verdict::misiurewicz_candidate;
  RejectReason reason = RejectReason::none;
  VerdictEvidence evidence;
  double delta = 0.0;
  int k = 0;
  int n_max = 0;
  int p_max = 0;
  double margin_factor = 1.0;
  double gap = 0.0;  // critical gap of the sample, +inf when empty
  int cycles_found = 0;
  std::vector<int> incomplete_periods;  // periods whose cycle count fell short
};

ClassificationVerdict classify_map(const RationalMap& map, double delta, int k, int n_max, int p_max,
                                   const ClassifyOptions& opts = {});

struct ExpansionEstimate {
  double lambda_hat = 0.0;
  double c_hat = 0.0;  // min over samples and j <= n of |(R^j)'| / lambda_hat^j
  int admissible = 0;
  int exited = 0;
};

// Expansion along orbits that stay within chordal delta_prime of `centers`
// for n steps. Offsets from the centers are drawn at log-uniform radii so that
// orbits near repelling cycles are represented.
ExpansionEstimate expansion_estimate(const RationalMap& map, const std::vector<SpherePoint>& centers,
                                     double delta_prime, int n, int samples);
// Same, around the postcritical sample P^0 with horizon `sample_horizon`.
ExpansionEstimate expansion_estimate(const RationalMap& map, double delta_prime, int n, int samples,
                                     int sample_horizon = 64);

}  // namespace mislab
