#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mislab/family.hpp"
#include "mislab/sphere.hpp"

namespace mislab {

// ---------------------------------------------------------------------------
// Critical point tracking

struct TrackedCritical {
  SpherePoint point;
  int multiplicity_at_base = 1;
  // Critical points of R_a inside the matching disk; more than one means the
  // marked point split into a star and `branch` indexes the chosen one.
  int branch_count = 1;
  int branch = 0;
  bool split = false;
};

// The marked critical point of R_0.
SpherePoint base_critical_point(const ParamFamily& family);

TrackedCritical track_critical_point(const ParamFamily& family, cplx a);

// ---------------------------------------------------------------------------
// Derivative transfer along the critical-value orbit

struct TransferState {
  int n = 0;
  SpherePoint xi;
  xcplx xi_value;  // planar coordinate of xi
  xcplx dz;        // d/dz R^n at v(a)
  xcplx da;        // d/da R^n(v(a), a)
  xcplx q;         // da / dz
};

SpherePoint to_sphere(xcplx z);

using PartialsFn = std::function<Partials(const xcplx&)>;

// Advances dz' = R_z dz, da' = R_z da + R_a one step at a time.
class TransferStepper {
 public:
  TransferStepper(PartialsFn partials, xcplx xi0, xcplx da0);

  const TransferState& state() const noexcept { return state_; }
  const TransferState& step();
  // Largest |R_z| met so far.
  long double sup_abs_dz() const noexcept { return sup_dz_; }

 private:
  PartialsFn partials_;
  TransferState state_;
  long double sup_dz_ = 0.0L;
};

struct TransferTrace {
  std::vector<TransferState> states;
  TrackedCritical critical;
  int collision_index = -1;  // first xi within 1e-12 of a critical point
  long double sup_abs_dz = 0.0L;
};

// Recursion from an explicit start point; states 0..n.
TransferTrace transfer_from(const PartialsFn& partials, xcplx xi0, xcplx da0, int n);

// Recursion from v(a) = R(c(a), a), with da_0 = d/da R(c(a), a).
TransferTrace transfer_recursion(const ParamFamily& family, cplx a, int n);

// ---------------------------------------------------------------------------
// Shadow orbits

struct ShadowOptions {
  int extra_horizon = 30;
  int max_doublings = 5;
  double convergence = 1e-13;        // chordal change of mu between sweeps
  double residual_tolerance = 1e-9;  // chordal |R_a(mu_k) - mu_{k+1}|
  double max_motion = 0.25;          // chordal |mu_k - anchor_k|
};

struct ShadowOrbit {
  std::vector<SpherePoint> mu;
  std::vector<double> residuals;
  std::vector<SpherePoint> anchors;
  int extra_horizon = 0;
  double max_motion = 0.0;
};

// R_0^k(v(0)) for k = 0..n.
std::vector<SpherePoint> anchor_orbit(const ParamFamily& family, int n);

// Preimage of `target` under `map` closest to `anchor`, solved in the
// anchor's chart.
SpherePoint nearest_preimage(const RationalMap& map, const SpherePoint& target, const SpherePoint& anchor);

ShadowOrbit shadow_orbit(const ParamFamily& family, cplx a, int n, const ShadowOptions& opts = {});

// ---------------------------------------------------------------------------
// Transversality

// x(a) = xi_0(a) - mu_0(a) in the chart of v(0), plus the star branch used.
struct TransversalitySample {
  cplx x;
  TrackedCritical critical;
};

TransversalitySample transversality_value(const ParamFamily& family, cplx a, const ShadowOptions& opts = {});

struct TransversalityFit {
  int k = 0;
  cplx K1{0.0, 0.0};
  double fit_error = 0.0;
  double slope = 0.0;
};

TransversalityFit transversality_probe(const ParamFamily& family, const std::vector<double>& radii,
                                       int samples_per_circle, const ShadowOptions& opts = {});

// ---------------------------------------------------------------------------
// Stability of the transfer ratio

struct QStability {
  int N = -1;
  double max_rel_drift = 0.0;
  int last_index = -1;    // end of the measured range
  int return_index = -1;  // first return of xi into U_{delta/10}, -1 if none
  double asymptotic_target = 1e-3;
};

// Drift of Q_m against Q_N for m in [N, min(last state, return_index)], with N
// the first index where chordal |xi - mu| >= delta_dprime.
QStability q_drift(const std::vector<TransferState>& states, const std::vector<SpherePoint>& mu,
                   double delta_dprime, int return_index);

QStability q_stability_check(const ParamFamily& family, cplx a, double delta_dprime, int n, double delta = 0.3,
                             const ShadowOptions& opts = {});

}  // namespace mislab
