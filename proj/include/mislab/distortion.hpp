#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mislab/family.hpp"
#include "mislab/sphere.hpp"

namespace mislab {

// The constants of one run. Desk-scale tolerances sit next to the asymptotic
// targets they stand in for; both are logged.
struct DiagnosticsConfig {
  double delta = 0.3;
  double delta_prime = 0.25;
  double delta_dprime = 0.0025;
  double S = 0.1;
  double S1 = 0.01;
  int N_tilde = 30;
  double k0 = 0.25;
  double gamma_floor = 0.34657359027997264;  // log(2) / 2
  int growth_horizon = 200;
  double margin_factor = 1.0;
  std::map<std::string, double> tolerances = {
      {"argument_distortion", 0.1},
      {"q_drift", 0.01},
      {"comparability_low", 0.25},
      {"comparability_high", 4.0},
      {"k0_epsilon", 0.1},
  };
  std::map<std::string, double> asymptotic_targets = {
      {"argument_distortion", 0.01},
      {"q_drift", 0.001},
  };

  double tolerance(const std::string& name) const;
  // Throws InvalidArgument when the ordering constraints fail.
  void validate() const;
};

struct DyadicDisk {
  cplx center{0.0, 0.0};
  double radius = 0.0;
  int level = 0;
  int index = 0;  // position within its level
};

// ---------------------------------------------------------------------------

struct ProductBound {
  double lhs = 0.0;  // |prod(1 + u) - 1|
  double rhs = 0.0;  // exp(sum |u|) - 1
};

ProductBound product_distortion_bound(std::span<const cplx> u);

struct LinearizationError {
  double error = 0.0;
  double max_separation = 0.0;  // chordal, over the two orbits
  bool separation_exceeded = false;
};

// |(R^n(z) - R^n(w)) / ((R^n)'(w)(z - w)) - 1| in the charts of the w-orbit.
LinearizationError linearization_error(const RationalMap& map, const SpherePoint& z, const SpherePoint& w, int n,
                                       double delta_prime = 0.25);

struct ParameterDistortion {
  double ratio = 0.0;  // |dz(a) / dz(b) - 1|
  bool tube_a = false;
  bool tube_b = false;
};

ParameterDistortion parameter_distortion_ratio(const ParamFamily& family, cplx a, cplx b, int n,
                                               double delta_prime = 0.25);

struct PairDistortion {
  double ratio = 0.0;
  int proximity_violation = -1;  // first k with chordal |z_k - w_k| > S1
  int avoidance_violation = -1;  // first k with z_k or w_k in U_{delta/10}
  double relative_derivative_sum = 0.0;  // sum |R_a'(z_j) - R_b'(w_j)| / |R_b'(w_j)|
  double separation_sum = 0.0;           // sum |z_j - w_j|
};

// |(R^n)'(z, a) / (R^n)'(w, b) - 1|, with the proximity and avoidance flags.
PairDistortion extended_distortion_ratio(const ParamFamily& family, cplx a, cplx b, cplx z, cplx w, int n, double S1,
                                         double delta);
// |(R^n)'(z, a) / (R^n)'(w, b)|; the proximity flag is not evaluated.
PairDistortion global_distortion_ratio(const ParamFamily& family, cplx a, cplx b, cplx z, cplx w, int n,
                                       double delta);

// ---------------------------------------------------------------------------

enum class GrowthStop { reached_scale, tube_exit, horizon, orbit_error };
const char* to_string(GrowthStop s) noexcept;

struct DiskGrowthRecord {
  DyadicDisk disk;
  std::optional<int> n_escape;
  GrowthStop stop = GrowthStop::horizon;
  std::vector<double> diam_sequence;         // chordal
  std::vector<double> planar_diam_sequence;
  std::vector<bool> inside_tube;
  double argument_distortion = 0.0;
  std::vector<double> comparability;         // per step, NaN where undefined
  double comparability_min = 0.0;
  double comparability_max = 0.0;
  int order_k = 0;
  bool k0_condition_ok = true;
  int growth_step = -1;
  bool growth_step_exact = false;  // both bounds of the index choice held
  double M0 = 0.0;
  int failed_sample = -1;
};

// Evolves the center and `boundary_samples` points of the disk boundary along
// the critical-value orbit until the chordal diameter reaches S, a sample leaves
// the chordal delta'-tube around the unperturbed postcritical sample, or the
// growth horizon runs out.
DiskGrowthRecord disk_growth_trace(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config,
                                   int boundary_samples = 16);

}  // namespace mislab
