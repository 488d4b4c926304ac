#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mislab/distortion.hpp"
#include "mislab/family.hpp"

namespace mislab {

// Disks B(a0, k0 |a0|) with |a0| = r 2^-l for l = 1..levels, spaced evenly on
// each circle so that the annulus r 2^-l (1 +- k0/2) is covered.
std::vector<DyadicDisk> dyadic_cover(double r, double k0, int levels);

// Number of disks per level: ceil(pi / asin(k0 / 2)).
int disks_per_level(double k0);

enum class SampleOutcome { candidate, returned, sink, indeterminate };
const char* to_string(SampleOutcome o) noexcept;

struct SampleResult {
  SampleOutcome outcome = SampleOutcome::candidate;
  bool super_attracting_capture = false;  // sink by capture into a super-attracting basin
  int event_index = -1;                   // j of the deciding xi_j
  int u_tenth_index = -1;                 // first j >= from with xi_j in U_{delta/10}
};

struct ScanOptions {
  int k = 0;
  int horizon = 1000;
  int cycle_period_max = 16;       // periods watched by the contraction test
  int escalation_samples = 1;      // candidates re-checked by the periodic-orbit search
  int escalation_p_max = 8;
  int threads = 1;
  int boundary_samples = 16;
};

// Fate of the marked critical orbit at one parameter. `u_tenth_from` is the
// first index from which entries into U_{delta/10} are recorded (-1: none).
SampleResult classify_sample(const ParamFamily& family, cplx a, const DiagnosticsConfig& config,
                             const ScanOptions& opts, int u_tenth_from = -1);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// 95% Wilson score interval for successes out of n.
WilsonInterval wilson_interval(long successes, long n, double z = 1.959963984540054);

struct ScanReport {
  DyadicDisk disk;
  int samples = 0;
  std::uint64_t rng_seed = 0;
  std::optional<int> n_escape;
  std::optional<int> return_time;  // m: first xi_{n_escape + m}(D0) in U_{delta/10}
  long count_return = 0;
  long count_sink = 0;
  long count_sink_super_attracting = 0;
  long count_candidate = 0;
  long count_indeterminate = 0;
  int escalated = 0;
  int escalation_sinks = 0;
  double frac_return = 0.0;
  double frac_sink = 0.0;
  double frac_candidate = 0.0;
  double frac_indeterminate = 0.0;
  double f_hat = 0.0;
  WilsonInterval candidate_ci;
  double argument_distortion = 0.0;
  GrowthStop growth_stop = GrowthStop::horizon;
  // Budgets.
  int k = 0;
  int horizon = 0;
  int cycle_period_max = 0;
  double delta = 0.0;
  int N_tilde = 0;
};

ScanReport scan_disk(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config, int samples,
                     std::uint64_t seed, const ScanOptions& opts = {});

struct LevelSummary {
  int level = 0;
  int disks = 0;
  long samples = 0;
  long candidates = 0;
  double min_frac_candidate = 0.0;
  double max_frac_candidate = 0.0;
  double inf_deficit = 0.0;  // min over disks of f_hat
  WilsonInterval pooled_ci;
};

struct DensityProfile {
  std::vector<ScanReport> disks;
  std::vector<LevelSummary> levels;
  double inf_deficit = 0.0;
};

DensityProfile density_profile(const ParamFamily& family, const DiagnosticsConfig& config, int levels, int samples,
                               std::uint64_t seed, const ScanOptions& opts = {});

struct DegreeAudit {
  int max_preimage_count = 0;
  double resolution = 0.0;
  int grid = 0;
  int targets = 0;
  int step = -1;  // n + m of the audited map, -1 when growth did not reach S
};

// Largest number of connected parameter-grid clusters mapped within
// `resolution` (chordal) of one target; targets are images of a coarse grid.
// resolution <= 0 picks twice the largest image step between grid neighbors.
DegreeAudit degree_count(const std::function<SpherePoint(cplx)>& image, const DyadicDisk& disk, int grid, int targets,
                         double resolution);

DegreeAudit degree_audit(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config,
                         int grid = 48, int targets = 8, double resolution = 0.0);

}  // namespace mislab
