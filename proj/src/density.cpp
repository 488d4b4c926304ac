#include "mislab/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mislab/classifier.hpp"
#include "mislab/critical.hpp"
#include "mislab/error.hpp"
#include "mislab/parallel.hpp"
#include "mislab/rng.hpp"
#include "mislab/transfer.hpp"

namespace mislab {

int disks_per_level(double k0) {
  if (!(k0 > 0.0 && k0 < 1.0)) throw Error(ErrorKind::InvalidArgument, "k0 must lie in (0, 1)");
  return static_cast<int>(std::ceil(std::numbers::pi / std::asin(k0 / 2.0)));
}

std::vector<DyadicDisk> dyadic_cover(double r, double k0, int levels) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "cover radius must be positive");
  if (levels < 1) throw Error(ErrorKind::InvalidArgument, "cover needs at least one level");
  const int count = disks_per_level(k0);
  std::vector<DyadicDisk> out;
  for (int l = 1; l <= levels; ++l) {
    const double rho = std::ldexp(r, -l);
    for (int j = 0; j < count; ++j)
      out.push_back({std::polar(rho, 2.0 * std::numbers::pi * j / count), k0 * rho, l, j});
  }
  return out;
}

const char* to_string(SampleOutcome o) noexcept {
  switch (o) {
    case SampleOutcome::candidate: return "candidate";
    case SampleOutcome::returned: return "return";
    case SampleOutcome::sink: return "sink";
    case SampleOutcome::indeterminate: return "indeterminate";
  }
  return "unknown";
}

WilsonInterval wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  if (successes <= 0) return {0.0, z * z / (static_cast<double>(n) + z * z)};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

constexpr double kCaptureRadius = 1e-6;
constexpr double kSettle = 1e-9;
constexpr double kExact = 1e-14;

}  // namespace

SampleResult classify_sample(const ParamFamily& family, cplx a, const DiagnosticsConfig& config,
                             const ScanOptions& opts, int u_tenth_from) {
  SampleResult r;
  RationalMap map = RationalMap::polynomial({{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}});
  std::vector<SpherePoint> centers, sa_cycle;
  SpherePoint c;
  try {
    map = family.map_at(a);
    const auto crit = critical_points(map);
    centers = crit.non_super_attracting();
    for (const auto& e : crit.entries) {
      if (!e.super_attracting) continue;
      SpherePoint z = e.point;
      for (int p = 0; p < e.cycle_period; ++p) {
        sa_cycle.push_back(z);
        z = evaluate(map, z);
      }
    }
    c = track_critical_point(family, a).point;
  } catch (const Error&) {
    r.outcome = SampleOutcome::indeterminate;
    return r;
  }

  auto nearest = [](const std::vector<SpherePoint>& set, const SpherePoint& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : set) best = std::min(best, chordal_distance(p, q));
    return best;
  };

  const double return_radius = 0.9 * config.delta * config.margin_factor;
  const double tenth = config.delta / 10.0;
  const int tenth_until = u_tenth_from >= 0 ? u_tenth_from + config.N_tilde : -1;
  bool decided = false;
  bool landed = false;  // orbit sits exactly on a repelling cycle
  std::vector<SpherePoint> z;
  z.reserve(static_cast<std::size_t>(opts.horizon) + 1);
  z.push_back(c);
  for (int n = 1; n <= opts.horizon; ++n) {
    try {
      z.push_back(evaluate(map, z.back()));
    } catch (const Error&) {
      if (!decided) r.outcome = SampleOutcome::indeterminate;
      return r;
    }
    const int j = n - 1;  // z[n] = xi_j
    const SpherePoint& zn = z.back();
    const double dist = nearest(centers, zn);
    if (u_tenth_from >= 0 && r.u_tenth_index < 0 && j >= u_tenth_from && j <= tenth_until && dist < tenth)
      r.u_tenth_index = j;

    if (!decided) {
      if (j >= opts.k && dist < return_radius) {
        r.outcome = SampleOutcome::returned;
        r.event_index = j;
        decided = true;
      } else if (nearest(sa_cycle, zn) < kCaptureRadius) {
        r.outcome = SampleOutcome::sink;
        r.super_attracting_capture = true;
        r.event_index = j;
        decided = true;
      } else if (!landed) {
        for (int p = 1; p <= opts.cycle_period_max && 3 * p < n; ++p) {
          const auto at = [&](int back) -> const SpherePoint& { return z[static_cast<std::size_t>(n - back)]; };
          const double d0 = chordal_distance(at(0), at(p));
          if (d0 >= kSettle) continue;
          const double d1 = chordal_distance(at(p), at(2 * p));
          const double d2 = chordal_distance(at(2 * p), at(3 * p));
          bool sink = d0 < d1 && d1 < d2;
          if (!sink && d0 <= kExact && d1 <= kExact && d2 <= kExact) {
            try {
              sink = std::abs(cycle_multiplier(map, zn, p)) < 1.0;
            } catch (const Error&) {
              sink = false;
            }
            landed = !sink;
          }
          if (sink) {
            r.outcome = SampleOutcome::sink;
            r.event_index = j;
            decided = true;
          }
          break;
        }
      }
    }
    const bool tenth_done = u_tenth_from < 0 || r.u_tenth_index >= 0 || j >= tenth_until;
    if ((decided || (landed && j >= opts.k + opts.cycle_period_max)) && tenth_done) break;
  }
  if (!decided) r.outcome = SampleOutcome::candidate;
  return r;
}

ScanReport scan_disk(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config, int samples,
                     std::uint64_t seed, const ScanOptions& opts) {
  config.validate();
  if (samples < 100) throw Error(ErrorKind::InvalidArgument, "a disk scan needs at least 100 samples");
  if (!(disk.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "scan disk radius must be positive");

  ScanReport rep;
  rep.disk = disk;
  rep.samples = samples;
  rep.rng_seed = seed;
  rep.k = opts.k;
  rep.horizon = opts.horizon;
  rep.cycle_period_max = opts.cycle_period_max;
  rep.delta = config.delta;
  rep.N_tilde = config.N_tilde;

  try {
    const auto growth = disk_growth_trace(family, disk, config, opts.boundary_samples);
    rep.n_escape = growth.n_escape;
    rep.argument_distortion = growth.argument_distortion;
    rep.growth_stop = growth.stop;
  } catch (const Error&) {
    rep.growth_stop = GrowthStop::orbit_error;
  }
  const int u_from = rep.n_escape ? *rep.n_escape : -1;

  const std::uint64_t disk_id = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(disk.level)) << 32) |
                                static_cast<std::uint32_t>(disk.index);
  std::vector<cplx> params(static_cast<std::size_t>(samples));
  std::vector<SampleResult> results(static_cast<std::size_t>(samples));
  parallel_for(results.size(), opts.threads, [&](std::size_t i) {
    auto rng = SplitMix64::stream(seed, disk_id, i);
    const double radius = disk.radius * std::sqrt(rng.uniform());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    params[i] = disk.center + std::polar(radius, angle);
    results[i] = classify_sample(family, params[i], config, opts, u_from);
  });

  // Escalation: strided candidates go through the periodic-orbit search.
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i].outcome == SampleOutcome::candidate) cand.push_back(i);
  const std::size_t n_esc = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(std::max(opts.escalation_samples, 0)));
  for (std::size_t e = 0; e < n_esc; ++e) {
    const std::size_t i = cand[e * cand.size() / n_esc];
    ++rep.escalated;
    try {
      const auto found = find_periodic_orbits(family.map_at(params[i]), opts.escalation_p_max);
      for (const auto& rec : found.orbits) {
        if (rec.kind != CycleKind::sink) continue;
        results[i].outcome = SampleOutcome::sink;
        ++rep.escalation_sinks;
        break;
      }
    } catch (const Error&) {
    }
  }

  int first_tenth = -1;
  for (const auto& r : results) {
    switch (r.outcome) {
      case SampleOutcome::candidate: ++rep.count_candidate; break;
      case SampleOutcome::returned: ++rep.count_return; break;
      case SampleOutcome::sink:
        ++rep.count_sink;
        if (r.super_attracting_capture) ++rep.count_sink_super_attracting;
        break;
      case SampleOutcome::indeterminate: ++rep.count_indeterminate; break;
    }
    if (r.u_tenth_index >= 0 && (first_tenth < 0 || r.u_tenth_index < first_tenth)) first_tenth = r.u_tenth_index;
  }
  if (rep.n_escape && first_tenth >= 0) rep.return_time = first_tenth - *rep.n_escape;

  const double n = static_cast<double>(samples);
  rep.frac_return = static_cast<double>(rep.count_return) / n;
  rep.frac_sink = static_cast<double>(rep.count_sink) / n;
  rep.frac_candidate = static_cast<double>(rep.count_candidate) / n;
  rep.frac_indeterminate = static_cast<double>(rep.count_indeterminate) / n;
  rep.f_hat = 1.0 - rep.frac_candidate;
  rep.candidate_ci = wilson_interval(rep.count_candidate, samples);
  return rep;
}

DensityProfile density_profile(const ParamFamily& family, const DiagnosticsConfig& config, int levels, int samples,
                               std::uint64_t seed, const ScanOptions& opts) {
  DensityProfile prof;
  for (const auto& disk : dyadic_cover(family.base_radius(), config.k0, levels))
    prof.disks.push_back(scan_disk(family, disk, config, samples, seed, opts));

  prof.inf_deficit = 1.0;
  for (int l = 1; l <= levels; ++l) {
    LevelSummary s;
    s.level = l;
    s.min_frac_candidate = 1.0;
    s.inf_deficit = 1.0;
    for (const auto& d : prof.disks) {
      if (d.disk.level != l) continue;
      ++s.disks;
      s.samples += d.samples;
      s.candidates += d.count_candidate;
      s.min_frac_candidate = std::min(s.min_frac_candidate, d.frac_candidate);
      s.max_frac_candidate = std::max(s.max_frac_candidate, d.frac_candidate);
      s.inf_deficit = std::min(s.inf_deficit, d.f_hat);
    }
    s.pooled_ci = wilson_interval(s.candidates, s.samples);
    prof.inf_deficit = std::min(prof.inf_deficit, s.inf_deficit);
    prof.levels.push_back(s);
  }
  return prof;
}

// ---------------------------------------------------------------------------

DegreeAudit degree_count(const std::function<SpherePoint(cplx)>& image, const DyadicDisk& disk, int grid, int targets,
                         double resolution) {
  if (grid < 2 || targets < 1) throw Error(ErrorKind::InvalidArgument, "degree audit grid too small");
  DegreeAudit out;
  out.grid = grid;
  out.targets = targets;
  const auto g = static_cast<std::size_t>(grid);
  auto param = [&](int i, int j, int n) {
    const double x = -1.0 + 2.0 * (i + 0.5) / n;
    const double y = -1.0 + 2.0 * (j + 0.5) / n;
    return std::pair<bool, cplx>{x * x + y * y <= 1.0, disk.center + disk.radius * cplx{x, y}};
  };

  std::vector<std::optional<SpherePoint>> img(g * g);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const auto [in, a] = param(i, j, grid);
      if (!in) continue;
      try {
        img[static_cast<std::size_t>(i) * g + static_cast<std::size_t>(j)] = image(a);
      } catch (const Error&) {
      }
    }

  if (!(resolution > 0.0)) {
    double step = 0.0;
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) {
        const auto& p = img[i * g + j];
        if (!p) continue;
        if (i + 1 < g && img[(i + 1) * g + j]) step = std::max(step, chordal_distance(*p, *img[(i + 1) * g + j]));
        if (j + 1 < g && img[i * g + j + 1]) step = std::max(step, chordal_distance(*p, *img[i * g + j + 1]));
      }
    resolution = 2.0 * step;
  }
  out.resolution = resolution;

  std::vector<int> label(g * g);
  for (int ti = 0; ti < targets; ++ti)
    for (int tj = 0; tj < targets; ++tj) {
      const auto [in, a] = param(ti, tj, targets);
      if (!in) continue;
      SpherePoint y;
      try {
        y = image(a);
      } catch (const Error&) {
        continue;
      }
      std::fill(label.begin(), label.end(), 0);
      for (std::size_t k = 0; k < g * g; ++k)
        if (img[k] && chordal_distance(*img[k], y) < resolution) label[k] = -1;
      int components = 0;
      std::vector<std::size_t> stack;
      for (std::size_t k = 0; k < g * g; ++k) {
        if (label[k] != -1) continue;
        ++components;
        label[k] = components;
        stack.push_back(k);
        while (!stack.empty()) {
          const std::size_t cur = stack.back();
          stack.pop_back();
          const long ci = static_cast<long>(cur / g), cj = static_cast<long>(cur % g);
          for (long di = -1; di <= 1; ++di)
            for (long dj = -1; dj <= 1; ++dj) {
              const long ni = ci + di, nj = cj + dj;
              if (ni < 0 || nj < 0 || ni >= grid || nj >= grid) continue;
              const std::size_t nk = static_cast<std::size_t>(ni) * g + static_cast<std::size_t>(nj);
              if (label[nk] != -1) continue;
              label[nk] = components;
              stack.push_back(nk);
            }
        }
      }
      out.max_preimage_count = std::max(out.max_preimage_count, components);
    }
  return out;
}

namespace {

SpherePoint critical_orbit_point(const ParamFamily& family, cplx a, int j) {
  const RationalMap map = family.map_at(a);
  SpherePoint z = track_critical_point(family, a).point;
  for (int i = 0; i <= j; ++i) z = evaluate(map, z);
  return z;
}

}  // namespace

DegreeAudit degree_audit(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config, int grid,
                         int targets, double resolution) {
  const auto growth = disk_growth_trace(family, disk, config);
  DegreeAudit out;
  out.grid = grid;
  out.targets = targets;
  if (!growth.n_escape) return out;
  const int n = *growth.n_escape;

  // Return step: first j in [n, n + N_tilde] where an orbit along the real
  // diameter of the disk meets U_{delta/10}.
  int step = n + config.N_tilde;
  for (int j = n; j <= n + config.N_tilde && step == n + config.N_tilde; ++j) {
    for (int i = 0; i < grid && step == n + config.N_tilde; ++i) {
      const double x = -1.0 + 2.0 * (i + 0.5) / grid;
      const cplx a = disk.center + disk.radius * cplx{x, 0.0};
      try {
        const auto centers = critical_points(family.map_at(a)).non_super_attracting();
        const SpherePoint p = critical_orbit_point(family, a, j);
        for (const auto& c : centers)
          if (chordal_distance(p, c) < config.delta / 10.0) step = j;
      } catch (const Error&) {
      }
    }
  }
  out = degree_count([&](cplx a) { return critical_orbit_point(family, a, step); }, disk, grid, targets, resolution);
  out.step = step;
  return out;
}

}  // namespace mislab
