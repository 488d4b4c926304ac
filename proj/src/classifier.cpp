#include "mislab/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mislab/error.hpp"

namespace mislab {

const char* to_string(CycleKind kind) noexcept {
  switch (kind) {
    case CycleKind::super_attracting: return "super_attracting";
    case CycleKind::sink: return "sink";
    case CycleKind::parabolic_candidate: return "parabolic_candidate";
    case CycleKind::repelling: return "repelling";
  }
  return "unknown";
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::misiurewicz_candidate: return "misiurewicz_candidate";
    case Verdict::rejected: return "rejected";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

const char* to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::sink_found: return "sink_found";
    case RejectReason::parabolic_candidate_found: return "parabolic_candidate_found";
    case RejectReason::postcritical_enters_U_delta: return "postcritical_enters_U_delta";
    case RejectReason::critical_cycle_capture: return "critical_cycle_capture";
    case RejectReason::indeterminate_budget: return "indeterminate_budget";
  }
  return "unknown";
}

CycleKind classify_multiplier(cplx multiplier, const MultiplierBands& bands) {
  const double m = std::abs(multiplier);
  if (m < bands.super_attracting) return CycleKind::super_attracting;
  if (m < 1.0 - bands.parabolic) return CycleKind::sink;
  if (m <= 1.0 + bands.parabolic) return CycleKind::parabolic_candidate;
  return CycleKind::repelling;
}

namespace {

struct PowerJet {
  SpherePoint image;
  cplx value;       // image coordinate in the start chart
  cplx derivative;  // d(value)/d(start coordinate)
};

PowerJet power_jet(const RationalMap& map, const SpherePoint& z, int p) {
  const Chart c = z.chart();
  SpherePoint cur = z;
  cplx d{1.0, 0.0};
  for (int s = 0; s < p; ++s) {
    const auto jet = local_jet(map, cur, s == p - 1 ? std::optional<Chart>(c) : std::nullopt);
    d *= jet.derivative;
    cur = jet.image;
  }
  return {cur, cur.coordinate(c), d};
}

SpherePoint iterate_n(const RationalMap& map, SpherePoint z, int n) {
  for (int i = 0; i < n; ++i) z = evaluate(map, z);
  return z;
}

SpherePoint point_in_chart(Chart c, cplx u) {
  if (c == Chart::standard) return SpherePoint::from_complex(u);
  if (std::abs(u) <= kInvertedBound) return SpherePoint::from_chart(Chart::inverted, u);
  return SpherePoint::from_complex(1.0 / u);
}

std::optional<SpherePoint> newton_cycle_point(const RationalMap& map, SpherePoint z, int p, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    const PowerJet pj = power_jet(map, z, p);
    const cplx u = z.value();
    const cplx step = (pj.value - u) / (pj.derivative - 1.0);
    if (!std::isfinite(std::abs(step))) return std::nullopt;
    const cplx next = u - step;
    z = point_in_chart(z.chart(), next);
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(next))) return z;
  }
  return z;
}

}  // namespace

cplx cycle_multiplier(const RationalMap& map, const SpherePoint& z, int period) {
  return power_jet(map, z, period).derivative;
}

PeriodicSearch find_periodic_orbits(const RationalMap& map, int p_max, const PeriodicSearchOptions& opts) {
  if (p_max < 1 || p_max > 20) throw Error(ErrorKind::InvalidArgument, "p_max must lie in [1, 20]");
  PeriodicSearch out;
  const int d = map.degree();
  for (int p = 1; p <= p_max; ++p) {
    const int base_seeds = opts.seeds > 0 ? opts.seeds : 40 * p * d * d;
    // Points of period dividing p number d^p + 1 with multiplicity; more
    // seeds are tried while the count is short.
    const double expected = std::pow(static_cast<double>(d), p) + 1.0;
    for (int round = 0; round <= opts.refine_rounds; ++round) {
      const int n_seeds = base_seeds << round;
      for (const auto& seed : fibonacci_sphere(n_seeds)) {
        ++out.seeds_tried;
        std::optional<SpherePoint> z;
        try {
          z = newton_cycle_point(map, seed, p, opts.newton_iterations);
          if (z && chordal_distance(iterate_n(map, *z, p), *z) >= opts.cycle_tolerance) z.reset();
        } catch (const Error&) {
          z.reset();
        }
        if (!z) {
          ++out.seeds_dropped;
          continue;
        }
        bool lower = false;
        for (int q = 1; q < p && !lower; ++q)
          if (p % q == 0 && chordal_distance(iterate_n(map, *z, q), *z) < opts.cycle_tolerance) lower = true;
        if (lower) continue;
        bool known = false;
        for (const auto& rec : out.orbits) {
          if (rec.period != p) continue;
          for (const auto& q : rec.cycle)
            if (chordal_distance(q, *z) < opts.dedupe_radius) known = true;
          if (known) break;
        }
        if (known) continue;

        PeriodicOrbitRecord rec;
        rec.period = p;
        SpherePoint w = *z;
        for (int i = 0; i < p; ++i) {
          rec.cycle.push_back(w);
          w = evaluate(map, w);
        }
        rec.multiplier = cycle_multiplier(map, *z, p);
        rec.kind = classify_multiplier(rec.multiplier, opts.bands);
        out.orbits.push_back(std::move(rec));
      }
      double found = 0.0;
      for (const auto& rec : out.orbits)
        if (p % rec.period == 0) found += rec.period;
      if (found >= expected) break;
      if (round == opts.refine_rounds) out.incomplete_periods.push_back(p);
    }
  }
  return out;
}

ClassificationVerdict classify_map(const RationalMap& map, double delta, int k, int n_max, int p_max,
                                   const ClassifyOptions& opts) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  ClassificationVerdict v;
  v.delta = delta;
  v.k = k;
  v.n_max = n_max;
  v.p_max = p_max;
  v.margin_factor = opts.margin_factor;

  const auto cycles = find_periodic_orbits(map, p_max, opts.periodic);
  v.cycles_found = static_cast<int>(cycles.orbits.size());
  v.incomplete_periods = cycles.incomplete_periods;
  for (const auto kind : {CycleKind::sink, CycleKind::parabolic_candidate}) {
    for (const auto& rec : cycles.orbits) {
      if (rec.kind != kind) continue;
      v.verdict = Verdict::rejected;
      v.reason = kind == CycleKind::sink ? RejectReason::sink_found : RejectReason::parabolic_candidate_found;
      v.evidence.cycle = rec;
      v.evidence.point = rec.cycle.front();
      v.gap = std::numeric_limits<double>::infinity();
      return v;
    }
  }

  CriticalSet crit;
  PostcriticalSample sample;
  try {
    crit = critical_points(map);
    sample = postcritical_sample(map, crit, k, n_max);
  } catch (const Error& e) {
    v.verdict = Verdict::indeterminate;
    v.reason = RejectReason::indeterminate_budget;
    v.evidence.orbit_index = static_cast<int>(e.index());
    v.evidence.note = e.what();
    return v;
  }
  v.gap = critical_gap(crit, sample).gap;

  for (const auto& tail : sample.per_critical_origin) {
    if (!tail.truncated) continue;
    v.verdict = Verdict::rejected;
    v.reason = RejectReason::critical_cycle_capture;
    v.evidence.orbit_index = tail.truncated_at;
    v.evidence.critical = tail.critical;
    v.evidence.note = "critical orbit captured by a super-attracting cycle";
    return v;
  }

  const double radius = opts.margin_factor * delta;
  const auto centers = crit.non_super_attracting();
  for (const auto& tail : sample.per_critical_origin) {
    for (std::size_t i = 0; i < tail.tail.size(); ++i) {
      for (const auto& c : centers) {
        const double dist = chordal_distance(tail.tail[i], c);
        if (dist >= radius) continue;
        v.verdict = Verdict::rejected;
        v.reason = RejectReason::postcritical_enters_U_delta;
        v.evidence.orbit_index = tail.indices[i];
        v.evidence.critical = c;
        v.evidence.point = tail.tail[i];
        v.evidence.distance = dist;
        return v;
      }
    }
  }
  return v;
}

ExpansionEstimate expansion_estimate(const RationalMap& map, const std::vector<SpherePoint>& centers,
                                     double delta_prime, int n, int samples) {
  if (!(delta_prime > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta_prime must be positive");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "expansion horizon must be positive");
  ExpansionEstimate est;
  if (samples <= 0 || centers.empty())
    throw Error(ErrorKind::NoAdmissibleSamples, "no samples requested or empty center set");

  auto dist_to_centers = [&](const SpherePoint& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, chordal_distance(p, c));
    return best;
  };

  // R2 low-discrepancy sequence: first coordinate sets log10 of the radius
  // over 12 decades, second the angle.
  constexpr double kAlpha1 = 0.7548776662466927;
  constexpr double kAlpha2 = 0.5698402909980532;
  std::vector<std::vector<double>> logs;
  double lambda = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const SpherePoint& base = centers[static_cast<std::size_t>(i) % centers.size()];
    const double u1 = std::fmod(0.5 + kAlpha1 * i, 1.0);
    const double u2 = std::fmod(0.5 + kAlpha2 * i, 1.0);
    const double rho = delta_prime * std::pow(10.0, -12.0 * u1);
    const cplx v = base.value();
    const cplx offset = std::polar(0.5 * rho * (1.0 + std::norm(v)), 2.0 * std::numbers::pi * u2);
    SpherePoint z;
    try {
      z = point_in_chart(base.chart(), v + offset);
    } catch (const Error&) {
      ++est.exited;
      continue;
    }
    if (dist_to_centers(z) >= delta_prime) {
      ++est.exited;
      continue;
    }
    std::vector<double> cum{0.0};
    bool inside = true;
    try {
      for (int j = 0; j < n && inside; ++j) {
        const auto jet = local_jet(map, z);
        const double s = std::abs(jet.derivative) * (1.0 + std::norm(z.value())) / (1.0 + std::norm(jet.image.value()));
        cum.push_back(cum.back() + std::log(s));
        z = jet.image;
        inside = dist_to_centers(z) < delta_prime;
      }
    } catch (const Error&) {
      inside = false;
    }
    if (!inside) {
      ++est.exited;
      continue;
    }
    ++est.admissible;
    lambda = std::min(lambda, std::exp(cum.back() / n));
    logs.push_back(std::move(cum));
  }
  if (est.admissible == 0)
    throw Error(ErrorKind::NoAdmissibleSamples,
                "all " + std::to_string(est.exited) + " sampled orbits left the neighborhood");
  est.lambda_hat = lambda;
  const double log_lambda = std::log(lambda);
  double c = std::numeric_limits<double>::infinity();
  for (const auto& cum : logs)
    for (std::size_t j = 1; j < cum.size(); ++j)
      c = std::min(c, std::exp(cum[j] - static_cast<double>(j) * log_lambda));
  est.c_hat = c;
  return est;
}

ExpansionEstimate expansion_estimate(const RationalMap& map, double delta_prime, int n, int samples,
                                     int sample_horizon) {
  const auto sample = postcritical_sample(map, 0, sample_horizon);
  return expansion_estimate(map, sample.points, delta_prime, n, samples);
}

}  // namespace mislab
