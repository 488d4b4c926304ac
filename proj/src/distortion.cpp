#include "mislab/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mislab/critical.hpp"
#include "mislab/error.hpp"
#include "mislab/transfer.hpp"

namespace mislab {

double DiagnosticsConfig::tolerance(const std::string& name) const {
  const auto it = tolerances.find(name);
  if (it == tolerances.end()) throw Error(ErrorKind::InvalidArgument, "unknown tolerance " + name);
  return it->second;
}

void DiagnosticsConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be positive");
  };
  positive(delta, "delta");
  positive(delta_prime, "delta_prime");
  positive(delta_dprime, "delta_dprime");
  positive(S, "S");
  positive(S1, "S1");
  positive(margin_factor, "margin_factor");
  if (!(delta_dprime < delta_prime)) throw Error(ErrorKind::InvalidArgument, "delta_dprime must be below delta_prime");
  if (!(S1 < S)) throw Error(ErrorKind::InvalidArgument, "S1 must be below S");
  if (!(k0 > 0.0 && k0 < 1.0)) throw Error(ErrorKind::InvalidArgument, "k0 must lie in (0, 1)");
  if (N_tilde < 1) throw Error(ErrorKind::InvalidArgument, "N_tilde must be positive");
  if (growth_horizon < 1) throw Error(ErrorKind::InvalidArgument, "growth_horizon must be positive");
  for (const auto& [name, value] : tolerances) positive(value, name.c_str());
}

ProductBound product_distortion_bound(std::span<const cplx> u) {
  cplx prod{1.0, 0.0};
  double sum = 0.0;
  for (const auto& v : u) {
    prod *= 1.0 + v;
    sum += std::abs(v);
  }
  return {std::abs(prod - 1.0), std::expm1(sum)};
}

LinearizationError linearization_error(const RationalMap& map, const SpherePoint& z, const SpherePoint& w, int n,
                                       double delta_prime) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "linearization needs at least one step");
  const Chart start = w.chart();
  const cplx dz0 = z.coordinate(start) - w.value();
  if (dz0 == cplx{0.0, 0.0}) throw Error(ErrorKind::InvalidArgument, "linearization needs z != w");
  LinearizationError out;
  SpherePoint zk = z;
  SpherePoint wk = w;
  cplx deriv{1.0, 0.0};
  out.max_separation = chordal_distance(zk, wk);
  for (int k = 0; k < n; ++k) {
    const auto jet = local_jet(map, wk);
    deriv *= jet.derivative;
    wk = jet.image;
    zk = evaluate(map, zk);
    out.max_separation = std::max(out.max_separation, chordal_distance(zk, wk));
  }
  const cplx diff = zk.coordinate(wk.chart()) - wk.value();
  out.error = std::abs(diff / (deriv * dz0) - 1.0);
  out.separation_exceeded = out.max_separation > delta_prime;
  return out;
}

namespace {

bool within_tube(const std::vector<TransferState>& states, const std::vector<SpherePoint>& mu, double delta_prime) {
  for (std::size_t k = 0; k < states.size() && k < mu.size(); ++k)
    if (chordal_distance(states[k].xi, mu[k]) > delta_prime) return false;
  return true;
}

}  // namespace

ParameterDistortion parameter_distortion_ratio(const ParamFamily& family, cplx a, cplx b, int n, double delta_prime) {
  ParameterDistortion out;
  const auto ta = transfer_recursion(family, a, n);
  const auto tb = transfer_recursion(family, b, n);
  out.ratio = static_cast<double>(std::abs(ta.states.back().dz / tb.states.back().dz - 1.0L));
  try {
    out.tube_a = within_tube(ta.states, shadow_orbit(family, a, n).mu, delta_prime);
  } catch (const Error&) {
    out.tube_a = false;
  }
  try {
    out.tube_b = within_tube(tb.states, shadow_orbit(family, b, n).mu, delta_prime);
  } catch (const Error&) {
    out.tube_b = false;
  }
  return out;
}

namespace {

PairDistortion pair_distortion(const ParamFamily& family, cplx a, cplx b, cplx z, cplx w, int n, double S1,
                               double delta, bool check_proximity) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "step count must be nonnegative");
  const FamilySlice sa = family.slice({a.real(), a.imag()});
  const FamilySlice sb = family.slice({b.real(), b.imag()});
  const auto ca = critical_points(family.map_at(a)).non_super_attracting();
  const auto cb = critical_points(family.map_at(b)).non_super_attracting();
  auto in_u = [&](const std::vector<SpherePoint>& centers, const SpherePoint& p) {
    for (const auto& c : centers)
      if (chordal_distance(p, c) < delta / 10.0) return true;
    return false;
  };

  PairDistortion out;
  xcplx zk(z.real(), z.imag());
  xcplx wk(w.real(), w.imag());
  xcplx ratio{1.0L, 0.0L};
  for (int k = 0; k <= n; ++k) {
    const SpherePoint pz = to_sphere(zk);
    const SpherePoint pw = to_sphere(wk);
    if (check_proximity && out.proximity_violation < 0 && chordal_distance(pz, pw) > S1) out.proximity_violation = k;
    if (out.avoidance_violation < 0 && (in_u(ca, pz) || in_u(cb, pw))) out.avoidance_violation = k;
    if (k == n) break;
    const Partials pa = sa.partials(zk);
    const Partials pb = sb.partials(wk);
    ratio *= pa.dz / pb.dz;
    out.relative_derivative_sum += static_cast<double>(std::abs(pa.dz - pb.dz) / std::abs(pb.dz));
    out.separation_sum += static_cast<double>(std::abs(zk - wk));
    zk = pa.value;
    wk = pb.value;
  }
  out.ratio = static_cast<double>(check_proximity ? std::abs(ratio - 1.0L) : std::abs(ratio));
  if (!std::isfinite(out.ratio)) throw Error(ErrorKind::NonFinite, "derivative ratio overflowed");
  return out;
}

}  // namespace

PairDistortion extended_distortion_ratio(const ParamFamily& family, cplx a, cplx b, cplx z, cplx w, int n, double S1,
                                         double delta) {
  return pair_distortion(family, a, b, z, w, n, S1, delta, true);
}

PairDistortion global_distortion_ratio(const ParamFamily& family, cplx a, cplx b, cplx z, cplx w, int n,
                                       double delta) {
  return pair_distortion(family, a, b, z, w, n, 0.0, delta, false);
}

// ---------------------------------------------------------------------------

const char* to_string(GrowthStop s) noexcept {
  switch (s) {
    case GrowthStop::reached_scale: return "reached_scale";
    case GrowthStop::tube_exit: return "tube_exit";
    case GrowthStop::horizon: return "horizon";
    case GrowthStop::orbit_error: return "orbit_error";
  }
  return "unknown";
}

DiskGrowthRecord disk_growth_trace(const ParamFamily& family, const DyadicDisk& disk, const DiagnosticsConfig& config,
                                   int boundary_samples) {
  config.validate();
  if (boundary_samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one boundary sample");
  if (disk.radius < 0.0) throw Error(ErrorKind::InvalidArgument, "disk radius must be nonnegative");
  DiskGrowthRecord rec;
  rec.disk = disk;

  std::vector<cplx> params{disk.center};
  for (int j = 0; j < boundary_samples; ++j)
    params.push_back(disk.center + std::polar(disk.radius, 2.0 * std::numbers::pi * j / boundary_samples));
  const std::size_t m = params.size();

  // Per-sample steppers along xi_n(a).
  std::vector<FamilySlice> slices;
  slices.reserve(m);
  std::vector<TransferStepper> steppers;
  steppers.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    try {
      slices.push_back(family.slice({params[i].real(), params[i].imag()}));
      const TrackedCritical tc = track_critical_point(family, params[i]);
      const FamilySlice* s = &slices.back();
      Partials start;
      if (tc.point.is_infinity()) {
        start = s->partials_at_infinity();
      } else {
        const cplx c = tc.point.to_complex();
        start = s->partials({c.real(), c.imag()});
      }
      steppers.emplace_back([s](const xcplx& z) { return s->partials(z); }, start.value, start.da);
    } catch (const Error& e) {
      throw e.at_index(static_cast<long>(i));
    }
  }

  const auto tube = postcritical_sample(family.map_at({0.0, 0.0}), 0, 64).points;
  const auto anchors = anchor_orbit(family, config.growth_horizon);
  std::vector<double> log_lambda0;
  for (const auto& p : anchors) {
    const cplx d = p.is_infinity() ? cplx{0.0, 0.0} : planar_derivative(family.map_at({0.0, 0.0}), p.to_complex());
    log_lambda0.push_back(std::log(std::abs(d)));
  }

  double xdiff = 0.0;
  try {
    std::vector<cplx> xs;
    for (const auto& a : params) xs.push_back(transversality_value(family, a).x);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) xdiff = std::max(xdiff, std::abs(xs[i] - xs[j]));
  } catch (const Error&) {
    xdiff = 0.0;
  }

  auto tube_distance = [&](const SpherePoint& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : tube) best = std::min(best, chordal_distance(p, q));
    return best;
  };

  rec.comparability_min = std::numeric_limits<double>::infinity();
  rec.comparability_max = 0.0;
  double log_prod = 0.0;
  std::vector<bool> center_in_tube;
  for (int n = 0; n <= config.growth_horizon; ++n) {
    if (n > 0) {
      bool failed = false;
      for (std::size_t i = 0; i < m; ++i) {
        try {
          steppers[i].step();
        } catch (const Error&) {
          rec.failed_sample = static_cast<int>(i);
          failed = true;
          break;
        }
      }
      if (failed) {
        rec.stop = GrowthStop::orbit_error;
        break;
      }
      log_prod += log_lambda0[static_cast<std::size_t>(n - 1)];
    }
    double diam = 0.0;
    long double pdiam = 0.0L;
    double ad = 0.0;
    bool inside = true;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& si = steppers[i].state();
      if (tube_distance(si.xi) >= config.delta_prime) inside = false;
      for (std::size_t j = i + 1; j < m; ++j) {
        const auto& sj = steppers[j].state();
        diam = std::max(diam, chordal_distance(si.xi, sj.xi));
        pdiam = std::max(pdiam, std::abs(si.xi_value - sj.xi_value));
        ad = std::max({ad, static_cast<double>(std::abs(si.da / sj.da - 1.0L)),
                       static_cast<double>(std::abs(sj.da / si.da - 1.0L))});
      }
    }
    center_in_tube.push_back(tube_distance(steppers[0].state().xi) < config.delta_prime);
    rec.diam_sequence.push_back(diam);
    rec.planar_diam_sequence.push_back(static_cast<double>(pdiam));
    rec.inside_tube.push_back(inside);
    rec.argument_distortion = std::max(rec.argument_distortion, ad);

    double q = std::numeric_limits<double>::quiet_NaN();
    if (xdiff > 0.0) q = static_cast<double>(pdiam) / (std::exp(log_prod) * xdiff);
    rec.comparability.push_back(q);
    if (inside && std::isfinite(q)) {
      rec.comparability_min = std::min(rec.comparability_min, q);
      rec.comparability_max = std::max(rec.comparability_max, q);
    }

    if (diam >= config.S) {
      rec.n_escape = n;
      rec.stop = GrowthStop::reached_scale;
      break;
    }
    if (!inside) {
      rec.stop = GrowthStop::tube_exit;
      break;
    }
  }
  if (!(rec.comparability_min <= rec.comparability_max)) rec.comparability_min = rec.comparability_max = 0.0;

  // Order of x(a) at the disk and the resulting k0 condition.
  const double rho = std::max(std::abs(disk.center), disk.radius);
  if (rho > 0.0) {
    try {
      rec.order_k = transversality_probe(family, {0.5 * rho, rho}, 8).k;
    } catch (const Error&) {
      rec.order_k = 0;
    }
  }
  if (rec.order_k >= 2 && std::abs(disk.center) > 0.0) {
    const double k0 = disk.radius / std::abs(disk.center);
    rec.k0_condition_ok = std::pow(k0, rec.order_k - 1) <= config.tolerance("k0_epsilon");
  }

  // Growth step: last n with the center in the tube and
  // delta'/(2 M0) <= |xi_n - mu_n| <= delta'/2.
  rec.M0 = sup_spherical_derivative(family.map_at(disk.center), 2000).value;
  const int last = static_cast<int>(rec.diam_sequence.size()) - 1;
  if (last >= 0) {
    try {
      const auto mu = shadow_orbit(family, disk.center, last).mu;
      const auto tr = transfer_recursion(family, disk.center, last);
      int exact = -1, below = -1;
      for (int n = 0; n <= last && center_in_tube[static_cast<std::size_t>(n)]; ++n) {
        const double d = chordal_distance(tr.states[static_cast<std::size_t>(n)].xi, mu[static_cast<std::size_t>(n)]);
        if (d <= config.delta_prime / 2.0) {
          below = n;
          if (d >= config.delta_prime / (2.0 * rec.M0)) exact = n;
        }
      }
      rec.growth_step_exact = exact >= 0;
      rec.growth_step = exact >= 0 ? exact : below;
    } catch (const Error&) {
      rec.growth_step = -1;
    }
  }
  return rec;
}

}  // namespace mislab
