#include "mislab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mislab/critical.hpp"
#include "mislab/error.hpp"

namespace mislab {

namespace {

constexpr double kCollisionRadius = 1e-12;

SpherePoint point_in_chart(Chart c, cplx u) {
  if (c == Chart::standard) return SpherePoint::from_complex(u);
  if (std::abs(u) <= kInvertedBound) return SpherePoint::from_chart(Chart::inverted, u);
  return SpherePoint::from_complex(1.0 / u);
}

const CriticalPoint& nearest_entry(const CriticalSet& set, const SpherePoint& p, double* dist) {
  const CriticalPoint* best = nullptr;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& e : set.entries) {
    const double d = chordal_distance(e.point, p);
    if (d < bd) {
      bd = d;
      best = &e;
    }
  }
  if (!best) throw Error(ErrorKind::InvalidArgument, "map has no critical points");
  if (dist) *dist = bd;
  return *best;
}

struct BaseCritical {
  CriticalPoint entry;
  double match_radius;
};

BaseCritical resolve_base(const ParamFamily& family) {
  const auto crit0 = critical_points(family.map_at({0.0, 0.0}));
  double dist = 0.0;
  const auto& m0 = nearest_entry(crit0, family.marked_critical().as_point(), &dist);
  if (dist > 1e-6) throw Error(ErrorKind::InvalidArgument, "marked point is not a critical point of R_0");
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < crit0.entries.size(); ++i)
    for (std::size_t j = i + 1; j < crit0.entries.size(); ++j)
      sep = std::min(sep, chordal_distance(crit0.entries[i].point, crit0.entries[j].point));
  return {m0, std::min(0.5 * sep, 1.0)};
}

}  // namespace

SpherePoint base_critical_point(const ParamFamily& family) { return resolve_base(family).entry.point; }

TrackedCritical track_critical_point(const ParamFamily& family, cplx a) {
  const BaseCritical base = resolve_base(family);
  TrackedCritical out;
  out.multiplicity_at_base = base.entry.multiplicity;
  if (a == cplx{0.0, 0.0}) {
    out.point = base.entry.point;
    return out;
  }

  const RationalMap map = family.map_at(a);
  const auto crit = critical_points(map);
  std::vector<std::pair<double, CriticalPoint>> cand;
  for (const auto& e : crit.entries) {
    const double d = chordal_distance(e.point, base.entry.point);
    if (d < base.match_radius) cand.emplace_back(d, e);
  }
  if (cand.empty()) throw Error(ErrorKind::AmbiguousMatch, "no critical point of R_a inside the matching radius");
  out.branch_count = static_cast<int>(cand.size());
  if (cand.size() == 1) {
    out.point = cand.front().second.point;
    return out;
  }

  const bool star = base.entry.multiplicity > 1 || map.degree() != family.map_at({0.0, 0.0}).degree();
  if (!star) {
    auto sorted = cand;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    if (sorted[1].first < 2.0 * sorted[0].first)
      throw Error(ErrorKind::AmbiguousMatch, "two critical points compete for the marked point");
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (cand[i].first == sorted[0].first) out.branch = static_cast<int>(i);
    out.point = sorted[0].second.point;
    return out;
  }

  // Star: pick the branch whose critical value is farthest from mu_0(a).
  out.split = true;
  SpherePoint mu0;
  try {
    mu0 = shadow_orbit(family, a, 0).mu.front();
  } catch (const Error&) {
    mu0 = anchor_orbit(family, 0).front();
  }
  double best = -1.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const double sep = chordal_distance(evaluate(map, cand[i].second.point), mu0);
    if (sep > best) {
      best = sep;
      out.branch = static_cast<int>(i);
      out.point = cand[i].second.point;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SpherePoint to_sphere(xcplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    if (std::isnan(z.real()) || std::isnan(z.imag())) throw Error(ErrorKind::NonFinite, "orbit point is NaN");
    return SpherePoint::infinity();
  }
  if (std::abs(z) <= 1e300L) return SpherePoint::from_complex(cplx(static_cast<double>(z.real()), static_cast<double>(z.imag())));
  const xcplx w = 1.0L / z;
  return SpherePoint::from_chart(Chart::inverted, cplx(static_cast<double>(w.real()), static_cast<double>(w.imag())));
}

TransferStepper::TransferStepper(PartialsFn partials, xcplx xi0, xcplx da0) : partials_(std::move(partials)) {
  state_.n = 0;
  state_.xi_value = xi0;
  state_.xi = to_sphere(xi0);
  state_.dz = {1.0L, 0.0L};
  state_.da = da0;
  state_.q = da0;
}

const TransferState& TransferStepper::step() {
  const Partials p = partials_(state_.xi_value);
  sup_dz_ = std::max(sup_dz_, std::abs(p.dz));
  TransferState next;
  next.n = state_.n + 1;
  next.xi_value = p.value;
  next.dz = p.dz * state_.dz;
  next.da = p.dz * state_.da + p.da;
  next.q = next.da / next.dz;
  auto finite = [](xcplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); };
  if (!finite(next.xi_value) || !finite(next.dz) || !finite(next.da))
    throw Error(ErrorKind::NonFinite, "critical-value orbit left the representable range", next.n);
  next.xi = to_sphere(next.xi_value);
  state_ = next;
  return state_;
}

TransferTrace transfer_from(const PartialsFn& partials, xcplx xi0, xcplx da0, int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "transfer horizon must be nonnegative");
  TransferTrace trace;
  TransferStepper stepper(partials, xi0, da0);
  trace.states.reserve(static_cast<std::size_t>(n) + 1);
  trace.states.push_back(stepper.state());
  for (int k = 0; k < n; ++k) trace.states.push_back(stepper.step());
  trace.sup_abs_dz = stepper.sup_abs_dz();
  return trace;
}

TransferTrace transfer_recursion(const ParamFamily& family, cplx a, int n) {
  const TrackedCritical tc = track_critical_point(family, a);
  const FamilySlice slice = family.slice(xcplx(a.real(), a.imag()));
  Partials start;
  if (tc.point.is_infinity()) {
    start = slice.partials_at_infinity();
  } else {
    const cplx c = tc.point.to_complex();
    start = slice.partials(xcplx(c.real(), c.imag()));
  }
  TransferTrace trace = transfer_from([&slice](const xcplx& z) { return slice.partials(z); }, start.value, start.da, n);
  trace.critical = tc;

  const auto crit = critical_points(family.map_at(a));
  for (const auto& s : trace.states) {
    for (const auto& e : crit.entries) {
      if (chordal_distance(s.xi, e.point) < kCollisionRadius) {
        trace.collision_index = s.n;
        return trace;
      }
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------

std::vector<SpherePoint> anchor_orbit(const ParamFamily& family, int n) {
  const RationalMap map0 = family.map_at({0.0, 0.0});
  const SpherePoint c0 = base_critical_point(family);
  std::vector<SpherePoint> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  SpherePoint z = evaluate(map0, c0);
  out.push_back(z);
  for (int k = 0; k < n; ++k) {
    z = evaluate(map0, z);
    out.push_back(z);
  }
  return out;
}

SpherePoint nearest_preimage(const RationalMap& map, const SpherePoint& target, const SpherePoint& anchor) {
  const Chart c = anchor.chart();
  const auto [y0, y1] = target.homogeneous();
  const auto num = map.numer_in(c);
  const auto den = map.denom_in(c);
  std::vector<cplx> f(num.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = y1 * num[i] - y0 * den[i];
  const int deg = effective_degree(f, 1e-14);
  if (deg <= 0) throw Error(ErrorKind::ShadowingFailure, "no preimage in the anchor's chart");
  f.resize(static_cast<std::size_t>(deg) + 1);
  const auto roots = aberth_roots(f).roots;

  const cplx* best = nullptr;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& r : roots) {
    const double d = chordal_distance(point_in_chart(c, r), anchor);
    if (d < bd) {
      bd = d;
      best = &r;
    }
  }
  cplx u = *best;
  for (int it = 0; it < 2; ++it) {
    const auto j = horner_jet(f, u);
    if (j.deriv == cplx{0.0, 0.0}) break;
    const cplx step = j.value / j.deriv;
    if (!std::isfinite(std::abs(step))) break;
    u -= step;
  }
  return point_in_chart(c, u);
}

namespace {

std::vector<SpherePoint> pullback(const RationalMap& map, const std::vector<SpherePoint>& anchors) {
  std::vector<SpherePoint> mu(anchors.size());
  mu.back() = anchors.back();
  for (std::size_t k = anchors.size() - 1; k-- > 0;) mu[k] = nearest_preimage(map, mu[k + 1], anchors[k]);
  return mu;
}

}  // namespace

ShadowOrbit shadow_orbit(const ParamFamily& family, cplx a, int n, const ShadowOptions& opts) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "shadow horizon must be nonnegative");
  ShadowOrbit out;
  if (a == cplx{0.0, 0.0}) {
    out.anchors = anchor_orbit(family, n);
    out.mu = out.anchors;
    out.residuals.assign(static_cast<std::size_t>(n), 0.0);
    return out;
  }
  const RationalMap map = family.map_at(a);
  int extra = std::max(opts.extra_horizon, 1);
  auto anchors = anchor_orbit(family, n + extra);
  auto mu = pullback(map, anchors);
  bool converged = false;
  for (int i = 0; i < opts.max_doublings && !converged; ++i) {
    extra *= 2;
    auto anchors2 = anchor_orbit(family, n + extra);
    auto mu2 = pullback(map, anchors2);
    double change = 0.0;
    for (int k = 0; k <= n; ++k) change = std::max(change, chordal_distance(mu[static_cast<std::size_t>(k)], mu2[static_cast<std::size_t>(k)]));
    mu = std::move(mu2);
    anchors = std::move(anchors2);
    converged = change < opts.convergence;
  }
  if (!converged) throw Error(ErrorKind::ShadowingFailure, "backward pullback did not stabilize");

  out.extra_horizon = extra;
  out.anchors.assign(anchors.begin(), anchors.begin() + n + 1);
  out.mu.assign(mu.begin(), mu.begin() + n + 1);
  for (int k = 0; k <= n; ++k)
    out.max_motion = std::max(out.max_motion, chordal_distance(out.mu[static_cast<std::size_t>(k)], out.anchors[static_cast<std::size_t>(k)]));
  if (out.max_motion > opts.max_motion)
    throw Error(ErrorKind::ShadowingFailure, "shadow orbit moved farther than the allowed motion");
  for (int k = 0; k < n; ++k) {
    const double r = chordal_distance(evaluate(map, out.mu[static_cast<std::size_t>(k)]), out.mu[static_cast<std::size_t>(k) + 1]);
    out.residuals.push_back(r);
    if (!(r <= opts.residual_tolerance))
      throw Error(ErrorKind::ShadowingFailure, "conjugacy residual above tolerance", k);
  }
  return out;
}

// ---------------------------------------------------------------------------

TransversalitySample transversality_value(const ParamFamily& family, cplx a, const ShadowOptions& opts) {
  TransversalitySample s;
  s.critical = track_critical_point(family, a);
  const SpherePoint anchor = anchor_orbit(family, 0).front();
  const SpherePoint xi0 = evaluate(family.map_at(a), s.critical.point);
  const SpherePoint mu0 = shadow_orbit(family, a, 0, opts).mu.front();
  s.x = xi0.coordinate(anchor.chart()) - mu0.coordinate(anchor.chart());
  return s;
}

TransversalityFit transversality_probe(const ParamFamily& family, const std::vector<double>& radii,
                                       int samples_per_circle, const ShadowOptions& opts) {
  if (radii.size() < 2) throw Error(ErrorKind::InvalidArgument, "transversality probe needs at least two radii");
  if (samples_per_circle < 1) throw Error(ErrorKind::InvalidArgument, "need at least one sample per circle");
  constexpr double kNoiseFloor = 1e-13;

  struct Sample {
    cplx a, x;
  };
  std::vector<std::vector<Sample>> circles;
  double biggest = 0.0;
  for (const double rho : radii) {
    if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "radii must be positive");
    std::vector<Sample> circle;
    for (int j = 0; j < samples_per_circle; ++j) {
      const cplx a = std::polar(rho, 2.0 * std::numbers::pi * j / samples_per_circle);
      const cplx x = transversality_value(family, a, opts).x;
      biggest = std::max(biggest, std::abs(x));
      circle.push_back({a, x});
    }
    circles.push_back(std::move(circle));
  }
  if (biggest < kNoiseFloor) throw Error(ErrorKind::IdenticallyZero, "x(a) is below the noise floor on every circle");

  // Least-squares slope of mean log|x| against log rho.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double s = 0.0;
    for (const auto& smp : circles[i]) s += std::log(std::max(std::abs(smp.x), 1e-300));
    lx.push_back(std::log(radii[i]));
    ly.push_back(s / static_cast<double>(circles[i].size()));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorKind::InvalidArgument, "radii must be distinct");
  TransversalityFit fit;
  fit.slope = sxy / sxx;
  fit.k = static_cast<int>(std::lround(fit.slope));
  if (fit.k < 1 || std::abs(fit.slope - fit.k) > 0.2)
    throw Error(ErrorKind::NonIntegerOrder, "leading order " + std::to_string(fit.slope) + " is not an integer");

  const std::size_t smallest =
      static_cast<std::size_t>(std::min_element(radii.begin(), radii.end()) - radii.begin());
  cplx k1{0.0, 0.0};
  for (const auto& smp : circles[smallest]) k1 += smp.x / std::pow(smp.a, fit.k);
  fit.K1 = k1 / static_cast<double>(circles[smallest].size());
  for (const auto& circle : circles)
    for (const auto& smp : circle)
      fit.fit_error = std::max(fit.fit_error, std::abs(smp.x / (fit.K1 * std::pow(smp.a, fit.k)) - 1.0));
  return fit;
}

// ---------------------------------------------------------------------------

QStability q_drift(const std::vector<TransferState>& states, const std::vector<SpherePoint>& mu, double delta_dprime,
                   int return_index) {
  QStability out;
  const int last = static_cast<int>(std::min(states.size(), mu.size())) - 1;
  for (int j = 0; j <= last; ++j) {
    if (chordal_distance(states[static_cast<std::size_t>(j)].xi, mu[static_cast<std::size_t>(j)]) >= delta_dprime) {
      out.N = j;
      break;
    }
  }
  if (out.N < 0) throw Error(ErrorKind::NeverSeparates, "critical value orbit never leaves its shadow");
  out.return_index = return_index;
  out.last_index = return_index >= 0 ? std::min(last, return_index) : last;
  const xcplx qn = states[static_cast<std::size_t>(out.N)].q;
  for (int m = out.N; m <= out.last_index; ++m) {
    const long double drift = std::abs(states[static_cast<std::size_t>(m)].q - qn) / std::abs(qn);
    out.max_rel_drift = std::max(out.max_rel_drift, static_cast<double>(drift));
  }
  return out;
}

QStability q_stability_check(const ParamFamily& family, cplx a, double delta_dprime, int n, double delta,
                             const ShadowOptions& opts) {
  // An escaping orbit ends the window at its last representable point.
  TransferTrace trace;
  try {
    trace = transfer_recursion(family, a, n);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFinite || e.index() < 1) throw;
    n = static_cast<int>(e.index()) - 1;
    trace = transfer_recursion(family, a, n);
  }
  const auto shadow = shadow_orbit(family, a, n, opts);
  const QStability first = q_drift(trace.states, shadow.mu, delta_dprime, -1);

  const auto centers = critical_points(family.map_at(a)).non_super_attracting();
  int ret = -1;
  for (int j = std::max(first.N, 1); j <= n && ret < 0; ++j)
    for (const auto& c : centers)
      if (chordal_distance(trace.states[static_cast<std::size_t>(j)].xi, c) < delta / 10.0) ret = j;
  return q_drift(trace.states, shadow.mu, delta_dprime, ret);
}

}  // namespace mislab
