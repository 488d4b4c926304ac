#include "mislab/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "mislab/error.hpp"

namespace mislab {

namespace {

constexpr double kChartSlack = 1e-12;
constexpr double kDegreeTol = 1e-14;
constexpr double kResultantTol = 1e-12;
constexpr double kVanishTol = 1e-13;

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

}  // namespace

// ---------------------------------------------------------------------------
// SpherePoint

SpherePoint SpherePoint::from_complex(cplx z) {
  if (!finite(z)) {
    if (std::isinf(z.real()) || std::isinf(z.imag())) return infinity();
    throw Error(ErrorKind::NonFinite, "coordinate is NaN");
  }
  if (std::abs(z) <= kStandardBound) return SpherePoint(Chart::standard, z);
  return SpherePoint(Chart::inverted, 1.0 / z);
}

SpherePoint SpherePoint::from_chart(Chart chart, cplx value) {
  if (!finite(value)) throw Error(ErrorKind::NonFinite, "chart value is not finite");
  const double bound = chart == Chart::standard ? kStandardBound : kInvertedBound;
  if (std::abs(value) > bound * (1.0 + kChartSlack))
    throw Error(ErrorKind::InvalidArgument, "chart value outside chart bound");
  return SpherePoint(chart, value);
}

SpherePoint SpherePoint::from_homogeneous(cplx num, cplx den, Chart preferred) {
  if (!finite(num) || !finite(den)) throw Error(ErrorKind::NonFinite, "homogeneous coordinates are not finite");
  const double an = std::abs(num);
  const double ad = std::abs(den);
  if (an == 0.0 && ad == 0.0) throw Error(ErrorKind::DegenerateMap, "both homogeneous coordinates vanish");
  if (preferred == Chart::inverted && an >= ad) return SpherePoint(Chart::inverted, den / num);
  if (an <= kStandardBound * ad) return SpherePoint(Chart::standard, num / den);
  return SpherePoint(Chart::inverted, den / num);
}

cplx SpherePoint::to_complex() const {
  if (chart_ == Chart::standard) return value_;
  if (value_ == cplx{0.0, 0.0}) return {std::numeric_limits<double>::infinity(), 0.0};
  return 1.0 / value_;
}

cplx SpherePoint::coordinate(Chart chart) const {
  if (chart == chart_) return value_;
  if (value_ == cplx{0.0, 0.0}) return {std::numeric_limits<double>::infinity(), 0.0};
  return 1.0 / value_;
}

std::array<cplx, 2> SpherePoint::homogeneous() const noexcept {
  if (chart_ == Chart::standard) return {value_, cplx{1.0, 0.0}};
  return {cplx{1.0, 0.0}, value_};
}

double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
  const auto [p0, p1] = p.homogeneous();
  const auto [q0, q1] = q.homogeneous();
  const double np = std::sqrt(std::norm(p0) + std::norm(p1));
  const double nq = std::sqrt(std::norm(q0) + std::norm(q1));
  const double d = 2.0 * std::abs(p0 * q1 - p1 * q0) / (np * nq);
  return std::min(d, 2.0);
}

SpherePoint from_unit_sphere(double x, double y, double s) {
  if (s <= 0.0) return SpherePoint::from_chart(Chart::standard, cplx{x, y} / (1.0 - s));
  return SpherePoint::from_chart(Chart::inverted, cplx{x, -y} / (1.0 + s));
}

std::vector<SpherePoint> fibonacci_sphere(int n) {
  std::vector<SpherePoint> out;
  if (n <= 0) return out;
  out.reserve(static_cast<std::size_t>(n));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double s = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - s * s));
    const double phi = golden * i;
    out.push_back(from_unit_sphere(rho * std::cos(phi), rho * std::sin(phi), s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// RationalMap

double resultant_magnitude(std::span<const cplx> numer, std::span<const cplx> denom, int degree) {
  const int d = degree;
  const int n = 2 * d;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  auto coeff = [&](std::span<const cplx> c, int power) {
    return power < static_cast<int>(c.size()) ? c[static_cast<std::size_t>(power)] : cplx{0.0, 0.0};
  };
  for (int row = 0; row < d; ++row) {
    for (int j = 0; j <= d; ++j) {
      m(row, row + j) = coeff(numer, d - j);
      m(d + row, row + j) = coeff(denom, d - j);
    }
  }
  return std::abs(m.partialPivLu().determinant());
}

RationalMap::RationalMap(std::vector<cplx> numer, std::vector<cplx> denom) {
  for (const auto& v : numer)
    if (!finite(v)) throw Error(ErrorKind::NonFinite, "numerator coefficient is not finite");
  for (const auto& v : denom)
    if (!finite(v)) throw Error(ErrorKind::NonFinite, "denominator coefficient is not finite");
  const double raw_scale = std::max(max_abs(numer), max_abs(denom));
  if (raw_scale == 0.0) throw Error(ErrorKind::InvalidArgument, "map has zero numerator and denominator");

  auto top = [&](const std::vector<cplx>& c) {
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i)
      if (std::abs(c[static_cast<std::size_t>(i)]) > kDegreeTol * raw_scale) return i;
    return -1;
  };
  const int d = std::max(top(numer), top(denom));
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "map degree must be at least 2");
  numer.resize(static_cast<std::size_t>(d) + 1, cplx{0.0, 0.0});
  denom.resize(static_cast<std::size_t>(d) + 1, cplx{0.0, 0.0});

  const std::size_t du = static_cast<std::size_t>(d);
  const cplx lead = std::abs(denom[du]) > kDegreeTol * raw_scale ? denom[du] : numer[du];
  for (auto& v : numer) v /= lead;
  for (auto& v : denom) v /= lead;

  degree_ = d;
  numer_ = std::move(numer);
  denom_ = std::move(denom);
  numer_rev_ = reversed(numer_, du);
  denom_rev_ = reversed(denom_, du);
  scale_ = std::max(max_abs(numer_), max_abs(denom_));
  resultant_ = mislab::resultant_magnitude(numer_, denom_, d);
  if (!(resultant_ >= kResultantTol * std::pow(scale_, 2.0 * d)))
    throw Error(ErrorKind::DegenerateMap, "numerator and denominator share a root (resultant vanishes)");
}

RationalMap RationalMap::polynomial(std::vector<cplx> coeffs) {
  return RationalMap(std::move(coeffs), std::vector<cplx>{cplx{1.0, 0.0}});
}

std::span<const cplx> RationalMap::numer_in(Chart chart) const noexcept {
  return chart == Chart::standard ? std::span<const cplx>(numer_) : std::span<const cplx>(numer_rev_);
}

std::span<const cplx> RationalMap::denom_in(Chart chart) const noexcept {
  return chart == Chart::standard ? std::span<const cplx>(denom_) : std::span<const cplx>(denom_rev_);
}

// ---------------------------------------------------------------------------
// Evaluation

LocalJet local_jet(const RationalMap& map, const SpherePoint& p, std::optional<Chart> out_chart) {
  const Chart in = p.chart();
  const cplx u = p.value();
  const auto num = horner_jet(map.numer_in(in), u);
  const auto den = horner_jet(map.denom_in(in), u);
  const double size = map.coefficient_scale() * std::pow(1.0 + std::abs(u), map.degree());
  if (std::abs(num.value) + std::abs(den.value) <= kVanishTol * size)
    throw Error(ErrorKind::DegenerateMap, "numerator and denominator vanish together");

  LocalJet jet{SpherePoint::from_homogeneous(num.value, den.value, in), cplx{0.0, 0.0}};
  const Chart out = out_chart.value_or(jet.image.chart());
  if (out == Chart::standard) {
    jet.derivative = (num.deriv * den.value - num.value * den.deriv) / (den.value * den.value);
  } else {
    jet.derivative = (den.deriv * num.value - den.value * num.deriv) / (num.value * num.value);
  }
  if (!finite(jet.derivative)) throw Error(ErrorKind::NonFinite, "local derivative overflowed");
  return jet;
}

SpherePoint evaluate(const RationalMap& map, const SpherePoint& p) {
  const Chart in = p.chart();
  const cplx u = p.value();
  const cplx n = horner(map.numer_in(in), u);
  const cplx d = horner(map.denom_in(in), u);
  const double size = map.coefficient_scale() * std::pow(1.0 + std::abs(u), map.degree());
  if (std::abs(n) + std::abs(d) <= kVanishTol * size)
    throw Error(ErrorKind::DegenerateMap, "numerator and denominator vanish together");
  return SpherePoint::from_homogeneous(n, d, in);
}

double spherical_derivative(const RationalMap& map, const SpherePoint& p) {
  const auto jet = local_jet(map, p);
  const double u2 = std::norm(p.value());
  const double y2 = std::norm(jet.image.value());
  return std::abs(jet.derivative) * (1.0 + u2) / (1.0 + y2);
}

cplx planar_derivative(const RationalMap& map, cplx z) {
  const auto num = horner_jet(map.numer(), z);
  const auto den = horner_jet(map.denom(), z);
  return (num.deriv * den.value - num.value * den.deriv) / (den.value * den.value);
}

OrbitTrace iterate_orbit(const RationalMap& map, const SpherePoint& z0, int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "orbit length must be nonnegative");
  OrbitTrace t;
  t.points.reserve(static_cast<std::size_t>(n) + 1);
  t.sph_derivs.reserve(static_cast<std::size_t>(n));
  t.cumulative_log_deriv.reserve(static_cast<std::size_t>(n) + 1);
  t.points.push_back(z0);
  t.cumulative_log_deriv.push_back(0.0);
  for (int k = 0; k < n; ++k) {
    const SpherePoint& cur = t.points.back();
    try {
      const auto jet = local_jet(map, cur);
      const double s = std::abs(jet.derivative) * (1.0 + std::norm(cur.value())) /
                       (1.0 + std::norm(jet.image.value()));
      t.sph_derivs.push_back(s);
      t.cumulative_log_deriv.push_back(t.cumulative_log_deriv.back() + std::log(s));
      t.points.push_back(jet.image);
    } catch (const Error& e) {
      throw e.at_index(k);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Supremum of the spherical derivative

namespace {

double sph_at(const RationalMap& map, Chart chart, cplx u) {
  const double bound = chart == Chart::standard ? kStandardBound : kInvertedBound;
  if (std::abs(u) > bound) return -1.0;
  try {
    return spherical_derivative(map, SpherePoint::from_chart(chart, u));
  } catch (const Error&) {
    return -1.0;
  }
}

}  // namespace

SupEstimate sup_spherical_derivative(const RationalMap& map, int samples) {
  SupEstimate best;
  best.samples = samples;
  const auto pts = fibonacci_sphere(samples);
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = -1.0;
    try {
      v = spherical_derivative(map, pts[i]);
    } catch (const Error&) {
    }
    ranked.emplace_back(v, i);
  }
  if (ranked.empty()) return best;
  const std::size_t keep = std::min<std::size_t>(8, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(keep), ranked.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  best.value = ranked.front().first;
  best.argmax = pts[ranked.front().second];

  // Compass search in the sample's own chart.
  const double h0 = 2.0 * std::sqrt(4.0 * std::numbers::pi / std::max(samples, 1));
  for (std::size_t r = 0; r < keep; ++r) {
    const SpherePoint start = pts[ranked[r].second];
    const Chart chart = start.chart();
    cplx u = start.value();
    double fu = ranked[r].first;
    for (double h = h0; h > 1e-12; h *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int dir = 0; dir < 8; ++dir) {
          const cplx cand = u + std::polar(h, dir * std::numbers::pi / 4.0);
          const double fc = sph_at(map, chart, cand);
          if (fc > fu) {
            u = cand;
            fu = fc;
            moved = true;
          }
        }
      }
    }
    if (fu > best.value) {
      best.value = fu;
      best.argmax = SpherePoint::from_chart(chart, u);
    }
  }
  return best;
}

}  // namespace mislab
