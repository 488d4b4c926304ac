#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mislab/polynomial.hpp"

namespace mislab {

// Coordinate charts of the Riemann sphere: `standard` holds z, `inverted`
// holds w = 1/z. Points live in the standard chart while |z| <= 2 and in the
// inverted chart while |w| <= 1; the band 1 <= |z| <= 2 admits both.
enum class Chart : std::uint8_t { standard, inverted };

inline constexpr double kStandardBound = 2.0;
inline constexpr double kInvertedBound = 1.0;

class SpherePoint {
 public:
  SpherePoint() = default;

  static SpherePoint from_complex(cplx z);
  static SpherePoint infinity() { return SpherePoint(Chart::inverted, cplx{0.0, 0.0}); }
  // Throws InvalidArgument when `value` is outside the chart's bound.
  static SpherePoint from_chart(Chart chart, cplx value);
  // The point [num : den]. With preferred == inverted the point stays in the
  // inverted chart as long as |num/den| >= 1 (hysteresis band).
  static SpherePoint from_homogeneous(cplx num, cplx den, Chart preferred = Chart::standard);

  Chart chart() const noexcept { return chart_; }
  cplx value() const noexcept { return value_; }
  bool is_infinity() const noexcept { return chart_ == Chart::inverted && value_ == cplx{0.0, 0.0}; }

  // Affine coordinate z; infinite for the point at infinity.
  cplx to_complex() const;
  // Coordinate in the requested chart (unbounded when far from its center).
  cplx coordinate(Chart chart) const;
  // (z, 1) or (1, w).
  std::array<cplx, 2> homogeneous() const noexcept;

 private:
  SpherePoint(Chart chart, cplx value) : chart_(chart), value_(value) {}

  Chart chart_ = Chart::standard;
  cplx value_{0.0, 0.0};
};

// 2|p - q| / sqrt((1+|p|^2)(1+|q|^2)), evaluated on homogeneous coordinates.
double chordal_distance(const SpherePoint& p, const SpherePoint& q);

// Inverse stereographic projection of a unit-sphere point (x, y, s), north
// pole s = 1 corresponding to infinity.
SpherePoint from_unit_sphere(double x, double y, double s);

// n quasi-uniform points (Fibonacci lattice) on the sphere.
std::vector<SpherePoint> fibonacci_sphere(int n);

// R = P/Q of exact degree d >= 2, stored with b_d = 1, or a_d = 1 when b_d = 0.
class RationalMap {
 public:
  RationalMap(std::vector<cplx> numer, std::vector<cplx> denom);
  static RationalMap polynomial(std::vector<cplx> coeffs);

  int degree() const noexcept { return degree_; }
  std::span<const cplx> numer() const noexcept { return numer_; }
  std::span<const cplx> denom() const noexcept { return denom_; }
  // Numerator/denominator of the map written in the given input chart
  // (reversed coefficients for the inverted chart).
  std::span<const cplx> numer_in(Chart chart) const noexcept;
  std::span<const cplx> denom_in(Chart chart) const noexcept;

  double coefficient_scale() const noexcept { return scale_; }
  double resultant_magnitude() const noexcept { return resultant_; }

 private:
  int degree_ = 0;
  double scale_ = 0.0;
  double resultant_ = 0.0;
  std::vector<cplx> numer_, denom_, numer_rev_, denom_rev_;
};

// |Res(P, Q)| of the two degree-d forms (Sylvester determinant).
double resultant_magnitude(std::span<const cplx> numer, std::span<const cplx> denom, int degree);

// The image of a point together with the derivative of the image's chart
// coordinate with respect to the input's chart coordinate.
struct LocalJet {
  SpherePoint image;
  cplx derivative;
};

LocalJet local_jet(const RationalMap& map, const SpherePoint& p, std::optional<Chart> out_chart = {});
SpherePoint evaluate(const RationalMap& map, const SpherePoint& p);
double spherical_derivative(const RationalMap& map, const SpherePoint& p);
// Planar R'(z) at a finite z.
cplx planar_derivative(const RationalMap& map, cplx z);

struct OrbitTrace {
  std::vector<SpherePoint> points;
  std::vector<double> sph_derivs;
  // cumulative_log_deriv[n] = sum_{j<n} log sph_derivs[j]; size points.size().
  std::vector<double> cumulative_log_deriv;
};

OrbitTrace iterate_orbit(const RationalMap& map, const SpherePoint& z0, int n);

struct SupEstimate {
  double value = 0.0;
  SpherePoint argmax;
  int samples = 0;
  // Always true: sampling plus local refinement yields a lower bound.
  bool is_estimate = true;
};

SupEstimate sup_spherical_derivative(const RationalMap& map, int samples);

}  // namespace mislab
