#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mislab/sphere.hpp"

namespace mislab {

// Extended-precision complex used along critical-value orbits, whose planar
// coordinates overflow binary64 within a few dozen steps once they escape.
using xcplx = std::complex<long double>;

// Selects the critical point of the unperturbed map that is followed in a.
struct MarkedCritical {
  bool at_infinity = false;
  cplx point{0.0, 0.0};

  SpherePoint as_point() const { return at_infinity ? SpherePoint::infinity() : SpherePoint::from_complex(point); }
};

// Value and first partials of R(z, a) at a finite z.
struct Partials {
  xcplx value;
  xcplx dz;
  xcplx da;
};

class FamilySlice;

// R(z, a) = sum p_i(a) z^i / sum q_i(a) z^i with each p_i, q_i a polynomial
// in a (lowest power first).
class ParamFamily {
 public:
  using CoeffPolys = std::vector<std::vector<cplx>>;

  ParamFamily(int degree, CoeffPolys numer, CoeffPolys denom, double base_radius, MarkedCritical marked);

  // Reads the JSON family format (schema "mislab.family/1"); throws
  // FormatError on malformed input.
  static ParamFamily from_json(const std::string& text);
  static ParamFamily load(const std::string& path);
  std::string to_json() const;

  int degree() const noexcept { return degree_; }
  double base_radius() const noexcept { return base_radius_; }
  const MarkedCritical& marked_critical() const noexcept { return marked_; }
  const CoeffPolys& numer() const noexcept { return numer_; }
  const CoeffPolys& denom() const noexcept { return denom_; }

  // The map R_a. Throws DegenerateMap / InvalidArgument when invalid at a.
  RationalMap map_at(cplx a) const;
  FamilySlice slice(xcplx a) const;

  // The family t -> R_{a0 + t}, with a new base radius and marked point.
  ParamFamily shifted(cplx a0, double radius, MarkedCritical marked) const;
  ParamFamily shifted(cplx a0) const { return shifted(a0, base_radius_, marked_); }

  // Checks that R_0 and R_a on `samples` points of |a| = base_radius are valid
  // maps of the declared degree.
  void validate(int samples = 16) const;

 private:
  int degree_;
  CoeffPolys numer_, denom_;
  double base_radius_;
  MarkedCritical marked_;
};

// The family frozen at one parameter value, in extended precision.
class FamilySlice {
 public:
  FamilySlice(const ParamFamily& family, xcplx a);

  xcplx parameter() const noexcept { return a_; }
  Partials partials(xcplx z) const;
  // R(infinity, a) and its a-derivative; throws NonFinite when R(infinity) is
  // infinity.
  Partials partials_at_infinity() const;

 private:
  xcplx a_;
  std::vector<xcplx> p_, q_, pa_, qa_;  // coefficients in z and their a-derivatives
};

// Polynomial Taylor shift: coefficients of t -> p(a0 + t).
std::vector<cplx> taylor_shift(const std::vector<cplx>& p, cplx a0);

}  // namespace mislab
