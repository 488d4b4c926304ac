#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numerics; the only shared types are the plain value types.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "mislab/family.hpp"
#include "mislab/sphere.hpp"

namespace oracle {

using cplx = std::complex<double>;
using lcplx = std::complex<long double>;

// xorshift64*; deliberately a different generator from the library's.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed ? seed : 0x2545f4914f6cdd1dULL) {}

  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 2685821657736338717ULL;
  }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  cplx in_disk(double r) {
    const double rho = r * std::sqrt(unit()), th = 2.0 * M_PI * unit();
    return std::polar(rho, th);
  }
  cplx on_circle(double r) { return std::polar(r, 2.0 * M_PI * unit()); }
  std::vector<cplx> coeffs(int n, double scale = 1.0) {
    std::vector<cplx> c(static_cast<std::size_t>(n));
    for (auto& x : c) x = cplx(range(-scale, scale), range(-scale, scale));
    return c;
  }

 private:
  std::uint64_t s_;
};

// Point of the unit sphere under inverse stereographic projection; nullopt is
// infinity.
inline std::array<double, 3> embed(std::optional<cplx> z) {
  if (!z) return {0.0, 0.0, 1.0};
  const double n2 = std::norm(*z);
  return {2.0 * z->real() / (1.0 + n2), 2.0 * z->imag() / (1.0 + n2), (n2 - 1.0) / (n2 + 1.0)};
}

inline double euclid3(std::optional<cplx> p, std::optional<cplx> q) {
  const auto a = embed(p), b = embed(q);
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline std::optional<cplx> finite(const mislab::SpherePoint& p) {
  if (p.is_infinity()) return std::nullopt;
  return p.to_complex();
}

inline double chordal(const mislab::SpherePoint& p, const mislab::SpherePoint& q) {
  return euclid3(finite(p), finite(q));
}

// sum c_i z^i with explicit powers.
inline lcplx eval_powers(const std::vector<cplx>& c, lcplx z) {
  lcplx s{0.0L, 0.0L};
  for (std::size_t i = 0; i < c.size(); ++i)
    s += lcplx(c[i].real(), c[i].imag()) * std::pow(z, static_cast<int>(i));
  return s;
}

inline cplx eval_rational(const std::vector<cplx>& p, const std::vector<cplx>& q, cplx z) {
  const lcplx v = eval_powers(p, lcplx(z.real(), z.imag())) / eval_powers(q, lcplx(z.real(), z.imag()));
  return {static_cast<double>(v.real()), static_cast<double>(v.imag())};
}

// (P'Q - PQ')_k = sum over i + j = k + 1 of (i - j) p_i q_j.
inline std::vector<cplx> wronskian(const std::vector<cplx>& p, const std::vector<cplx>& q) {
  const std::size_t n = p.size() + q.size();
  std::vector<cplx> w(n, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (i + j >= 1) w[i + j - 1] += static_cast<double>(static_cast<long>(i) - static_cast<long>(j)) * p[i] * q[j];
  while (w.size() > 1 && w.back() == cplx{0.0, 0.0}) w.pop_back();
  return w;
}

// Fixed point of z^2 + a that continues 2 from a = -2.
inline cplx quad_beta(cplx a) { return (1.0 + std::sqrt(1.0 - 4.0 * a)) / 2.0; }

// Point of the critical-value orbit of z^2 + a: xi_0 = a, xi_{n+1} = xi_n^2 + a.
inline lcplx quad_xi(lcplx a, int n) {
  lcplx z = a;
  for (int j = 0; j < n; ++j) z = z * z + a;
  return z;
}

// d/da xi_n by a five-point stencil in extended precision.
inline lcplx quad_xi_derivative(lcplx a, int n, long double h) {
  const lcplx H(h, 0.0L);
  return (-quad_xi(a + 2.0L * H, n) + 8.0L * quad_xi(a + H, n) - 8.0L * quad_xi(a - H, n) +
          quad_xi(a - 2.0L * H, n)) /
         (12.0L * H);
}

// Same with the step scaled to the orbit's log-derivative, so that escaping
// orbits are resolved.
inline lcplx quad_xi_derivative(lcplx a, int n) {
  const long double h0 = 1e-14L;
  const lcplx v = quad_xi(a, n);
  const lcplx rough = (quad_xi(a + h0, n) - quad_xi(a - h0, n)) / (2.0L * h0);
  const long double scale = std::abs(v) > 0.0L ? std::abs(rough / v) : std::abs(rough);
  return quad_xi_derivative(a, n, 1e-4L / (1.0L + scale));
}

// x(a) = v(a) - mu_0(a) at a = -2 + t for z^2 + a: mu_1 = beta(a) and
// mu_0 is the preimage of beta(a) that continues -2.
inline cplx quad_transversality(cplx t) {
  const cplx a = -2.0 + t;
  return a + std::sqrt(quad_beta(a) - a);
}

// The quadratic family z^2 + a.
inline mislab::ParamFamily quad_family(double radius = 1e-3) {
  return mislab::ParamFamily(2, {{{0.0, 0.0}, {1.0, 0.0}}, {{0.0, 0.0}}, {{1.0, 0.0}}}, {{{1.0, 0.0}}}, radius,
                             mislab::MarkedCritical{});
}

// z^2 + c with the parameter frozen.
inline mislab::RationalMap quad_map(cplx c) { return mislab::RationalMap::polynomial({c, 0.0, 1.0}); }

// Maximum of g over [lo, hi] by a dense scan followed by golden-section search.
template <class G>
double maximize_1d(G g, double lo, double hi) {
  const int n = 20000;
  double best_x = lo, best = g(lo);
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    if (const double v = g(x); v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / n), b = std::min(hi, best_x + (hi - lo) / n);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (g(c) > g(d)) b = d;
    else a = c;
  }
  return std::max(best, g(0.5 * (a + b)));
}

}  // namespace oracle
