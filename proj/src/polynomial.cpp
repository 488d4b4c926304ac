#include "mislab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mislab/error.hpp"

namespace mislab {

cplx horner(std::span<const cplx> c, cplx z) {
  cplx acc{0.0, 0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

PolyJet horner_jet(std::span<const cplx> c, cplx z) {
  cplx p{0.0, 0.0};
  cplx dp{0.0, 0.0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dp = dp * z + p;
    p = p * z + *it;
  }
  return {p, dp};
}

cplx derivative_at(std::span<const cplx> c, cplx z, int order) {
  std::vector<cplx> d(c.begin(), c.end());
  for (int j = 0; j < order && !d.empty(); ++j) d = derivative(d);
  return horner(d, z);
}

std::vector<cplx> derivative(std::span<const cplx> c) {
  if (c.size() <= 1) return {};
  std::vector<cplx> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
  return d;
}

std::vector<cplx> multiply(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<cplx> out(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<cplx> subtract(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> out(std::max(a.size(), b.size()), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

std::vector<cplx> reversed(std::span<const cplx> c, std::size_t deg) {
  std::vector<cplx> out(deg + 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < c.size() && i <= deg; ++i) out[deg - i] = c[i];
  return out;
}

double max_abs(std::span<const cplx> c) {
  double m = 0.0;
  for (const auto& v : c) m = std::max(m, std::abs(v));
  return m;
}

int effective_degree(std::span<const cplx> c, double rel_tol) {
  const double scale = max_abs(c);
  if (scale == 0.0) return -1;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i)
    if (std::abs(c[static_cast<std::size_t>(i)]) > rel_tol * scale) return i;
  return -1;
}

double relative_residual(std::span<const cplx> c, cplx z) {
  const double scale = max_abs(c);
  if (scale == 0.0) return 0.0;
  const int deg = static_cast<int>(c.size()) - 1;
  const double r = std::abs(z);
  if (r <= 1.0) return std::abs(horner(c, z)) / scale;
  // Evaluate z^-deg p(z) = rev(1/z) to stay bounded.
  const auto rev = reversed(c, static_cast<std::size_t>(deg));
  return std::abs(horner(rev, 1.0 / z)) / scale;
}

namespace {

// Newton correction p(z)/p'(z), computed through the reversed polynomial when
// |z| > 1 so that no power of z overflows.
cplx newton_ratio(std::span<const cplx> c, std::span<const cplx> rev, cplx z) {
  if (std::abs(z) <= 1.0) {
    const auto j = horner_jet(c, z);
    return j.value / j.deriv;
  }
  const cplx w = 1.0 / z;
  const auto j = horner_jet(rev, w);
  const double deg = static_cast<double>(rev.size() - 1);
  // p(z) = z^deg rev(w), p'(z) = z^(deg-1) (deg rev(w) - w rev'(w)).
  return z / (deg - w * j.deriv / j.value);
}

}  // namespace

RootResult aberth_roots(std::span<const cplx> coeffs, const RootOptions& opts) {
  const int deg = effective_degree(coeffs, 0.0);
  if (deg < 0) throw Error(ErrorKind::InvalidArgument, "zero polynomial has no roots");
  RootResult result;
  if (deg == 0) {
    result.converged = true;
    return result;
  }
  const std::span<const cplx> c = coeffs.first(static_cast<std::size_t>(deg) + 1);
  const auto rev = reversed(c, static_cast<std::size_t>(deg));
  const std::size_t n = static_cast<std::size_t>(deg);

  // Initial guesses: circle whose radius is the geometric mean root modulus.
  double radius = std::pow(std::abs(c[0]) / std::abs(c[n]), 1.0 / static_cast<double>(deg));
  if (!(radius > 0.0) || !std::isfinite(radius)) radius = 1.0;
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n) + 0.4;
    z[i] = std::polar(radius, theta);
  }

  std::vector<bool> done(n, false);
  for (int it = 0; it < opts.max_iterations; ++it) {
    result.iterations = it + 1;
    bool all_done = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const cplx ratio = newton_ratio(c, rev, z[i]);
      if (ratio == cplx{0.0, 0.0} || !std::isfinite(std::abs(ratio))) {
        done[i] = std::abs(horner(c, z[i])) == 0.0;
        if (!done[i]) all_done = false;
        continue;
      }
      cplx s{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) s += 1.0 / (z[i] - z[j]);
      const cplx w = ratio / (1.0 - ratio * s);
      z[i] -= w;
      if (std::abs(w) <= opts.step_tolerance * std::max(1.0, std::abs(z[i])))
        done[i] = true;
      else
        all_done = false;
    }
    if (all_done) {
      result.converged = true;
      break;
    }
  }
  result.roots = std::move(z);
  return result;
}

}  // namespace mislab
