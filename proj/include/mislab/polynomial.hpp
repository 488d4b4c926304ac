#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mislab {

using cplx = std::complex<double>;

// Dense polynomials are stored lowest power first: c[0] + c[1] z + ... .

cplx horner(std::span<const cplx> c, cplx z);

struct PolyJet {
  cplx value;
  cplx deriv;
};

PolyJet horner_jet(std::span<const cplx> c, cplx z);

// j-th derivative evaluated at z.
cplx derivative_at(std::span<const cplx> c, cplx z, int order);

std::vector<cplx> derivative(std::span<const cplx> c);
std::vector<cplx> multiply(std::span<const cplx> a, std::span<const cplx> b);
std::vector<cplx> subtract(std::span<const cplx> a, std::span<const cplx> b);

// Coefficients of z^deg * p(1/z) for a polynomial of formal degree `deg`.
std::vector<cplx> reversed(std::span<const cplx> c, std::size_t deg);

double max_abs(std::span<const cplx> c);

// Highest index whose coefficient exceeds rel_tol * max|c|, or -1 for the
// zero polynomial.
int effective_degree(std::span<const cplx> c, double rel_tol);

// Backward-error style residual |p(z)| / (max|c| * max(1,|z|)^deg): the
// residual measured in whichever chart keeps |z| <= 1.
double relative_residual(std::span<const cplx> c, cplx z);

struct RootOptions {
  int max_iterations = 800;
  double step_tolerance = 1e-15;
};

struct RootResult {
  std::vector<cplx> roots;
  int iterations = 0;
  bool converged = false;
};

// Simultaneous Aberth-Ehrlich iteration for all roots of a polynomial whose
// leading coefficient (at effective degree) is nonzero. Roots of large
// modulus are updated through the reversed polynomial.
RootResult aberth_roots(std::span<const cplx> c, const RootOptions& opts = {});

}  // namespace mislab
