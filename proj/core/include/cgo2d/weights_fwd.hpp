#pragma once

#include <vector>

#include "cgo2d/numerics.hpp"

namespace cgo2d {

struct CriticalPoint {
  Complex location{};
  Complex second_deriv{};     // d^2 Phi / dz^2 there
  double hessian_det_abs = 0; // |det psi''| = |Phi''|^2
  double newton_residual = 0;
  int signature = 0;          // of the psi Hessian (0 for a holomorphic saddle)
};

// Polynomial holomorphic weight Phi = phi + i psi with certified
// nondegenerate critical points.
struct HolomorphicWeight {
  std::vector<Complex> coeff;  // Phi(z) = sum coeff[k] z^k
  std::vector<CriticalPoint> points;
  double im_on_gamma0_sup = 0;
  bool distinct_psi_values = true;
  bool boundary_morse_ok = true;

  Complex value(Complex z) const;
  Complex deriv(Complex z) const;        // dz Phi
  Complex second(Complex z) const;       // dz^2 Phi
  Complex third(Complex z) const;        // dz^3 Phi
  double phi(Complex z) const { return value(z).real(); }
  double psi(Complex z) const { return value(z).imag(); }
};

}  // namespace cgo2d
