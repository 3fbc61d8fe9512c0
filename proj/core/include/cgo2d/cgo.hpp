#pragma once

#include "cgo2d/operators.hpp"
#include "cgo2d/transforms.hpp"
#include "cgo2d/weights.hpp"

namespace cgo2d {

// Formal adjoint of Delta + 2A dz + 2B dzbar + q, again in canonical form:
// (-conj(B), -conj(A), conj(q) - 2 dzbar conj(A) - 2 dz conj(B)).
CoefficientSet adjoint_coefficients(const CoefficientSet& L);

struct CorrectionSources {
  ScalarField g1, g2;
  std::vector<Complex> M1, M2;      // Taylor subtraction polynomials (about x_t)
  Complex expansion_point;
  double vanish_res_g1 = 0;         // sup_k |dzbar^k g1(x_t)| / ||g1||_inf, k <= K
  double vanish_res_g2 = 0;
};

CorrectionSources build_correction_sources(const CoefficientSet& L,
                                           const AntiderivativePair& pots, const ScalarField& a,
                                           const ScalarField& d, const HolomorphicWeight& Phi,
                                           int vanish_order = 2, bool poly_sources = true,
                                           int source_degree = 18);

enum class CGOOrder { leading, corrected };

struct CGOOptions {
  int amplitude_degree = 16;
  int potential_degree = 12;
  int correction_degree = 14;  // degree of the (a1,d1) boundary match
  int vanish_order = 2;        // K in the subtraction-polynomial conditions
  bool poly_sources = true;    // polynomial antiderivatives for g1/g2
  int source_degree = 18;
  // e2 ramps 0 -> 1 between these fractions of the critical point's distance
  // to the boundary. Fractions >= 1 disable the collar (e1 == 1): at
  // desk-scale tau the explicit collar terms contribute cutoff-layer
  // derivatives of size O(d^4 e2 / tau^2) that exceed the o(1/tau) target,
  // so the transform route is the default and the collar is opt-in.
  double cutoff_inner = 4.0;
  double cutoff_outer = 8.0;
};

// Exponentially weighted solution u = U+ e^{tau Phi} + U- e^{tau conj(Phi)}.
// The factors U+- are stored so that derivatives of the oscillatory
// exponentials are always taken analytically.
struct CGOSolution {
  double tau = 0;
  bool adjoint = false;
  HolomorphicWeight weight;
  AntiderivativePair pots;
  ScalarField a, d;    // leading amplitudes (holomorphic / antiholomorphic)
  ScalarField a1, d1;  // first-order amplitude corrections
  ScalarField g1, g2;  // correction sources
  ScalarField U_plus, U_minus;
  ScalarField assembled;
  ScalarField u11;  // correction field: (u - leading) e^{-tau phi}
  double residual_leading = 0;
  double residual_corrected = 0;
  double boundary_relation_sup = 0;  // sup over Gamma0 of |a e^A + d e^B|
  double vanish_res_g1 = 0, vanish_res_g2 = 0;
  Complex critical_point{};

  double weighted_sup() const;  // sup |u| e^{-tau phi}
};

CGOSolution assemble_cgo(const CoefficientSet& L, const HolomorphicWeight& Phi, double tau,
                         CGOOrder order, const BoundaryPartition& part,
                         const CGOOptions& opts = {});

// Solution of the adjoint problem with decay where the direct one grows:
// v = b e^{B2 - tau Phi} + c e^{A2 - tau conj(Phi)} + corrections.
CGOSolution assemble_adjoint_cgo(const CoefficientSet& L2, const HolomorphicWeight& Phi,
                                 double tau, CGOOrder order, const BoundaryPartition& part,
                                 const CGOOptions& opts = {});

}  // namespace cgo2d
