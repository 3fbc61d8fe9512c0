#pragma once

#include "cgo2d/cgo.hpp"
#include "cgo2d/forward.hpp"

namespace cgo2d {

struct OscillatoryIntegral {
  ScalarField amplitude;
  HolomorphicWeight weight;
  int sign = +1;  // phase e^{sign * tau * (Phi - conj Phi)} = e^{sign * 2 i tau psi}
};

struct SweepResult {
  std::vector<double> taus;
  std::vector<Complex> values;
  std::vector<double> abs_values;
  double fitted_order = 0;  // of |value| against 1/tau
  double fit_residual = 0;
  double theil_sen = 0;     // slope of |value| (or ratio) against tau

  std::string to_csv() const;
};

// Direct quadrature of the oscillatory integral (the brute-force oracle).
Complex oscillatory_quadrature(const OscillatoryIntegral& I, double tau);

// Sum over certified critical points of
//   (pi/|tau|) g(x) e^{sign 2 i tau psi(x)} e^{i sgn(sign tau) pi sig/4} / |det psi''(x)|^{1/2}.
// The quadrature oracle pins this normalization: for Phi = z^2/2 the full-
// phase Hessian of 2*psi has |det|^{1/2} = 2, so displays written as
// 2 pi / (tau |det psi''|^{1/2}) mean the same number.
Complex stationary_phase_leading(const OscillatoryIntegral& I, double tau);

enum class PoleKernel { dzbar_minus, dz_plus };
// dzbar_minus: -(1/pi) Int g e^{-tau(Phi-conj Phi)} / (zeta - z)
// dz_plus:     -(1/pi) Int g e^{+tau(Phi-conj Phi)} / (conj zeta - conj z)

// Second-order (1/tau^2) pole expansion of the singular-kernel oscillatory
// integral, for amplitudes vanishing at the critical point.
Complex stationary_phase_second(const OscillatoryIntegral& I, double tau, const Vec2& target,
                                PoleKernel kernel);
// direct-quadrature oracle of the same integral
Complex singular_kernel_oracle(const OscillatoryIntegral& I, double tau, const Vec2& target,
                               PoleKernel kernel);

// Weighted a-priori ratio test: for u in H^1_0, compares
//   |tau| ||u e^{tau phi}||^2 + ||u e^{tau phi}||_{H1}^2
//     + ||du/dnu e^{tau phi}||_{L2(Gamma0)}^2 + tau^2 || |dPhi| u e^{tau phi} ||^2
// against
//   ||(K u) e^{tau phi}||^2 + |tau| Int_{gamma_tilde} |du/dnu|^2 e^{2 tau phi}
// with K u = Delta u + 2A dz u + 2B dzbar u.
SweepResult verify_carleman(const CoefficientSet& L, const HolomorphicWeight& Phi,
                            const std::vector<ScalarField>& u_samples,
                            const std::vector<double>& taus, const BoundaryPartition& part);

struct PairingReport {
  Complex S = 0;                   // the coefficient-difference pairing integral
  double normalized = 0;           // |S| / (||u1|| ||v||)
  double cauchy_match_residual = 0;  // forward-matching Neumann defect on gamma_tilde
  Complex q_pairing = 0;           // (q u1, v)
  Complex q_leading = 0;           // tau-independent term of its expansion
  double q_rel_error = 0;
};

struct PairingOptions {
  double match_tol = 1e10;  // CauchyDataMismatch threshold on the Neumann defect
};

PairingReport verify_pairing(const CoefficientSet& L1, const CoefficientSet& L2,
                             const CGOSolution& u1, const CGOSolution& v,
                             const BoundaryPartition& part, const PairingOptions& opts = {});

}  // namespace cgo2d
