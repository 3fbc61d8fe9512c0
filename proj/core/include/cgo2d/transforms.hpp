#pragma once

#include "cgo2d/field.hpp"
#include "cgo2d/weights_fwd.hpp"

namespace cgo2d {

enum class CauchyKind { dzbar_inv, dz_inv };

// Area-quadrature Cauchy kernel. The cell containing the target carries the
// exact constant-density integral over an equal-area disc centred there,
// which vanishes by symmetry, so the singular entry drops out.
struct TransformKernel {
  MeshPtr mesh;
  CauchyKind kind = CauchyKind::dzbar_inv;

  ScalarField apply(const ScalarField& g) const;
  // single-target evaluation (kernel row at an arbitrary point)
  Complex apply_at(const ScalarField& g, const Vec2& target) const;
};

ScalarField cauchy_inverse(const ScalarField& g, CauchyKind kind);

// A with 2 dzbar A = -A_coeff and Im A = 0 on Gamma0, plus the B companion.
struct AntiderivativePair {
  ScalarField A_pot, B_pot;  // scripted A, B
  double im_residual_on_gamma0 = 0;
  double pde_residual_A = 0, pde_residual_B = 0;

  // monomial coefficients (z^j zbar^k, row-major in j,k) when built by
  // polynomial least squares; enables exact differentiation
  int poly_degree = -1;
  std::vector<Complex> A_coeff, B_coeff;
  bool has_poly() const { return poly_degree >= 0; }

  Complex eval_A(Complex z) const;
  Complex eval_B(Complex z) const;
  Complex eval_A_dz(Complex z) const;
  Complex eval_B_dzbar(Complex z) const;
};

enum class PotentialMethod { transform, polynomial_ls };

AntiderivativePair antiderivative_pair(const ScalarField& A, const ScalarField& B,
                                       const BoundaryPartition& part,
                                       PotentialMethod method = PotentialMethod::transform,
                                       int degree = 12);

enum class ConjugatedKind { T_B, P_A };

// T_B g = e^B dz^{-1}(e^{-B} g),  P_A g = e^A dzbar^{-1}(e^{-A} g)
ScalarField conjugated_inverse(const ScalarField& g, const AntiderivativePair& pot,
                               ConjugatedKind kind);

// Least-squares polynomial P in (z, zbar) with 2 dP = -F (d = dzbar for
// which == 0, dz for which == 1) and Im P soft-pinned on Gamma0.
struct PolyAntiderivative {
  int degree = 0;
  std::vector<Complex> coeff;
  ScalarField field;
};
PolyAntiderivative polynomial_antiderivative(const ScalarField& F, const BoundaryPartition& part,
                                             int which, int degree);

enum class RTauKind { R_tauA, Rtilde_tauB };

// (1/2) e^{A} e^{tau(conj(Phi)-Phi)} dzbar^{-1}(g e^{-A} e^{tau(Phi-conj(Phi))})
// and the dz^{-1} companion with e^{B}.
ScalarField r_tau(const ScalarField& g, const AntiderivativePair& pot,
                  const HolomorphicWeight& Phi, double tau, RTauKind kind);

void require_oscillation_budget(const HolomorphicWeight& Phi, MeshPtr mesh, double tau);

enum class EnergyVariant { vika1, vika2 };

struct EnergyIdentityReport {
  double grad1_sq = 0;       // first squared norm
  double boundary_weight = 0;
  double divergence = 0;
  double rotation = 0;       // Re i (tangential derivative) term
  double grad2_sq = 0;       // second squared norm
  double lhs = 0;
  double rhs = 0;            // |f|^2
  double relative_gap = 0;
};

// Integration-by-parts identity for the conjugated first-order operator:
// the source f is computed from v, then every term is measured separately.
EnergyIdentityReport verify_energy_identity(const ScalarField& v, const ScalarField& C_field,
                                            const HolomorphicWeight& Phi, double tau,
                                            EnergyVariant variant,
                                            const BoundaryPartition& part);

}  // namespace cgo2d
