#pragma once

#include "cgo2d/field.hpp"
#include "cgo2d/transforms.hpp"
#include "cgo2d/weights_fwd.hpp"

namespace cgo2d {

// Least-degree polynomial weight with prescribed critical points:
// Phi'(z) = scale * prod (z - z_k). Certificates: Newton-refined roots,
// nondegeneracy margins, distinct-psi check, boundary Morse sampling of
// Im Phi along gamma_tilde.
enum class WeightBoundaryFlag { none, im_zero_on_gamma0 };

HolomorphicWeight build_weight(const std::vector<Complex>& critical_points, MeshPtr mesh,
                               const BoundaryPartition& part,
                               WeightBoundaryFlag flag = WeightBoundaryFlag::none,
                               Complex scale = Complex(1, 0));

// Direct construction from Phi coefficients; certification optional so that
// degenerate seeds can be built and then perturbed.
HolomorphicWeight make_weight_from_poly(const std::vector<Complex>& coeff, MeshPtr mesh,
                                        const BoundaryPartition& part, bool certify = true);

struct PerturbedWeight {
  HolomorphicWeight weight;
  std::vector<Complex> split_points;  // critical points of the perturbed weight
};

// Phi_delta = Phi + delta * w for a holomorphic polynomial expression w.
PerturbedWeight perturb_weight(const HolomorphicWeight& Phi, const FieldExpr& w_expr,
                               double delta, MeshPtr mesh, const BoundaryPartition& part);

// Extracts polynomial coefficients of a holomorphic expression by sampling;
// CertificationFailure when the expression is not a polynomial of the degree cap.
std::vector<Complex> polynomial_coefficients(const FieldExpr& expr, int max_degree,
                                             double radius = 1.0);

struct CRMatch {
  ScalarField a, d;         // holomorphic / antiholomorphic fields on the mesh
  std::vector<Complex> a_coeff, d_coeff;
  double residual_l2 = 0;   // ||a e^A + d e^B - beta||_{L2(Gamma0)}
  double residual_sup = 0;
  double stability_constant = 0;  // ||(a,d)||_inf / ||beta||_inf
};

// Least-squares solve of (a e^A + d e^B)|_{Gamma0} = beta over the basis
// {1,...,z^deg} x {1,...,zbar^deg} with a small ridge.
CRMatch cr_boundary_match(const ScalarField& beta, const AntiderivativePair& pots,
                          const BoundaryPartition& part, int degree);

struct VanishingPoint {
  Complex location;
  int order = 1;  // derivatives 0..order-1 vanish
};

// Same basis, homogeneous boundary objective, hard interpolation constraints:
// derivative conditions at the given points plus a(x_t) = d(x_t) = 1.
CRMatch amplitude_with_vanishing(const std::vector<VanishingPoint>& points, Complex x_t,
                                 const AntiderivativePair& pots, const BoundaryPartition& part,
                                 int degree);

// holomorphic/antiholomorphic polynomial evaluation helpers
Complex eval_poly(const std::vector<Complex>& c, Complex z);
Complex eval_poly_deriv(const std::vector<Complex>& c, Complex z, int order = 1);

}  // namespace cgo2d
