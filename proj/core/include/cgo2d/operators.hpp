#pragma once

#include <array>
#include <optional>
#include <string>

#include "cgo2d/field.hpp"

namespace cgo2d {

// 2x2 symmetric positive-definite metric per node.
struct Metric {
  enum class Kind { identity, conformal, general };
  Kind kind = Kind::identity;
  MeshPtr mesh;
  std::vector<double> mu;             // conformal factor (kind == conformal)
  std::vector<double> g11, g12, g22;  // kind == general

  static Metric identity(MeshPtr m);
  static Metric conformal(MeshPtr m, const std::vector<double>& mu);
  static Metric general(MeshPtr m, std::vector<double> g11, std::vector<double> g12,
                        std::vector<double> g22);

  std::array<double, 3> entries(int i) const;      // g11, g12, g22
  double sqrt_det(int i) const;
  // G = sqrt(det g) * g^{-1}; in 2D this matrix is unimodular and carries
  // the whole weak form of the Laplace-Beltrami operator.
  std::array<double, 3> weak_matrix(int i) const;  // G11, G12, G22
  // minimum metric eigenvalue over all nodes
  double ellipticity() const;
  void require_elliptic(double alpha_min = 1e-12) const;
  bool is_identity() const { return kind == Kind::identity; }
  Metric scaled(const std::vector<double>& beta) const;  // beta * g
};

// Coefficients of  Delta_g + 2A d/dz + 2B d/dzbar + q.
struct CoefficientSet {
  Metric metric;
  ScalarField A, B, q;

  // expression sources, kept when built from text so scenarios stay
  // reproducible and fields can be re-evaluated off-mesh
  struct Sources {
    std::string metric_kind = "identity";
    std::string mu;  // conformal factor expression
    std::string A, B, q;
  };
  std::optional<Sources> sources;

  MeshPtr mesh() const { return A.mesh; }
  std::uint64_t hash() const;
  std::string to_json() const;
  static CoefficientSet from_json(const std::string& text, MeshPtr mesh);
};

CoefficientSet make_coefficients(MeshPtr mesh, const std::string& A, const std::string& B,
                                 const std::string& q, const std::string& metric_kind = "identity",
                                 const std::string& mu = "");

// Exact derivative fields, used where tests demand algebraic (not stencil)
// accuracy.
struct DerivativeHints {
  std::optional<ScalarField> u_d1, u_d2;  // du/dx1, du/dx2
  std::optional<ScalarField> lap_u;
};

ScalarField laplace_beltrami(const Metric& g, const ScalarField& u);
ScalarField apply_operator(const CoefficientSet& L, const ScalarField& u,
                           const DerivativeHints* hints = nullptr);

// Metric-weighted conormal trace nu^T (sqrt(det g) g^{-1}) grad u; values on
// boundary nodes, zero elsewhere.
ScalarField conormal_derivative(const CoefficientSet& L, const ScalarField& u,
                                const BoundaryPartition& part);

// (D_k + A_k)^2 + q with a real vector potential.
struct MagneticData {
  ScalarField A1t, A2t;  // real-valued
  ScalarField q_t;
  // optional exact Jacobian of (A1t, A2t)
  std::optional<ScalarField> dA1_d1, dA1_d2, dA2_d1, dA2_d2;
};

struct MagneticExpansion {
  CoefficientSet L;       // canonical coefficients of minus the magnetic operator
  ScalarField rot;        // d1 A2t - d2 A1t
};

MagneticExpansion magnetic_expand(const MagneticData& m);

// Direct application of the magnetic operator (oracle side of the reduction).
ScalarField magnetic_apply(const MagneticData& m, const ScalarField& u,
                           const DerivativeHints* hints = nullptr);

// Delta + a d1 + b d2 + q rewritten in Wirtinger form.
CoefficientSet convection_to_wirtinger(const ScalarField& a, const ScalarField& b,
                                       const ScalarField& q);

struct FactorizationReport {
  double max_discrepancy = 0;        // sup over interior nodes, all pairs
  double direct_vs_first = 0;        // (2dz+B)(2dzbar+A) route
  double direct_vs_second = 0;       // (2dzbar+A)(2dz+B) route
};

FactorizationReport verify_factorization(const CoefficientSet& L, const ScalarField& u);

}  // namespace cgo2d
