#pragma once

#include <memory>

#include "cgo2d/operators.hpp"

namespace cgo2d {

// Discretized boundary value problem: weak-form principal part, collocated
// lower-order terms, identity rows on the boundary. Factorized once;
// per-input solves share the factorization read-only.
class DiscreteSystem {
 public:
  MeshPtr mesh;
  BoundaryPartition part;
  std::uint64_t operator_tag = 0;
  std::string factorization_token;
  bool near_singular = false;
  double condition_estimate = 0;

  // u with u = f on gamma_tilde, u = 0 on gamma_0, L u = rhs inside.
  // f may be empty (all-zero boundary data).
  ScalarField solve(const ScalarField& f_tilde, const ScalarField& rhs) const;
  // full Dirichlet solve: u = f on the whole boundary
  ScalarField solve_full_dirichlet(const ScalarField& f, const ScalarField& rhs) const;

  // variationally consistent conormal trace of a solved field
  ScalarField weak_conormal(const ScalarField& u, const ScalarField& rhs) const;

  // system with every interior row scaled by 1/beta (conformal pairing)
  DiscreteSystem row_scaled(const std::vector<double>& beta) const;

  struct Impl;
  std::shared_ptr<const Impl> impl;
};

DiscreteSystem assemble(const CoefficientSet& L, const BoundaryPartition& part);

ScalarField solve_dirichlet(const DiscreteSystem& sys, const ScalarField& f_tilde,
                            const ScalarField& rhs);

// basis of smooth bump x trigonometric inputs supported in gamma_tilde with
// two cells of clearance from its endpoints
std::vector<ScalarField> default_boundary_basis(const BoundaryPartition& part, int count);

struct CauchyDataSet {
  std::vector<ScalarField> inputs;     // boundary data f_k (supported in gamma_tilde)
  std::vector<ScalarField> traces;     // u_k restricted to the boundary
  std::vector<ScalarField> conormals;  // weighted conormal derivative on the boundary
  std::uint64_t operator_tag = 0;
  BoundaryPartition part;

  std::string to_json() const;
  std::string to_csv() const;
};

CauchyDataSet extract_cauchy_data(const CoefficientSet& L, const BoundaryPartition& part,
                                  const std::vector<ScalarField>& basis);
CauchyDataSet extract_cauchy_data(const DiscreteSystem& sys,
                                  const std::vector<ScalarField>& basis);

// max_k ||g1_k - g2_k||_{L2(gamma_tilde)} / (||f_k|| + eps)
double cauchy_distance(const CauchyDataSet& C1, const CauchyDataSet& C2);

// Divergence-form conductivity problem div(sigma grad u) = 0.
struct Conductivity {
  MeshPtr mesh;
  std::vector<double> s11, s12, s22;
  std::array<std::string, 3> sources{};  // entry expressions when built from text
  void require_spd() const;
};

Conductivity make_conductivity(MeshPtr mesh, const std::string& s11, const std::string& s12,
                               const std::string& s22);

CauchyDataSet conductivity_cauchy_data(const Conductivity& sigma, const BoundaryPartition& part,
                                       const std::vector<ScalarField>& basis);

}  // namespace cgo2d
