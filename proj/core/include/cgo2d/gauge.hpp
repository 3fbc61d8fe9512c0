#pragma once

#include "cgo2d/forward.hpp"
#include "cgo2d/operators.hpp"

namespace cgo2d {

// Complex gauge eta, optionally with exact derivative fields for tests that
// need algebraic rather than stencil accuracy.
struct GaugeFunction {
  ScalarField eta;
  std::optional<ScalarField> eta_z, eta_zbar, lap_eta;
  double gamma_tilde_sup = 0;       // measured |eta| on gamma_tilde
  double normal_deriv_sup = 0;      // measured |d eta / d nu| on gamma_tilde
  bool traces_admissible = false;

  ScalarField dz() const;
  ScalarField dzbar() const;
  ScalarField laplacian() const;
};

GaugeFunction make_gauge(MeshPtr mesh, const std::string& eta_src,
                         const std::string& eta_z_src = "", const std::string& eta_zbar_src = "",
                         const std::string& lap_src = "");
void measure_gauge_traces(GaugeFunction& g, const BoundaryPartition& part, double tol_rel = 1e-10);

// Coefficients of e^{-eta} L e^{eta}; any metric.
CoefficientSet gauge_conjugate(const CoefficientSet& L, const GaugeFunction& g);

// (beta g, A/beta, B/beta, q/beta)
CoefficientSet conformal_rescale(const CoefficientSet& L, const ScalarField& beta);

struct Diffeomorphism {
  FieldExpr F1, F2;     // y = F(x)
  FieldExpr Fi1, Fi2;   // x = F^{-1}(y); unused when newton_inverse is set
  FieldExpr J11, J12, J21, J22;  // DF entries as functions of x
  bool newton_inverse = false;

  Vec2 apply(const Vec2& x) const;
  Vec2 apply_inv(const Vec2& y) const;
  std::array<double, 4> jacobian(const Vec2& x) const;  // row-major DF
  // det DF > 0 everywhere, F o F^{-1} = id to 1e-8, F = id on gamma_tilde to 1e-12
  void validate(MeshPtr mesh, const BoundaryPartition& part) const;
};

Diffeomorphism make_diffeo(const std::string& f1, const std::string& f2, const std::string& fi1,
                           const std::string& fi2, const std::string& j11, const std::string& j12,
                           const std::string& j21, const std::string& j22);

// Inverse by Newton iteration on F (the Jacobian expressions supply DF).
Diffeomorphism make_diffeo_newton(const std::string& f1, const std::string& f2,
                                  const std::string& j11, const std::string& j12,
                                  const std::string& j21, const std::string& j22);

struct PushforwardResult {
  CoefficientSet chain;      // coefficients derived from the change of variables
  ScalarField A_printed, B_printed, q_printed;  // transcription of the displayed formulas
  double printed_vs_chain_A = 0, printed_vs_chain_B = 0;
};

// Chain-rule push-forward normalized so that (K v)(y) = (L u)(F^{-1}(y))
// for v = u o F^{-1}; the displayed closed-form coefficients are evaluated
// separately and reported for comparison only.
PushforwardResult diffeo_pushforward(const CoefficientSet& L, const Diffeomorphism& F,
                                     const BoundaryPartition& part);

Conductivity conductivity_pushforward(const Conductivity& sigma, const Diffeomorphism& F,
                                      const BoundaryPartition& part);

struct ObstructionHints {
  std::optional<ScalarField> dz_Ahat, dzbar_Bhat;
};

struct ObstructionReport {
  ScalarField R_plus, R_minus;
  double r_plus_sup = 0, r_minus_sup = 0;  // interior sup norms
  double boundary_sup = 0;                 // sup over gamma_tilde of |Ahat| + |Bhat|
};

ObstructionReport obstruction_residuals(const CoefficientSet& L1, const CoefficientSet& L2,
                                        const BoundaryPartition& part,
                                        const ObstructionHints* hints = nullptr);

struct EtaReconstruction {
  GaugeFunction eta;
  double grad_res_A = 0;      // ||2 dzbar eta - (A1-A2)||_inf interior
  double grad_res_B = 0;
  double curl_residual = 0;   // relative incompatibility of the differences
  double finish_residual = 0; // zero-order identity residual (stencil)
};

struct EtaOptions {
  double curl_tol = 0.05;
};

// Solves the pinned Poisson problem for eta from coefficient differences.
EtaReconstruction reconstruct_eta(const CoefficientSet& L1, const CoefficientSet& L2,
                                  const BoundaryPartition& part, const EtaOptions& opts = {});

}  // namespace cgo2d
