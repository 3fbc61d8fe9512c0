#include "cgo2d/gauge.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

namespace cgo2d {

ScalarField GaugeFunction::dz() const {
  return eta_z ? *eta_z : wirtinger(eta, WirtingerKind::dz);
}
ScalarField GaugeFunction::dzbar() const {
  return eta_zbar ? *eta_zbar : wirtinger(eta, WirtingerKind::dzbar);
}
ScalarField GaugeFunction::laplacian() const {
  if (lap_eta) return *lap_eta;
  return second_derivative(eta, 1, 1) + second_derivative(eta, 2, 2);
}

GaugeFunction make_gauge(MeshPtr mesh, const std::string& eta_src, const std::string& eta_z_src,
                         const std::string& eta_zbar_src, const std::string& lap_src) {
  GaugeFunction g;
  g.eta = evaluate(eta_src, mesh);
  if (!eta_z_src.empty()) g.eta_z = evaluate(eta_z_src, mesh);
  if (!eta_zbar_src.empty()) g.eta_zbar = evaluate(eta_zbar_src, mesh);
  if (!lap_src.empty()) g.lap_eta = evaluate(lap_src, mesh);
  return g;
}

void measure_gauge_traces(GaugeFunction& g, const BoundaryPartition& part, double tol_rel) {
  const ScalarField ez = g.dz(), ezb = g.dzbar();
  g.gamma_tilde_sup = 0;
  g.normal_deriv_sup = 0;
  for (int i : part.gamma_tilde_nodes()) {
    g.gamma_tilde_sup = std::max(g.gamma_tilde_sup, std::abs(g.eta[i]));
    const Vec2 nu = part.nu(i);
    // d/dnu = nu1 d1 + nu2 d2 with d1 = dz + dzbar, d2 = i(dz - dzbar)
    const Complex iu(0, 1);
    const Complex dn = nu.x1 * (ez[i] + ezb[i]) + nu.x2 * iu * (ez[i] - ezb[i]);
    g.normal_deriv_sup = std::max(g.normal_deriv_sup, std::abs(dn));
  }
  const double scale = std::max(sup_norm(g.eta), 1e-300);
  g.traces_admissible =
      g.gamma_tilde_sup <= tol_rel * scale && g.normal_deriv_sup <= tol_rel * std::max(1.0, scale);
}

CoefficientSet gauge_conjugate(const CoefficientSet& L, const GaugeFunction& g) {
  check_same_mesh(L.A, g.eta);
  const int n = g.eta.size();
  const Complex iu(0, 1);
  ScalarField ez = g.dz(), ezb = g.dzbar();
  ScalarField lap = g.laplacian();  // flat Laplacian of eta

  CoefficientSet out = L;
  out.sources.reset();
  for (int i = 0; i < n; ++i) {
    const Complex e1 = ez[i] + ezb[i];            // d1 eta
    const Complex e2 = iu * (ez[i] - ezb[i]);     // d2 eta
    // first-order addition 2 g^{jk} eta_j d_k rewritten in Wirtinger form
    Complex c1, c2, grad_sq, lap_g;
    switch (L.metric.kind) {
      case Metric::Kind::identity:
        c1 = 2.0 * e1;
        c2 = 2.0 * e2;
        grad_sq = e1 * e1 + e2 * e2;
        lap_g = lap[i];
        break;
      case Metric::Kind::conformal: {
        const double mu = L.metric.mu[std::size_t(i)];
        c1 = 2.0 * e1 / mu;
        c2 = 2.0 * e2 / mu;
        grad_sq = (e1 * e1 + e2 * e2) / mu;
        lap_g = lap[i] / mu;
        break;
      }
      case Metric::Kind::general: {
        const auto e = L.metric.entries(i);
        const double det = e[0] * e[2] - e[1] * e[1];
        const double i11 = e[2] / det, i12 = -e[1] / det, i22 = e[0] / det;
        c1 = 2.0 * (i11 * e1 + i12 * e2);
        c2 = 2.0 * (i12 * e1 + i22 * e2);
        grad_sq = i11 * e1 * e1 + 2.0 * i12 * e1 * e2 + i22 * e2 * e2;
        lap_g = Complex(0, 0);  // filled below by the divergence-form pass
        break;
      }
    }
    out.A[i] = L.A[i] + 0.5 * (c1 + iu * c2);
    out.B[i] = L.B[i] + 0.5 * (c1 - iu * c2);
    out.q[i] = L.q[i] + lap_g + grad_sq + 2.0 * L.A[i] * ez[i] + 2.0 * L.B[i] * ezb[i];
  }
  if (L.metric.kind == Metric::Kind::general) {
    ScalarField lapg = laplace_beltrami(L.metric, g.eta);
    for (int i = 0; i < n; ++i) out.q[i] += lapg[i];
  }
  return out;
}

CoefficientSet conformal_rescale(const CoefficientSet& L, const ScalarField& beta) {
  check_same_mesh(L.A, beta);
  const int n = beta.size();
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (!(beta[i].real() > 0) || std::abs(beta[i].imag()) > 1e-13 * std::abs(beta[i]))
      fail(Err::NonPositiveBeta, "beta must be a positive real field");
    b[std::size_t(i)] = beta[i].real();
  }
  CoefficientSet out = L;
  out.sources.reset();
  out.metric = L.metric.scaled(b);
  for (int i = 0; i < n; ++i) {
    out.A[i] = L.A[i] / b[std::size_t(i)];
    out.B[i] = L.B[i] / b[std::size_t(i)];
    out.q[i] = L.q[i] / b[std::size_t(i)];
  }
  return out;
}

Vec2 Diffeomorphism::apply(const Vec2& x) const {
  return {F1.eval(x.x1, x.x2).real(), F2.eval(x.x1, x.x2).real()};
}
Vec2 Diffeomorphism::apply_inv(const Vec2& y) const {
  if (!newton_inverse) return {Fi1.eval(y.x1, y.x2).real(), Fi2.eval(y.x1, y.x2).real()};
  Vec2 x = y;
  for (int it = 0; it < 50; ++it) {
    const Vec2 fx = apply(x);
    const double r1 = fx.x1 - y.x1, r2 = fx.x2 - y.x2;
    if (std::abs(r1) + std::abs(r2) < 1e-14) break;
    const auto J = jacobian(x);
    const double det = J[0] * J[3] - J[1] * J[2];
    if (!(std::abs(det) > 1e-14)) fail(Err::NonDiffeomorphism, "singular Jacobian in inversion");
    x.x1 -= (J[3] * r1 - J[1] * r2) / det;
    x.x2 -= (-J[2] * r1 + J[0] * r2) / det;
  }
  return x;
}
std::array<double, 4> Diffeomorphism::jacobian(const Vec2& x) const {
  return {J11.eval(x.x1, x.x2).real(), J12.eval(x.x1, x.x2).real(),
          J21.eval(x.x1, x.x2).real(), J22.eval(x.x1, x.x2).real()};
}

void Diffeomorphism::validate(MeshPtr mesh, const BoundaryPartition& part) const {
  for (int i = 0; i < mesh->n_nodes(); ++i) {
    const Vec2& x = mesh->nodes[std::size_t(i)];
    const auto J = jacobian(x);
    if (!(J[0] * J[3] - J[1] * J[2] > 0))
      fail(Err::NonDiffeomorphism, "det DF <= 0 at node " + std::to_string(i));
    const Vec2 y = apply(x);
    const Vec2 xb = apply_inv(y);
    if (std::hypot(xb.x1 - x.x1, xb.x2 - x.x2) > 1e-8)
      fail(Err::NonDiffeomorphism, "F^-1(F(x)) misses x at node " + std::to_string(i));
  }
  for (int i : part.gamma_tilde_nodes()) {
    const Vec2& x = mesh->nodes[std::size_t(i)];
    const Vec2 y = apply(x);
    if (std::hypot(y.x1 - x.x1, y.x2 - x.x2) > 1e-12)
      fail(Err::NonDiffeomorphism, "F != id on gamma_tilde at node " + std::to_string(i));
  }
}

Diffeomorphism make_diffeo(const std::string& f1, const std::string& f2, const std::string& fi1,
                           const std::string& fi2, const std::string& j11, const std::string& j12,
                           const std::string& j21, const std::string& j22) {
  Diffeomorphism F{parse_field_expr(f1), parse_field_expr(f2), parse_field_expr(fi1),
                   parse_field_expr(fi2), parse_field_expr(j11), parse_field_expr(j12),
                   parse_field_expr(j21), parse_field_expr(j22), false};
  return F;
}

Diffeomorphism make_diffeo_newton(const std::string& f1, const std::string& f2,
                                  const std::string& j11, const std::string& j12,
                                  const std::string& j21, const std::string& j22) {
  Diffeomorphism F{parse_field_expr(f1), parse_field_expr(f2), parse_field_expr("x1"),
                   parse_field_expr("x2"), parse_field_expr(j11), parse_field_expr(j12),
                   parse_field_expr(j21), parse_field_expr(j22), true};
  return F;
}

namespace {

struct CoefficientsAt {
  Complex A, B, q;
  std::array<double, 3> metric_entries;
  Metric::Kind kind;
};

CoefficientsAt coefficients_at(const CoefficientSet& L, const Vec2& x) {
  CoefficientsAt out;
  out.kind = L.metric.kind;
  if (L.sources) {
    out.A = parse_field_expr(L.sources->A).eval(x.x1, x.x2);
    out.B = parse_field_expr(L.sources->B).eval(x.x1, x.x2);
    out.q = parse_field_expr(L.sources->q).eval(x.x1, x.x2);
  } else {
    out.A = interpolate(L.A, x);
    out.B = interpolate(L.B, x);
    out.q = interpolate(L.q, x);
  }
  switch (L.metric.kind) {
    case Metric::Kind::identity: out.metric_entries = {1, 0, 1}; break;
    case Metric::Kind::conformal: {
      ScalarField mu(L.mesh());
      for (int i = 0; i < mu.size(); ++i) mu[i] = L.metric.mu[std::size_t(i)];
      const double m = interpolate(mu, x).real();
      out.metric_entries = {m, 0, m};
      break;
    }
    case Metric::Kind::general: {
      ScalarField g11(L.mesh()), g12(L.mesh()), g22(L.mesh());
      for (int i = 0; i < g11.size(); ++i) {
        g11[i] = L.metric.g11[std::size_t(i)];
        g12[i] = L.metric.g12[std::size_t(i)];
        g22[i] = L.metric.g22[std::size_t(i)];
      }
      out.metric_entries = {interpolate(g11, x).real(), interpolate(g12, x).real(),
                            interpolate(g22, x).real()};
      break;
    }
  }
  return out;
}

}  // namespace

PushforwardResult diffeo_pushforward(const CoefficientSet& L, const Diffeomorphism& F,
                                     const BoundaryPartition& part) {
  MeshPtr mesh = L.mesh();
  F.validate(mesh, part);
  const int n = mesh->n_nodes();
  const Complex iu(0, 1);

  PushforwardResult out;
  out.chain = L;
  out.chain.sources.reset();
  out.A_printed = ScalarField(mesh);
  out.B_printed = ScalarField(mesh);
  out.q_printed = ScalarField(mesh);

  std::vector<double> m11(static_cast<std::size_t>(n)), m12(m11), m22(m11);
  bool metric_is_identity = true;

  for (int i = 0; i < n; ++i) {
    const Vec2& y = mesh->nodes[std::size_t(i)];
    const Vec2 x = F.apply_inv(y);
    const auto C = coefficients_at(L, x);
    const auto J = F.jacobian(x);
    const double detJ = J[0] * J[3] - J[1] * J[2];
    if (!(detJ > 0)) fail(Err::NonDiffeomorphism, "det DF <= 0 along F^{-1}(mesh)");
    const double inv_abs_det = 1.0 / std::abs(detJ);

    // weak matrix of the source metric
    const double sd = std::sqrt(C.metric_entries[0] * C.metric_entries[2] -
                                C.metric_entries[1] * C.metric_entries[1]);
    const double G11 = C.metric_entries[2] / sd, G12 = -C.metric_entries[1] / sd,
                 G22 = C.metric_entries[0] / sd;
    // G' = DF G DF^T / |det DF|
    const double t11 = J[0] * G11 + J[1] * G12, t12 = J[0] * G12 + J[1] * G22;
    const double t21 = J[2] * G11 + J[3] * G12, t22 = J[2] * G12 + J[3] * G22;
    const double Gp11 = (t11 * J[0] + t12 * J[1]) * inv_abs_det;
    const double Gp12 = (t11 * J[2] + t12 * J[3]) * inv_abs_det;
    const double Gp22 = (t21 * J[2] + t22 * J[3]) * inv_abs_det;
    const double sp = sd * inv_abs_det;  // sqrt(det F*g)
    // F*g = sp * (G')^{-1}; det G' = 1 so the inverse is the adjugate
    m11[std::size_t(i)] = sp * Gp22;
    m12[std::size_t(i)] = -sp * Gp12;
    m22[std::size_t(i)] = sp * Gp11;
    if (std::abs(m11[std::size_t(i)] - 1) > 1e-12 || std::abs(m12[std::size_t(i)]) > 1e-12 ||
        std::abs(m22[std::size_t(i)] - 1) > 1e-12)
      metric_is_identity = false;

    // chain rule: 2A dz u + 2B dzbar u = c1 v_{y1} + c2 v_{y2}
    const Complex c1 = (C.A + C.B) * J[0] + iu * (C.B - C.A) * J[1];
    const Complex c2 = (C.A + C.B) * J[2] + iu * (C.B - C.A) * J[3];
    out.chain.A[i] = 0.5 * (c1 + iu * c2);
    out.chain.B[i] = 0.5 * (c1 - iu * c2);
    out.chain.q[i] = C.q;

    // displayed formulas, transcribed as printed
    out.A_printed[i] = ((C.A + C.B) * Complex(J[0], -J[2]) + iu * (C.B - C.A) * Complex(J[1], -J[3])) *
                       inv_abs_det;
    out.B_printed[i] = ((C.A + C.B) * Complex(J[0], J[2]) + iu * (C.B - C.A) * Complex(J[1], J[3])) *
                       inv_abs_det;
    out.q_printed[i] = C.q * inv_abs_det;
  }

  out.chain.metric = metric_is_identity ? Metric::identity(mesh)
                                        : Metric::general(mesh, m11, m12, m22);
  for (int i = 0; i < n; ++i) {
    out.printed_vs_chain_A = std::max(out.printed_vs_chain_A, std::abs(out.A_printed[i] - out.chain.A[i]));
    out.printed_vs_chain_B = std::max(out.printed_vs_chain_B, std::abs(out.B_printed[i] - out.chain.B[i]));
  }
  return out;
}

Conductivity conductivity_pushforward(const Conductivity& sigma, const Diffeomorphism& F,
                                      const BoundaryPartition& part) {
  MeshPtr mesh = sigma.mesh;
  F.validate(mesh, part);
  const int n = mesh->n_nodes();
  ScalarField s11(mesh), s12(mesh), s22(mesh);
  for (int i = 0; i < n; ++i) {
    s11[i] = sigma.s11[std::size_t(i)];
    s12[i] = sigma.s12[std::size_t(i)];
    s22[i] = sigma.s22[std::size_t(i)];
  }
  const bool exact = !sigma.sources[0].empty();
  FieldExpr e11, e12, e22;
  if (exact) {
    e11 = parse_field_expr(sigma.sources[0]);
    e12 = parse_field_expr(sigma.sources[1]);
    e22 = parse_field_expr(sigma.sources[2]);
  }
  Conductivity out;
  out.mesh = mesh;
  out.s11.resize(std::size_t(n));
  out.s12.resize(std::size_t(n));
  out.s22.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const Vec2 x = F.apply_inv(mesh->nodes[std::size_t(i)]);
    const auto J = F.jacobian(x);
    const double detJ = J[0] * J[3] - J[1] * J[2];
    if (!(detJ > 0)) fail(Err::NonDiffeomorphism, "det DF <= 0 along F^{-1}(mesh)");
    const double a = exact ? e11.eval(x.x1, x.x2).real() : interpolate(s11, x).real();
    const double b = exact ? e12.eval(x.x1, x.x2).real() : interpolate(s12, x).real();
    const double d = exact ? e22.eval(x.x1, x.x2).real() : interpolate(s22, x).real();
    const double t11 = J[0] * a + J[1] * b, t12 = J[0] * b + J[1] * d;
    const double t21 = J[2] * a + J[3] * b, t22 = J[2] * b + J[3] * d;
    out.s11[std::size_t(i)] = (t11 * J[0] + t12 * J[1]) / detJ;
    out.s12[std::size_t(i)] = (t11 * J[2] + t12 * J[3]) / detJ;
    out.s22[std::size_t(i)] = (t21 * J[2] + t22 * J[3]) / detJ;
  }
  out.require_spd();
  return out;
}

ObstructionReport obstruction_residuals(const CoefficientSet& L1, const CoefficientSet& L2,
                                        const BoundaryPartition& part,
                                        const ObstructionHints* hints) {
  check_same_mesh(L1.A, L2.A);
  if (!L1.metric.is_identity() || !L2.metric.is_identity())
    fail(Err::MetricNotIdentity, "obstruction identities need metric I on both sides");
  MeshPtr mesh = L1.mesh();
  const int n = mesh->n_nodes();
  ScalarField Ahat = L1.A - L2.A, Bhat = L1.B - L2.B;
  ScalarField dzA = (hints && hints->dz_Ahat) ? *hints->dz_Ahat : wirtinger(Ahat, WirtingerKind::dz);
  ScalarField dzbB =
      (hints && hints->dzbar_Bhat) ? *hints->dzbar_Bhat : wirtinger(Bhat, WirtingerKind::dzbar);

  ObstructionReport rep;
  rep.R_plus = ScalarField(mesh);
  rep.R_minus = ScalarField(mesh);
  for (int i = 0; i < n; ++i) {
    const Complex qd = L1.q[i] - L2.q[i];
    rep.R_plus[i] = -2.0 * dzA[i] - Bhat[i] * L1.A[i] - Ahat[i] * L2.B[i] + qd;
    rep.R_minus[i] = -2.0 * dzbB[i] - Ahat[i] * L1.B[i] - Bhat[i] * L2.A[i] + qd;
    if (!mesh->is_boundary[std::size_t(i)]) {
      rep.r_plus_sup = std::max(rep.r_plus_sup, std::abs(rep.R_plus[i]));
      rep.r_minus_sup = std::max(rep.r_minus_sup, std::abs(rep.R_minus[i]));
    }
  }
  for (int i : part.gamma_tilde_nodes())
    rep.boundary_sup = std::max(rep.boundary_sup, std::abs(Ahat[i]) + std::abs(Bhat[i]));
  return rep;
}

EtaReconstruction reconstruct_eta(const CoefficientSet& L1, const CoefficientSet& L2,
                                  const BoundaryPartition& part, const EtaOptions& opts) {
  check_same_mesh(L1.A, L2.A);
  MeshPtr mesh = L1.mesh();
  if (mesh->boundary_loops.size() > 1)
    fail(Err::MultiplyConnected, "eta reconstruction needs a simply connected mesh");
  const int n = mesh->n_nodes();
  const Complex iu(0, 1);

  ScalarField Ahat = L1.A - L2.A, Bhat = L1.B - L2.B;
  ScalarField dzA = wirtinger(Ahat, WirtingerKind::dz);
  ScalarField dzbB = wirtinger(Bhat, WirtingerKind::dzbar);

  EtaReconstruction out;
  double curl_sup = 0, scale = 0;
  for (int i = 0; i < n; ++i) {
    if (mesh->is_boundary[std::size_t(i)]) continue;
    curl_sup = std::max(curl_sup, std::abs(dzA[i] - dzbB[i]));
    scale = std::max({scale, std::abs(dzA[i]), std::abs(dzbB[i])});
  }
  out.curl_residual = curl_sup / std::max(scale, 1e-300);
  if (scale > 1e-13 && out.curl_residual > opts.curl_tol)
    fail(Err::IncompatibleDifferences,
         "curl condition violated: relative residual " + std::to_string(out.curl_residual));

  // Delta eta = dz Ahat + dzbar Bhat; eta = 0 on gamma_tilde; Neumann on gamma_0
  Eigen::SparseMatrix<Complex> K;
  {
    std::vector<Eigen::Triplet<Complex>> trips;
    for (int c = 0; c < mesh->n_cells(); ++c) {
      const auto& t = mesh->cells[std::size_t(c)];
      const Vec2 &p0 = mesh->nodes[std::size_t(t[0])], &p1 = mesh->nodes[std::size_t(t[1])],
                 &p2 = mesh->nodes[std::size_t(t[2])];
      const double area = mesh->cell_area[std::size_t(c)];
      const double bb[3] = {(p1.x2 - p2.x2) / (2 * area), (p2.x2 - p0.x2) / (2 * area),
                            (p0.x2 - p1.x2) / (2 * area)};
      const double cc[3] = {(p2.x1 - p1.x1) / (2 * area), (p0.x1 - p2.x1) / (2 * area),
                            (p1.x1 - p0.x1) / (2 * area)};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          trips.emplace_back(t[a], t[b], Complex(area * (bb[a] * bb[b] + cc[a] * cc[b]), 0));
    }
    K.resize(n, n);
    K.setFromTriplets(trips.begin(), trips.end());
  }

  Eigen::SparseMatrix<Complex> M(n, n);
  {
    std::vector<Eigen::Triplet<Complex>> trips;
    for (int k = 0; k < K.outerSize(); ++k)
      for (Eigen::SparseMatrix<Complex>::InnerIterator it(K, k); it; ++it)
        if (!part.in_gamma_tilde(int(it.row())) ||
            !mesh->is_boundary[std::size_t(it.row())])
          trips.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int i = 0; i < n; ++i)
      if (mesh->is_boundary[std::size_t(i)] && part.in_gamma_tilde(i))
        trips.emplace_back(i, i, Complex(1, 0));
    M.setFromTriplets(trips.begin(), trips.end());
  }

  Eigen::VectorXcd rhs(n);
  for (int i = 0; i < n; ++i) {
    if (mesh->is_boundary[std::size_t(i)] && part.in_gamma_tilde(i)) {
      rhs(i) = Complex(0, 0);
      continue;
    }
    const Complex f = dzA[i] + dzbB[i];
    Complex val = -mesh->lumped_area[std::size_t(i)] * f;
    if (mesh->is_boundary[std::size_t(i)]) {
      const Vec2 nu = part.nu(i);
      const Complex gN =
          nu.x1 * 0.5 * (Ahat[i] + Bhat[i]) + nu.x2 * 0.5 * iu * (Bhat[i] - Ahat[i]);
      val += mesh->boundary_weight[std::size_t(i)] * gN;
    }
    rhs(i) = val;
  }

  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  M.makeCompressed();
  lu.compute(M);
  if (lu.info() != Eigen::Success) fail(Err::SolveFailure, "eta Poisson factorization failed");
  Eigen::VectorXcd x = lu.solve(rhs);

  out.eta.eta = ScalarField(mesh);
  for (int i = 0; i < n; ++i) out.eta.eta[i] = x(i);
  measure_gauge_traces(out.eta, part, 1e-6);

  ScalarField ez = wirtinger(out.eta.eta, WirtingerKind::dz);
  ScalarField ezb = wirtinger(out.eta.eta, WirtingerKind::dzbar);
  for (int i = 0; i < n; ++i) {
    if (mesh->is_boundary[std::size_t(i)]) continue;
    out.grad_res_A = std::max(out.grad_res_A, std::abs(2.0 * ezb[i] - Ahat[i]));
    out.grad_res_B = std::max(out.grad_res_B, std::abs(2.0 * ez[i] - Bhat[i]));
  }
  ScalarField lap = second_derivative(out.eta.eta, 1, 1) + second_derivative(out.eta.eta, 2, 2);
  for (int i = 0; i < n; ++i) {
    if (mesh->is_boundary[std::size_t(i)]) continue;
    const Complex res = L1.q[i] - L2.q[i] - lap[i] - 4.0 * ez[i] * ezb[i] -
                        2.0 * ez[i] * L2.A[i] - 2.0 * ezb[i] * L2.B[i];
    out.finish_residual = std::max(out.finish_residual, std::abs(res));
  }
  return out;
}

}  // namespace cgo2d
