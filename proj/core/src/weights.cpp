#include "cgo2d/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace cgo2d {

Complex HolomorphicWeight::value(Complex z) const {
  Complex acc(0, 0);
  for (std::size_t k = coeff.size(); k-- > 0;) acc = acc * z + coeff[k];
  return acc;
}

namespace {
std::vector<Complex> poly_derivative(const std::vector<Complex>& c) {
  std::vector<Complex> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
  return d;
}

Complex horner(const std::vector<Complex>& c, Complex z) {
  Complex acc(0, 0);
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
  return acc;
}

// roots via companion-matrix eigenvalues
std::vector<Complex> poly_roots(std::vector<Complex> c) {
  while (!c.empty() && std::abs(c.back()) < 1e-14) c.pop_back();
  if (c.size() < 2) return {};
  const int deg = int(c.size()) - 1;
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
  for (int k = 0; k < deg; ++k) {
    if (k + 1 < deg) comp(k + 1, k) = 1.0;
    comp(k, deg - 1) = -c[std::size_t(k)] / c.back();
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<Complex> roots;
  for (int k = 0; k < deg; ++k) roots.push_back(es.eigenvalues()(k));
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return roots;
}
}  // namespace

Complex HolomorphicWeight::deriv(Complex z) const { return horner(poly_derivative(coeff), z); }
Complex HolomorphicWeight::second(Complex z) const {
  return horner(poly_derivative(poly_derivative(coeff)), z);
}
Complex HolomorphicWeight::third(Complex z) const {
  return horner(poly_derivative(poly_derivative(poly_derivative(coeff))), z);
}

Complex eval_poly(const std::vector<Complex>& c, Complex z) { return horner(c, z); }

Complex eval_poly_deriv(const std::vector<Complex>& c, Complex z, int order) {
  std::vector<Complex> d = c;
  for (int k = 0; k < order; ++k) d = poly_derivative(d);
  return horner(d, z);
}

namespace {

void certify(HolomorphicWeight& w, MeshPtr mesh, const BoundaryPartition& part,
             bool require_nondegenerate) {
  const auto dcoef = poly_derivative(w.coeff);
  auto roots = poly_roots(dcoef);
  w.points.clear();
  const double margin = 1e-8;
  for (Complex r : roots) {
    // Newton refinement
    Complex z = r;
    for (int it = 0; it < 50; ++it) {
      const Complex f = horner(dcoef, z);
      const Complex df = w.second(z);
      if (std::abs(df) < 1e-14) break;
      const Complex step = f / df;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    CriticalPoint cp;
    cp.location = z;
    cp.newton_residual = std::abs(horner(dcoef, z));
    cp.second_deriv = w.second(z);
    cp.hessian_det_abs = std::norm(cp.second_deriv);  // |det psi''| = |Phi''|^2
    cp.signature = 0;                                 // holomorphic saddle
    if (require_nondegenerate && std::abs(cp.second_deriv) < margin)
      fail(Err::CertificationFailure,
           "critical point with |Phi''| = " + std::to_string(std::abs(cp.second_deriv)));
    w.points.push_back(cp);
  }

  // distinct psi values across critical points
  w.distinct_psi_values = true;
  for (std::size_t i = 0; i < w.points.size(); ++i)
    for (std::size_t j = i + 1; j < w.points.size(); ++j)
      if (std::abs(w.psi(w.points[i].location) - w.psi(w.points[j].location)) < 1e-10)
        w.distinct_psi_values = false;

  // measured sup of Im Phi on Gamma0
  w.im_on_gamma0_sup = 0;
  for (int i : part.gamma_zero_nodes())
    w.im_on_gamma0_sup =
        std::max(w.im_on_gamma0_sup, std::abs(w.psi(to_complex(mesh->nodes[std::size_t(i)]))));

  // boundary Morse sampling: tangential critical points of psi on gamma_tilde
  // must have a nonzero second tangential derivative
  w.boundary_morse_ok = true;
  auto gt = part.gamma_tilde_nodes();
  for (int i : gt) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Vec2 tv = part.tau_vec(i);
    const Complex dphi = w.deriv(z);
    // grad psi = (Im Phi', Re Phi')
    const double dpsi_dt = tv.x1 * dphi.imag() + tv.x2 * dphi.real();
    if (std::abs(dpsi_dt) < 1e-12 * std::max(1.0, std::abs(dphi))) {
      // second tangential derivative along the curve via Phi''
      const Complex t(tv.x1, tv.x2);
      const Complex d2 = w.second(z) * t * t;  // d^2/ds^2 of Phi along the tangent line
      if (std::abs(d2.imag()) < 1e-10) w.boundary_morse_ok = false;
    }
  }
}

}  // namespace

HolomorphicWeight build_weight(const std::vector<Complex>& critical_points, MeshPtr mesh,
                               const BoundaryPartition& part, WeightBoundaryFlag flag,
                               Complex scale) {
  if (critical_points.empty())
    fail(Err::ConstantWeight, "no prescribed critical points: weight would be degree <= 1");
  if (critical_points.size() > 4)
    fail(Err::DegenerateRequest, "at most 4 prescribed critical points supported");
  for (std::size_t i = 0; i < critical_points.size(); ++i)
    for (std::size_t j = i + 1; j < critical_points.size(); ++j)
      if (std::abs(critical_points[i] - critical_points[j]) < 1e-10)
        fail(Err::DegenerateRequest, "coincident critical points");

  if (flag == WeightBoundaryFlag::im_zero_on_gamma0) {
    for (Complex p : critical_points)
      if (std::abs(p.imag()) > 1e-12)
        fail(Err::BoundaryConditionUnachievable,
             "Schwarz-symmetric weight needs real critical points");
    if (std::abs(scale.imag()) > 1e-12)
      fail(Err::BoundaryConditionUnachievable, "Schwarz-symmetric weight needs a real scale");
    for (int i : part.gamma_zero_nodes())
      if (std::abs(mesh->nodes[std::size_t(i)].x2) > 1e-12)
        fail(Err::BoundaryConditionUnachievable, "Gamma0 must lie on the real axis");
  }

  // Phi' = scale * prod (z - z_k), expanded then integrated
  std::vector<Complex> dp{scale};
  for (Complex p : critical_points) {
    std::vector<Complex> next(dp.size() + 1, Complex(0, 0));
    for (std::size_t k = 0; k < dp.size(); ++k) {
      next[k + 1] += dp[k];
      next[k] += -p * dp[k];
    }
    dp = std::move(next);
  }
  std::vector<Complex> coeff(dp.size() + 1, Complex(0, 0));
  for (std::size_t k = 0; k < dp.size(); ++k) coeff[k + 1] = dp[k] / double(k + 1);

  HolomorphicWeight w;
  w.coeff = coeff;
  certify(w, mesh, part, true);
  // prescribed and found points must agree
  for (Complex p : critical_points) {
    double best = 1e300;
    for (const auto& cp : w.points) best = std::min(best, std::abs(cp.location - p));
    if (best > 1e-10)
      fail(Err::CertificationFailure, "critical point drifted by " + std::to_string(best));
  }
  return w;
}

HolomorphicWeight make_weight_from_poly(const std::vector<Complex>& coeff, MeshPtr mesh,
                                        const BoundaryPartition& part, bool do_certify) {
  HolomorphicWeight w;
  w.coeff = coeff;
  certify(w, mesh, part, do_certify);
  return w;
}

std::vector<Complex> polynomial_coefficients(const FieldExpr& expr, int max_degree, double radius) {
  const int m = 4 * (max_degree + 1);
  // trigonometric moments on a circle recover the coefficients of a polynomial
  std::vector<Complex> c(std::size_t(max_degree) + 1, Complex(0, 0));
  std::vector<Complex> samples(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double th = 2.0 * M_PI * double(j) / double(m);
    samples[std::size_t(j)] = expr.eval(radius * std::cos(th), radius * std::sin(th));
  }
  for (int k = 0; k <= max_degree; ++k) {
    Complex acc(0, 0);
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * M_PI * double(j) / double(m);
      acc += samples[std::size_t(j)] * std::exp(Complex(0, -th * k));
    }
    c[std::size_t(k)] = acc / (double(m) * std::pow(radius, k));
  }
  // verify the expression really is that polynomial
  double err = 0;
  for (int j = 0; j < 7; ++j) {
    const double th = 0.37 + 2.0 * M_PI * double(j) / 7.0;
    const Complex z = 0.77 * radius * std::exp(Complex(0, th));
    err = std::max(err, std::abs(expr.eval(z.real(), z.imag()) - eval_poly(c, z)));
  }
  double scale = 0;
  for (const auto& ck : c) scale = std::max(scale, std::abs(ck));
  if (err > 1e-9 * std::max(1.0, scale))
    fail(Err::CertificationFailure, "expression is not a holomorphic polynomial of degree <= " +
                                        std::to_string(max_degree));
  return c;
}

PerturbedWeight perturb_weight(const HolomorphicWeight& Phi, const FieldExpr& w_expr, double delta,
                               MeshPtr mesh, const BoundaryPartition& part) {
  const int cap = std::max(int(Phi.coeff.size()) + 2, 8);
  auto wc = polynomial_coefficients(w_expr, cap);
  std::vector<Complex> coeff = Phi.coeff;
  if (wc.size() > coeff.size()) coeff.resize(wc.size(), Complex(0, 0));
  for (std::size_t k = 0; k < wc.size(); ++k) coeff[k] += delta * wc[k];

  PerturbedWeight out{make_weight_from_poly(coeff, mesh, part, false), {}};
  for (const auto& cp : out.weight.points) {
    out.split_points.push_back(cp.location);
    if (cp.newton_residual > 1e-10)
      fail(Err::CertificationFailure, "Newton did not converge for a perturbed critical point");
  }
  if (delta != 0.0)
    for (const auto& cp : out.weight.points)
      if (std::abs(cp.second_deriv) < 1e-14)
        fail(Err::CertificationFailure, "perturbation left a degenerate critical point");
  return out;
}

namespace {

struct LsqRows {
  // complex least squares min ||M x - b||^2 + ridge, unknowns stacked (a;d)
  Eigen::MatrixXcd M;
  Eigen::VectorXcd b;
};

LsqRows boundary_rows(const ScalarField* beta, const AntiderivativePair& pots,
                      const BoundaryPartition& part, int degree) {
  auto g0 = part.gamma_zero_nodes();
  const int m = degree + 1;
  LsqRows rows;
  rows.M.resize(int(g0.size()), 2 * m);
  rows.b.resize(int(g0.size()));
  for (int r = 0; r < int(g0.size()); ++r) {
    const int i = g0[std::size_t(r)];
    const double w = std::sqrt(part.mesh->boundary_weight[std::size_t(i)]);
    const Complex z = to_complex(part.mesh->nodes[std::size_t(i)]);
    const Complex ea = std::exp(pots.A_pot[i]), eb = std::exp(pots.B_pot[i]);
    Complex zk(1, 0), zbk(1, 0);
    for (int k = 0; k < m; ++k) {
      rows.M(r, k) = w * ea * zk;
      rows.M(r, m + k) = w * eb * zbk;
      zk *= z;
      zbk *= std::conj(z);
    }
    rows.b(r) = beta ? w * (*beta)[i] : Complex(0, 0);
  }
  return rows;
}

CRMatch finish_match(const Eigen::VectorXcd& x, const ScalarField* beta,
                     const AntiderivativePair& pots, const BoundaryPartition& part, int degree) {
  const int m = degree + 1;
  CRMatch out;
  out.a_coeff.assign(std::size_t(m), Complex(0, 0));
  out.d_coeff.assign(std::size_t(m), Complex(0, 0));
  for (int k = 0; k < m; ++k) {
    out.a_coeff[std::size_t(k)] = x(k);
    out.d_coeff[std::size_t(k)] = x(m + k);
  }
  MeshPtr mesh = part.mesh;
  out.a = ScalarField(mesh);
  out.d = ScalarField(mesh);
  for (int i = 0; i < mesh->n_nodes(); ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    out.a[i] = eval_poly(out.a_coeff, z);
    out.d[i] = eval_poly(out.d_coeff, std::conj(z));
  }
  double res2 = 0, sup = 0, bsup = 0, adsup = 0;
  for (int i : part.gamma_zero_nodes()) {
    const Complex v = out.a[i] * std::exp(pots.A_pot[i]) + out.d[i] * std::exp(pots.B_pot[i]) -
                      (beta ? (*beta)[i] : Complex(0, 0));
    res2 += part.mesh->boundary_weight[std::size_t(i)] * std::norm(v);
    sup = std::max(sup, std::abs(v));
    if (beta) bsup = std::max(bsup, std::abs((*beta)[i]));
  }
  adsup = std::max(sup_norm(out.a), sup_norm(out.d));
  out.residual_l2 = std::sqrt(res2);
  out.residual_sup = sup;
  out.stability_constant = adsup / std::max(bsup, 1e-300);
  return out;
}

}  // namespace

CRMatch cr_boundary_match(const ScalarField& beta, const AntiderivativePair& pots,
                          const BoundaryPartition& part, int degree) {
  if (degree > 40) fail(Err::ConfigError, "degree > 40");
  LsqRows rows = boundary_rows(&beta, pots, part, degree);
  const double ridge = 1e-10;
  Eigen::MatrixXcd AtA = rows.M.adjoint() * rows.M;
  AtA.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(AtA);
  if (ldlt.info() != Eigen::Success) fail(Err::IllConditionedBasis, "normal matrix not PD");
  Eigen::VectorXd dvec = ldlt.vectorD().real();
  if (dvec.maxCoeff() / std::max(dvec.minCoeff(), 1e-300) > 1e14)
    fail(Err::IllConditionedBasis, "normal matrix condition above 1e14 after ridge");
  Eigen::VectorXcd x = ldlt.solve(rows.M.adjoint() * rows.b);
  return finish_match(x, &beta, pots, part, degree);
}

CRMatch amplitude_with_vanishing(const std::vector<VanishingPoint>& points, Complex x_t,
                                 const AntiderivativePair& pots, const BoundaryPartition& part,
                                 int degree) {
  if (degree > 40) fail(Err::ConfigError, "degree > 40");
  const int m = degree + 1;
  int ncon = 2;  // a(x_t)=1, d(x_t)=1
  for (const auto& p : points) ncon += 2 * p.order;
  if (ncon >= 2 * m) fail(Err::InfeasibleConstraints, "constraint count exceeds basis dimension");

  LsqRows rows = boundary_rows(nullptr, pots, part, degree);

  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(ncon, 2 * m);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(ncon);
  int r = 0;
  auto deriv_row = [&](Complex z0, int order, bool anti, int row) {
    // order-th derivative of sum c_k z^k at z0
    for (int k = order; k < m; ++k) {
      double fact = 1;
      for (int t = 0; t < order; ++t) fact *= double(k - t);
      C(row, (anti ? m : 0) + k) = fact * ipow(anti ? std::conj(z0) : z0, k - order);
    }
  };
  deriv_row(x_t, 0, false, r);
  e(r++) = Complex(1, 0);
  deriv_row(x_t, 0, true, r);
  e(r++) = Complex(1, 0);
  for (const auto& p : points)
    for (int k = 0; k < p.order; ++k) {
      deriv_row(p.location, k, false, r++);
      deriv_row(p.location, k, true, r++);
    }

  // KKT system for min ||Mx||^2 + ridge||x||^2 s.t. Cx = e
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C);
  if (svd.singularValues().minCoeff() < 1e-10 * svd.singularValues().maxCoeff())
    fail(Err::InfeasibleConstraints, "constraint matrix is rank-deficient");

  const double ridge = 1e-10;
  const int nx = 2 * m;
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(nx + ncon, nx + ncon);
  K.topLeftCorner(nx, nx) = rows.M.adjoint() * rows.M;
  K.topLeftCorner(nx, nx).diagonal().array() += ridge;
  K.topRightCorner(nx, ncon) = C.adjoint();
  K.bottomLeftCorner(ncon, nx) = C;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nx + ncon);
  rhs.tail(ncon) = e;
  Eigen::VectorXcd sol = K.fullPivLu().solve(rhs);
  return finish_match(sol.head(nx), nullptr, pots, part, degree);
}

}  // namespace cgo2d
