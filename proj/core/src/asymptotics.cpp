#include "cgo2d/asymptotics.hpp"

#include <cmath>
#include <sstream>

namespace cgo2d {

std::string SweepResult::to_csv() const {
  std::ostringstream os;
  os << "tau,value_re,value_im,abs,fitted_order\n";
  os.precision(17);
  for (std::size_t k = 0; k < taus.size(); ++k)
    os << taus[k] << ',' << values[k].real() << ',' << values[k].imag() << ',' << abs_values[k]
       << ',' << fitted_order << '\n';
  return os.str();
}

Complex oscillatory_quadrature(const OscillatoryIntegral& I, double tau) {
  require_oscillation_budget(I.weight, I.amplitude.mesh, tau);
  const auto& mesh = *I.amplitude.mesh;
  Complex acc(0, 0);
  for (int i = 0; i < I.amplitude.size(); ++i) {
    const Complex z = to_complex(mesh.nodes[std::size_t(i)]);
    acc += mesh.lumped_area[std::size_t(i)] * I.amplitude[i] *
           std::exp(Complex(0, 2.0 * I.sign * tau * I.weight.psi(z)));
  }
  return acc;
}

Complex stationary_phase_leading(const OscillatoryIntegral& I, double tau) {
  if (I.weight.points.empty())
    fail(Err::MissingCertificates, "weight carries no certified critical points");
  Complex acc(0, 0);
  for (const auto& cp : I.weight.points) {
    const double det_sqrt = std::sqrt(cp.hessian_det_abs);
    if (!(det_sqrt > 0)) fail(Err::MissingCertificates, "degenerate certificate");
    const Complex g0 = interpolate(I.amplitude, Vec2{cp.location.real(), cp.location.imag()});
    const double lam = 2.0 * I.sign * tau;  // phase lam * psi
    const Complex phase =
        std::exp(Complex(0, lam * I.weight.psi(cp.location))) *
        std::exp(Complex(0, (lam >= 0 ? 1.0 : -1.0) * M_PI * cp.signature / 4.0));
    acc += (M_PI / std::abs(tau)) * g0 * phase / det_sqrt;
  }
  return acc;
}

namespace {
struct PointDerivs {
  Complex g, gz, gzb, gzz, gzbzb;
};
PointDerivs derivs_at(const ScalarField& g, Complex x_t) {
  const auto& mesh = *g.mesh;
  int node = 0;
  double bd = 1e300;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double d = std::abs(to_complex(mesh.nodes[std::size_t(i)]) - x_t);
    if (d < bd) {
      bd = d;
      node = i;
    }
  }
  PointDerivs out;
  out.g = g[node];
  ScalarField gz = wirtinger(g, WirtingerKind::dz);
  ScalarField gzb = wirtinger(g, WirtingerKind::dzbar);
  out.gz = gz[node];
  out.gzb = gzb[node];
  out.gzz = wirtinger(gz, WirtingerKind::dz)[node];
  out.gzbzb = wirtinger(gzb, WirtingerKind::dzbar)[node];
  return out;
}
}  // namespace

Complex stationary_phase_second(const OscillatoryIntegral& I, double tau, const Vec2& target,
                                PoleKernel kernel) {
  if (I.weight.points.empty())
    fail(Err::MissingCertificates, "weight carries no certified critical points");
  const Complex zt = to_complex(target);
  Complex acc(0, 0);
  const double scale = sup_norm(I.amplitude);
  for (const auto& cp : I.weight.points) {
    const Complex x_t = cp.location;
    const PointDerivs d = derivs_at(I.amplitude, x_t);
    if (std::abs(d.g) > 1e-6 * std::max(scale, 1e-300))
      fail(Err::AmplitudeNotVanishing,
           "amplitude does not vanish at the critical point: |g| = " + std::to_string(std::abs(d.g)));
    const Complex d2 = cp.second_deriv;
    const Complex d3 = I.weight.third(x_t);
    const double det_sqrt = std::sqrt(cp.hessian_det_abs);
    const double psi0 = I.weight.psi(x_t);
    if (kernel == PoleKernel::dzbar_minus) {
      const Complex sigma1 = d.gz / d2;
      const Complex m1 = sigma1 * d3 / d2 + d.gzbzb / std::conj(d2) - d.gzz / d2;
      const Complex pole = x_t - zt;
      acc += std::exp(Complex(0, -2.0 * tau * psi0)) / (tau * tau * det_sqrt) *
             (sigma1 / (pole * pole) + m1 / (2.0 * pole));
    } else {
      const Complex s1 = d.gzb / std::conj(d2);
      const Complex m1 = s1 * std::conj(d3) / std::conj(d2) - d.gzbzb / std::conj(d2) + d.gzz / d2;
      const Complex pole = std::conj(x_t) - std::conj(zt);
      acc += std::exp(Complex(0, 2.0 * tau * psi0)) / (tau * tau * det_sqrt) *
             (s1 / (pole * pole) + m1 / (2.0 * pole));
    }
  }
  return acc;
}

Complex singular_kernel_oracle(const OscillatoryIntegral& I, double tau, const Vec2& target,
                               PoleKernel kernel) {
  require_oscillation_budget(I.weight, I.amplitude.mesh, tau);
  const auto& mesh = *I.amplitude.mesh;
  ScalarField mod(I.amplitude.mesh);
  const double sg = (kernel == PoleKernel::dzbar_minus) ? -1.0 : 1.0;
  for (int i = 0; i < mod.size(); ++i) {
    const Complex z = to_complex(mesh.nodes[std::size_t(i)]);
    mod[i] = I.amplitude[i] * std::exp(Complex(0, sg * 2.0 * tau * I.weight.psi(z)));
  }
  TransformKernel k{I.amplitude.mesh,
                    kernel == PoleKernel::dzbar_minus ? CauchyKind::dzbar_inv : CauchyKind::dz_inv};
  return k.apply_at(mod, target);
}

SweepResult verify_carleman(const CoefficientSet& L, const HolomorphicWeight& Phi,
                            const std::vector<ScalarField>& u_samples,
                            const std::vector<double>& taus, const BoundaryPartition& part) {
  MeshPtr mesh = L.mesh();
  const int n = mesh->n_nodes();
  const Complex iu(0, 1);

  SweepResult out;
  for (double tau : taus) {
    double worst = 0;
    for (const auto& u : u_samples) {
      if (sup_norm(u) == 0.0) continue;  // 0/0 ratio is skipped
      ScalarField u1 = derivative(u, 1), u2 = derivative(u, 2);
      ScalarField ku(mesh);
      {
        ScalarField lap = second_derivative(u, 1, 1) + second_derivative(u, 2, 2);
        for (int i = 0; i < n; ++i) {
          const Complex uz = 0.5 * (u1[i] - iu * u2[i]), uzb = 0.5 * (u1[i] + iu * u2[i]);
          ku[i] = lap[i] + 2.0 * L.A[i] * uz + 2.0 * L.B[i] * uzb;
        }
      }
      double lhs = 0, rhs = 0, bnd_tilde = 0, bnd_zero = 0;
      for (int i = 0; i < n; ++i) {
        const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
        const double w = std::exp(tau * Phi.phi(z));
        const double area = mesh->lumped_area[std::size_t(i)];
        const Complex dphi = Phi.deriv(z);
        if (mesh->is_boundary[std::size_t(i)]) {
          const Vec2 nu = part.nu(i);
          const Complex dun = nu.x1 * u1[i] + nu.x2 * u2[i];
          const double bterm = std::norm(dun) * w * w * mesh->boundary_weight[std::size_t(i)];
          if (part.in_gamma_tilde(i))
            bnd_tilde += bterm;
          else
            bnd_zero += bterm;
          continue;
        }
        // grad(u e^{tau phi}) = e^{tau phi}(grad u + tau u grad phi)
        const double gp1 = dphi.real(), gp2 = -dphi.imag();
        const Complex G1 = u1[i] + tau * u[i] * gp1;
        const Complex G2 = u2[i] + tau * u[i] * gp2;
        lhs += area * w * w *
               (std::abs(tau) * std::norm(u[i]) + std::norm(u[i]) + std::norm(G1) + std::norm(G2) +
                tau * tau * std::norm(dphi) * std::norm(u[i]));
        rhs += area * w * w * std::norm(ku[i]);
      }
      lhs += bnd_zero;
      rhs += std::abs(tau) * bnd_tilde;
      if (rhs > 0) worst = std::max(worst, lhs / rhs);
    }
    out.taus.push_back(tau);
    out.values.push_back(Complex(worst, 0));
    out.abs_values.push_back(worst);
  }
  std::vector<double> inv_tau;
  for (double t : out.taus) inv_tau.push_back(1.0 / t);
  out.fitted_order = fit_order(inv_tau, out.abs_values);
  out.theil_sen = theil_sen_slope(out.taus, out.abs_values);
  return out;
}

PairingReport verify_pairing(const CoefficientSet& L1, const CoefficientSet& L2,
                             const CGOSolution& u1, const CGOSolution& v,
                             const BoundaryPartition& part, const PairingOptions& opts) {
  check_same_mesh(L1.A, L2.A);
  MeshPtr mesh = L1.mesh();
  const int n = mesh->n_nodes();
  const Complex iu(0, 1);
  const double tau = u1.tau;

  // derivatives of u1 with the exponentials differentiated analytically
  ScalarField Upz = wirtinger(u1.U_plus, WirtingerKind::dz);
  ScalarField Upzb = wirtinger(u1.U_plus, WirtingerKind::dzbar);
  ScalarField Umz = wirtinger(u1.U_minus, WirtingerKind::dz);
  ScalarField Umzb = wirtinger(u1.U_minus, WirtingerKind::dzbar);

  PairingReport rep;
  Complex S(0, 0), qp(0, 0), ql(0, 0);
  double nu1 = 0, nv = 0;
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex dphi = u1.weight.deriv(z);
    const Complex Pv = u1.weight.value(z);
    const Complex ep = std::exp(tau * Pv);
    const Complex em = std::exp(tau * std::conj(Pv));
    const Complex du_z = ep * (Upz[i] + tau * dphi * u1.U_plus[i]) + em * Umz[i];
    const Complex du_zb = ep * Upzb[i] + em * (Umzb[i] + tau * std::conj(dphi) * u1.U_minus[i]);
    const Complex Ahat = L1.A[i] - L2.A[i], Bhat = L1.B[i] - L2.B[i];
    const Complex qhat = L1.q[i] - L2.q[i];
    const double area = mesh->lumped_area[std::size_t(i)];
    const Complex vbar = std::conj(v.assembled[i]);
    S += area * (2.0 * Ahat * du_z + 2.0 * Bhat * du_zb + qhat * u1.assembled[i]) * vbar;
    qp += area * qhat * u1.assembled[i] * vbar;
    // tau-free expansion term: a c-bar e^{A1 + conj(A2)} + d b-bar e^{B1 + conj(B2)}
    ql += area * qhat *
          (u1.a[i] * std::conj(v.d[i]) * std::exp(u1.pots.A_pot[i] + std::conj(v.pots.B_pot[i])) +
           u1.d[i] * std::conj(v.a[i]) * std::exp(u1.pots.B_pot[i] + std::conj(v.pots.A_pot[i])));
    nu1 += area * std::norm(u1.assembled[i]);
    nv += area * std::norm(v.assembled[i]);
  }
  rep.S = S;
  rep.normalized = std::abs(S) / std::max(std::sqrt(nu1) * std::sqrt(nv), 1e-300);
  rep.q_pairing = qp;
  rep.q_leading = ql;
  rep.q_rel_error = std::abs(qp - ql) / std::max(std::abs(ql), 1e-300);

  // forward solve of L2 matching u1's full Dirichlet trace
  DiscreteSystem sys2 = assemble(L2, part);
  ScalarField trace(mesh);
  for (int i = 0; i < n; ++i)
    if (mesh->is_boundary[std::size_t(i)]) trace[i] = u1.assembled[i];
  ScalarField u2 = sys2.solve_full_dirichlet(trace, ScalarField{});
  ScalarField con2 = sys2.weak_conormal(u2, ScalarField{});
  ScalarField d1f = derivative(u1.assembled, 1), d2f = derivative(u1.assembled, 2);
  ScalarField defect(mesh);
  ScalarField con1(mesh);
  for (int i : part.gamma_tilde_nodes()) {
    const Vec2 nu = part.nu(i);
    con1[i] = nu.x1 * d1f[i] + nu.x2 * d2f[i];
    defect[i] = con2[i] - con1[i];
  }
  const double denom = std::max(norm_l2_arc(con1, part, true), 1e-300);
  rep.cauchy_match_residual = norm_l2_arc(defect, part, true) / denom;
  if (rep.cauchy_match_residual > opts.match_tol)
    fail(Err::CauchyDataMismatch,
         "forward-matching Neumann defect " + std::to_string(rep.cauchy_match_residual));
  return rep;
}

}  // namespace cgo2d
