#include "cgo2d/cgo.hpp"

#include <cmath>

namespace cgo2d {

CoefficientSet adjoint_coefficients(const CoefficientSet& L) {
  if (!L.metric.is_identity()) fail(Err::MetricNotIdentity, "adjoint path requires metric I");
  CoefficientSet out = L;
  out.sources.reset();
  ScalarField Az = wirtinger(L.A, WirtingerKind::dz);
  ScalarField Bzb = wirtinger(L.B, WirtingerKind::dzbar);
  for (int i = 0; i < L.A.size(); ++i) {
    out.A[i] = -std::conj(L.B[i]);
    out.B[i] = -std::conj(L.A[i]);
    out.q[i] = std::conj(L.q[i] - 2.0 * Az[i] - 2.0 * Bzb[i]);
  }
  return out;
}

namespace {

ScalarField exp_of(const ScalarField& f, double sign = 1.0) {
  ScalarField r(f.mesh);
  for (int i = 0; i < f.size(); ++i) r[i] = std::exp(sign * f[i]);
  return r;
}

int nearest_node(const DomainMesh& mesh, Complex z) {
  int best = 0;
  double bd = 1e300;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double d = std::abs(to_complex(mesh.nodes[std::size_t(i)]) - z);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

// Taylor polynomial of f in the anti/holomorphic variable about x_t, built
// from stencil Wirtinger derivatives; kills dbar^k (f - M) at x_t for k <= K.
std::vector<Complex> taylor_subtraction(const ScalarField& f, Complex x_t, int K,
                                        WirtingerKind which) {
  std::vector<Complex> coeffs;
  const int node = nearest_node(*f.mesh, x_t);
  ScalarField cur = f;
  double fact = 1.0;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) {
      cur = wirtinger(cur, which);
      fact *= double(k);
    }
    coeffs.push_back(cur[node] / fact);
  }
  return coeffs;
}

Complex eval_taylor(const std::vector<Complex>& c, Complex w) {
  Complex acc(0, 0), p(1, 0);
  for (const auto& ck : c) {
    acc += ck * p;
    p *= w;
  }
  return acc;
}

double vanish_certificate(const ScalarField& g, Complex x_t, int K, WirtingerKind which) {
  const int node = nearest_node(*g.mesh, x_t);
  const double scale = std::max(sup_norm(g), 1e-300);
  ScalarField cur = g;
  double worst = 0;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) cur = wirtinger(cur, which);
    worst = std::max(worst, std::abs(cur[node]) / scale);
  }
  return worst;
}

}  // namespace

CorrectionSources build_correction_sources(const CoefficientSet& L,
                                           const AntiderivativePair& pots, const ScalarField& a,
                                           const ScalarField& d, const HolomorphicWeight& Phi,
                                           int vanish_order, bool poly_sources,
                                           int source_degree) {
  MeshPtr mesh = L.mesh();
  const int n = mesh->n_nodes();
  if (Phi.points.empty()) fail(Err::MissingCertificates, "weight has no certified critical points");

  ScalarField Az = wirtinger(L.A, WirtingerKind::dz);
  ScalarField Bzb = wirtinger(L.B, WirtingerKind::dzbar);
  ScalarField eA = exp_of(pots.A_pot), eB = exp_of(pots.B_pot);
  ScalarField eAm = exp_of(pots.A_pot, -1.0), eBm = exp_of(pots.B_pot, -1.0);

  ScalarField Sd(mesh), Sa(mesh);
  for (int i = 0; i < n; ++i) {
    Sd[i] = (L.q[i] - 2.0 * Bzb[i] - L.A[i] * L.B[i]) * d[i] * eB[i];
    Sa[i] = (L.q[i] - 2.0 * Az[i] - L.A[i] * L.B[i]) * a[i] * eA[i];
  }
  // h1 = e^{-B} T_B(Sd) = (1/2) dz^{-1}(e^{-B} Sd);  h2 similarly for P_A.
  // A polynomial antiderivative fit keeps (2 dz + B) g1 = Sd tight; the
  // dense-kernel transform route is kept for the raw operators.
  BoundaryPartition whole = make_partition(mesh, {{0.0, 2.0 * M_PI}});  // no Im pinning rows
  ScalarField h1, h2;
  if (poly_sources) {
    ScalarField F1(mesh), F2(mesh);
    for (int i = 0; i < n; ++i) {
      F1[i] = -eBm[i] * Sd[i];
      F2[i] = -eAm[i] * Sa[i];
    }
    h1 = polynomial_antiderivative(F1, whole, 1, source_degree).field;
    h2 = polynomial_antiderivative(F2, whole, 0, source_degree).field;
  } else {
    h1 = Complex(0.5) * cauchy_inverse(eBm * Sd, CauchyKind::dz_inv);
    h2 = Complex(0.5) * cauchy_inverse(eAm * Sa, CauchyKind::dzbar_inv);
  }

  CorrectionSources out;
  // expansion about the critical point farthest from the boundary
  Complex x_t = Phi.points.front().location;
  double best = -1;
  for (const auto& cp : Phi.points) {
    double dmin = 1e300;
    for (const auto& loop : mesh->boundary_loops)
      for (int bi : loop)
        dmin = std::min(dmin, std::abs(to_complex(mesh->nodes[std::size_t(bi)]) - cp.location));
    if (dmin > best) {
      best = dmin;
      x_t = cp.location;
    }
  }
  out.expansion_point = x_t;

  out.M2 = taylor_subtraction(h1, x_t, vanish_order, WirtingerKind::dzbar);
  out.M1 = taylor_subtraction(h2, x_t, vanish_order, WirtingerKind::dz);

  out.g1 = ScalarField(mesh);
  out.g2 = ScalarField(mesh);
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    out.g1[i] = (h1[i] - eval_taylor(out.M2, std::conj(z) - std::conj(x_t))) * eB[i];
    out.g2[i] = (h2[i] - eval_taylor(out.M1, z - x_t)) * eA[i];
  }
  out.vanish_res_g1 = vanish_certificate(out.g1, x_t, vanish_order, WirtingerKind::dzbar);
  out.vanish_res_g2 = vanish_certificate(out.g2, x_t, vanish_order, WirtingerKind::dz);
  return out;
}

namespace {

struct CutoffPair {
  ScalarField e1, e2;
};

CutoffPair make_cutoffs(MeshPtr mesh, Complex x_t, double r1, double r2) {
  CutoffPair c{ScalarField(mesh), ScalarField(mesh)};
  for (int i = 0; i < mesh->n_nodes(); ++i) {
    const double rho = std::abs(to_complex(mesh->nodes[std::size_t(i)]) - x_t);
    const double e2 = smoothstep5((rho - r1) / (r2 - r1));
    c.e2[i] = e2;
    c.e1[i] = 1.0 - e2;
  }
  return c;
}

double boundary_distance(const DomainMesh& mesh, Complex z) {
  double d = 1e300;
  for (const auto& loop : mesh.boundary_loops)
    for (int i : loop) d = std::min(d, std::abs(to_complex(mesh.nodes[std::size_t(i)]) - z));
  return d;
}

// derivative d^{jz} dbar^{jzb} of sum c_{j,k} z^j zbar^k (total degree D)
Complex eval2d(const std::vector<Complex>& c, int D, Complex z, int jz, int jzb) {
  Complex acc(0, 0);
  std::size_t idx = 0;
  for (int j = 0; j <= D; ++j)
    for (int k = 0; j + k <= D; ++k, ++idx) {
      if (j < jz || k < jzb) continue;
      double f = 1;
      for (int t = 0; t < jz; ++t) f *= double(j - t);
      for (int t = 0; t < jzb; ++t) f *= double(k - t);
      acc += c[idx] * f * ipow(z, j - jz) * ipow(std::conj(z), k - jzb);
    }
  return acc;
}

}  // namespace

CGOSolution assemble_cgo(const CoefficientSet& L, const HolomorphicWeight& Phi, double tau,
                         CGOOrder order, const BoundaryPartition& part, const CGOOptions& opts) {
  if (!L.metric.is_identity()) fail(Err::MetricNotIdentity, "CGO assembly requires metric I");
  MeshPtr mesh = L.mesh();
  require_oscillation_budget(Phi, mesh, tau);
  if (Phi.points.empty()) fail(Err::MissingCriticalPoint, "weight has no critical points");

  // classify critical points
  std::vector<Complex> interior, on_boundary;
  for (const auto& cp : Phi.points) {
    const double d = boundary_distance(*mesh, cp.location);
    (d > 2.0 * mesh->h ? interior : on_boundary).push_back(cp.location);
  }
  if (interior.size() != 1)
    fail(Err::MissingCriticalPoint,
         "desk-scale assembly expects exactly one interior critical point, found " +
             std::to_string(interior.size()));
  const Complex x_t = interior.front();

  const Complex iu(0, 1);
  const int n = mesh->n_nodes();

  CGOSolution sol;
  sol.tau = tau;
  sol.weight = Phi;
  sol.critical_point = x_t;
  sol.pots = antiderivative_pair(L.A, L.B, part, PotentialMethod::polynomial_ls,
                                 opts.potential_degree);

  std::vector<VanishingPoint> vp;
  for (Complex p : on_boundary) vp.push_back({p, 6});
  CRMatch amp = amplitude_with_vanishing(vp, x_t, sol.pots, part, opts.amplitude_degree);
  sol.a = amp.a;
  sol.d = amp.d;
  sol.boundary_relation_sup = amp.residual_sup;

  ScalarField eA = exp_of(sol.pots.A_pot), eB = exp_of(sol.pots.B_pot);

  // exact derivative fields of the polynomial potentials
  const int PD = sol.pots.poly_degree;
  ScalarField Az(mesh), Ab(mesh), Abz(mesh), Bz(mesh), Bb(mesh), Bbz(mesh), peA(mesh), peB(mesh);
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    Az[i] = eval2d(sol.pots.A_coeff, PD, z, 1, 0);
    Ab[i] = eval2d(sol.pots.A_coeff, PD, z, 0, 1);
    Abz[i] = eval2d(sol.pots.A_coeff, PD, z, 1, 1);
    Bz[i] = eval2d(sol.pots.B_coeff, PD, z, 1, 0);
    Bb[i] = eval2d(sol.pots.B_coeff, PD, z, 0, 1);
    Bbz[i] = eval2d(sol.pots.B_coeff, PD, z, 1, 1);
    peA[i] = 2.0 * Ab[i] + L.A[i];  // defining defect of the A potential
    peB[i] = 2.0 * Bz[i] + L.B[i];
  }

  // leading factors
  ScalarField Uplead(mesh), Umlead(mesh);
  for (int i = 0; i < n; ++i) {
    Uplead[i] = sol.a[i] * eA[i];
    Umlead[i] = sol.d[i] * eB[i];
  }

  ScalarField phi_vals(mesh), psi_vals(mesh), dphi(mesh);
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex v = Phi.value(z);
    phi_vals[i] = v.real();
    psi_vals[i] = v.imag();
    dphi[i] = Phi.deriv(z);
  }

  // Residual accumulators per phase group. Oscillatory exponentials, the
  // polynomial amplitudes/potentials, and the transform factors' defining
  // derivatives are all differentiated analytically; stencils are reserved
  // for genuinely sampled smooth fields.
  ScalarField Rp(mesh), Rm(mesh);

  // amplitude-part contribution a e^{A} + d e^{B}, differentiated exactly
  auto add_amplitude_part = [&](const std::vector<Complex>& ac, const std::vector<Complex>& dc,
                                double scale) {
    for (int i = 0; i < n; ++i) {
      const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
      const Complex av = eval_poly(ac, z), ap = eval_poly_deriv(ac, z, 1);
      const Complex dv = eval_poly(dc, std::conj(z)), ddp = eval_poly_deriv(dc, std::conj(z), 1);
      const Complex LP = eA[i] * (4.0 * (ap * Ab[i] + av * (Az[i] * Ab[i] + Abz[i])) +
                                  2.0 * L.A[i] * (ap + av * Az[i]) + 2.0 * L.B[i] * av * Ab[i] +
                                  L.q[i] * av);
      const Complex LQ = eB[i] * (4.0 * (ddp * Bz[i] + dv * (Bz[i] * Bb[i] + Bbz[i])) +
                                  2.0 * L.A[i] * dv * Bz[i] + 2.0 * L.B[i] * (ddp + dv * Bb[i]) +
                                  L.q[i] * dv);
      Rp[i] += scale * (LP + 2.0 * tau * dphi[i] * av * eA[i] * peA[i]);
      Rm[i] += scale * (LQ + 2.0 * tau * std::conj(dphi[i]) * dv * eB[i] * peB[i]);
    }
  };

  auto finish_residual = [&]() {
    double acc = 0;
    const double margin = 3.0 * mesh->h;
    for (int i = 0; i < n; ++i) {
      if (mesh->is_boundary[std::size_t(i)]) continue;
      if (boundary_distance(*mesh, to_complex(mesh->nodes[std::size_t(i)])) < margin) continue;
      const Complex val = Rp[i] * std::exp(iu * tau * psi_vals[i].real()) +
                          Rm[i] * std::exp(-iu * tau * psi_vals[i].real());
      acc += mesh->lumped_area[std::size_t(i)] * std::norm(val);
    }
    return std::sqrt(acc);
  };

  add_amplitude_part(amp.a_coeff, amp.d_coeff, 1.0);
  sol.residual_leading = finish_residual();
  sol.U_plus = Uplead;
  sol.U_minus = Umlead;

  if (order == CGOOrder::corrected) {
    auto src = build_correction_sources(L, sol.pots, sol.a, sol.d, Phi, opts.vanish_order,
                                        opts.poly_sources, opts.source_degree);
    sol.g1 = src.g1;
    sol.g2 = src.g2;
    sol.vanish_res_g1 = src.vanish_res_g1;
    sol.vanish_res_g2 = src.vanish_res_g2;

    // first-order amplitudes from the boundary relation on Gamma0
    ScalarField beta1(mesh);
    for (int i : part.gamma_zero_nodes()) {
      const Complex dp = dphi[i];
      if (std::abs(dp) < 1e-8) continue;  // vanishing sources cover these
      beta1[i] = sol.g1[i] / (2.0 * std::conj(dp)) + sol.g2[i] / (2.0 * dp);
    }
    CRMatch corr = cr_boundary_match(beta1, sol.pots, part, opts.correction_degree);
    sol.a1 = corr.a;
    sol.d1 = corr.d;

    const double dist = boundary_distance(*mesh, x_t);
    const double r1 = opts.cutoff_inner * dist, r2 = opts.cutoff_outer * dist;
    auto cut = make_cutoffs(mesh, x_t, r1, r2);

    // oscillatory transform factors; G = e1 g~ smooth
    ScalarField G1(mesh), G2(mesh), dens1(mesh), dens2(mesh), osc(mesh);
    for (int i = 0; i < n; ++i) {
      osc[i] = std::exp(iu * 2.0 * tau * psi_vals[i].real());
      G1[i] = cut.e1[i] * sol.g1[i] * std::exp(-sol.pots.A_pot[i]);
      G2[i] = cut.e1[i] * sol.g2[i] * std::exp(-sol.pots.B_pot[i]);
      dens1[i] = G1[i] * std::conj(osc[i]);
      dens2[i] = G2[i] * osc[i];
    }
    ScalarField W1 = cauchy_inverse(dens1, CauchyKind::dzbar_inv);
    ScalarField W2 = cauchy_inverse(dens2, CauchyKind::dz_inv);

    // semi-analytic residual of the transform parts P = -1/2 e^{A} W1 and
    // Q = -1/2 e^{B} W2: the defining identities dzbar W1 = dens1 and
    // dz W2 = dens2 replace stencil derivatives of the oscillatory fields
    ScalarField W1z = wirtinger(W1, WirtingerKind::dz);
    ScalarField W2b = wirtinger(W2, WirtingerKind::dzbar);
    ScalarField G1z = wirtinger(G1, WirtingerKind::dz);
    ScalarField G2b = wirtinger(G2, WirtingerKind::dzbar);
    for (int i = 0; i < n; ++i) {
      const Complex dp = dphi[i];
      {
        const Complex w = W1[i], rho = dens1[i];
        const Complex rho_z = (G1z[i] - tau * dp * G1[i]) * std::conj(osc[i]);
        const Complex dP_z = -0.5 * eA[i] * (Az[i] * w + W1z[i]);
        const Complex dP_zb = -0.5 * eA[i] * (Ab[i] * w + rho);
        const Complex dP_zzb =
            -0.5 * eA[i] *
            (Az[i] * (Ab[i] * w + rho) + Abz[i] * w + Ab[i] * W1z[i] + rho_z);
        const Complex P = -0.5 * eA[i] * w;
        const Complex L1P = 4.0 * dP_zzb + 2.0 * L.A[i] * dP_z + 2.0 * L.B[i] * dP_zb +
                            L.q[i] * P;
        Rp[i] += L1P + 2.0 * tau * dp * (-0.5 * eA[i]) * (peA[i] * w + 2.0 * rho);
      }
      {
        const Complex w = W2[i], rho = dens2[i];
        const Complex rho_zb = (G2b[i] - tau * std::conj(dp) * G2[i]) * osc[i];
        const Complex dQ_zb = -0.5 * eB[i] * (Bb[i] * w + W2b[i]);
        const Complex dQ_z = -0.5 * eB[i] * (Bz[i] * w + rho);
        const Complex dQ_zzb =
            -0.5 * eB[i] *
            (Bb[i] * (Bz[i] * w + rho) + Bbz[i] * w + Bz[i] * W2b[i] + rho_zb);
        const Complex Q = -0.5 * eB[i] * w;
        const Complex L1Q = 4.0 * dQ_zzb + 2.0 * L.A[i] * dQ_z + 2.0 * L.B[i] * dQ_zb +
                            L.q[i] * Q;
        Rm[i] += L1Q + 2.0 * tau * std::conj(dp) * (-0.5 * eB[i]) * (peB[i] * w + 2.0 * rho);
      }
    }

    // explicit collar terms (zero when the collar is disabled)
    ScalarField Ep(mesh), Em(mesh);
    bool any_collar = false;
    {
      ScalarField f1(mesh), f2(mesh);
      for (int i = 0; i < n; ++i) {
        if (cut.e2[i] == 0.0) continue;
        any_collar = true;
        f1[i] = cut.e2[i] * sol.g1[i] / std::conj(dphi[i]);
        f2[i] = cut.e2[i] * sol.g2[i] / dphi[i];
      }
      if (any_collar) {
        ScalarField Lf1 = apply_operator(L, f1);
        ScalarField Lf2 = apply_operator(L, f2);
        for (int i = 0; i < n; ++i) {
          const Complex dp = dphi[i];
          if (cut.e2[i] == 0.0) continue;
          Ep[i] = -cut.e2[i] * sol.g2[i] / (2.0 * tau * dp) +
                  Lf2[i] / (4.0 * tau * tau * dp);
          Em[i] = -cut.e2[i] * sol.g1[i] / (2.0 * tau * std::conj(dp)) +
                  Lf1[i] / (4.0 * tau * tau * std::conj(dp));
        }
        ScalarField lep = apply_operator(L, Ep), lem = apply_operator(L, Em);
        ScalarField ep_zb = wirtinger(Ep, WirtingerKind::dzbar);
        ScalarField em_z = wirtinger(Em, WirtingerKind::dz);
        for (int i = 0; i < n; ++i) {
          Rp[i] += lep[i] + 2.0 * tau * dphi[i] * (2.0 * ep_zb[i] + L.A[i] * Ep[i]);
          Rm[i] += lem[i] + 2.0 * tau * std::conj(dphi[i]) * (2.0 * em_z[i] + L.B[i] * Em[i]);
        }
      }
    }

    add_amplitude_part(corr.a_coeff, corr.d_coeff, 1.0 / tau);

    ScalarField Up = Uplead, Um = Umlead;
    for (int i = 0; i < n; ++i) {
      Up[i] += sol.a1[i] * eA[i] / tau - 0.5 * eA[i] * W1[i] + Ep[i];
      Um[i] += sol.d1[i] * eB[i] / tau - 0.5 * eB[i] * W2[i] + Em[i];
    }
    sol.U_plus = Up;
    sol.U_minus = Um;
    sol.residual_corrected = finish_residual();
  }

  sol.assembled = ScalarField(mesh);
  sol.u11 = ScalarField(mesh);
  for (int i = 0; i < n; ++i) {
    const double ph = phi_vals[i].real(), ps = psi_vals[i].real();
    const Complex ep = std::exp(Complex(tau * ph, tau * ps));
    const Complex em = std::exp(Complex(tau * ph, -tau * ps));
    sol.assembled[i] = sol.U_plus[i] * ep + sol.U_minus[i] * em;
    const Complex osc_p = std::exp(iu * tau * ps);
    sol.u11[i] = (sol.U_plus[i] - Uplead[i]) * osc_p +
                 (sol.U_minus[i] - Umlead[i]) * std::conj(osc_p);
  }
  return sol;
}

// The adjoint solution is the direct assembly for the adjoint coefficients at
// parameter -tau; sol.tau keeps the signed exponent actually used.
CGOSolution assemble_adjoint_cgo(const CoefficientSet& L2, const HolomorphicWeight& Phi,
                                 double tau, CGOOrder order, const BoundaryPartition& part,
                                 const CGOOptions& opts) {
  CoefficientSet Ls = adjoint_coefficients(L2);
  CGOSolution sol = assemble_cgo(Ls, Phi, -tau, order, part, opts);
  sol.adjoint = true;
  return sol;
}

double CGOSolution::weighted_sup() const {
  double m = 0;
  for (int i = 0; i < assembled.size(); ++i) {
    const Complex z = to_complex(assembled.mesh->nodes[std::size_t(i)]);
    m = std::max(m, std::abs(assembled[i]) * std::exp(-tau * weight.phi(z)));
  }
  return m;
}

}  // namespace cgo2d
