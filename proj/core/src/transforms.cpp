#include "cgo2d/transforms.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace cgo2d {

ScalarField TransformKernel::apply(const ScalarField& g) const {
  if (mesh->hash() != g.mesh->hash()) fail(Err::MeshMismatch, "kernel/field mesh mismatch");
  const int n = g.size();
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<Complex> wg(un), zs(un);
  for (int j = 0; j < n; ++j) wg[std::size_t(j)] = mesh->lumped_area[std::size_t(j)] * g[j];
  for (int j = 0; j < n; ++j) zs[std::size_t(j)] = to_complex(mesh->nodes[std::size_t(j)]);

  ScalarField r(g.mesh);
  const double c = -1.0 / M_PI;
  if (kind == CauchyKind::dzbar_inv) {
    for (int i = 0; i < n; ++i) {
      const Complex zi = zs[std::size_t(i)];
      Complex acc(0, 0);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += wg[std::size_t(j)] / (zs[std::size_t(j)] - zi);
      }
      r[i] = c * acc;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const Complex zi = std::conj(zs[std::size_t(i)]);
      Complex acc(0, 0);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += wg[std::size_t(j)] / (std::conj(zs[std::size_t(j)]) - zi);
      }
      r[i] = c * acc;
    }
  }
  return r;
}

Complex TransformKernel::apply_at(const ScalarField& g, const Vec2& target) const {
  const int n = g.size();
  const Complex zt = to_complex(target);
  Complex acc(0, 0);
  const double cell_radius = 0.35 * mesh->h;
  for (int j = 0; j < n; ++j) {
    const Complex zj = to_complex(mesh->nodes[std::size_t(j)]);
    const Complex den = kind == CauchyKind::dzbar_inv ? zj - zt : std::conj(zj) - std::conj(zt);
    if (std::abs(den) < cell_radius) continue;  // singular-cell rule
    acc += mesh->lumped_area[std::size_t(j)] * g[j] / den;
  }
  return -acc / M_PI;
}

ScalarField cauchy_inverse(const ScalarField& g, CauchyKind kind) {
  TransformKernel k{g.mesh, kind};
  return k.apply(g);
}

Complex AntiderivativePair::eval_A(Complex z) const {
  if (!has_poly()) fail(Err::ConfigError, "antiderivative pair has no polynomial form");
  Complex acc(0, 0);
  std::size_t idx = 0;
  for (int j = 0; j + 0 <= poly_degree; ++j)
    for (int k = 0; j + k <= poly_degree; ++k, ++idx)
      acc += A_coeff[idx] * ipow(z, j) * ipow(std::conj(z), k);
  return acc;
}

Complex AntiderivativePair::eval_B(Complex z) const {
  if (!has_poly()) fail(Err::ConfigError, "antiderivative pair has no polynomial form");
  Complex acc(0, 0);
  std::size_t idx = 0;
  for (int j = 0; j + 0 <= poly_degree; ++j)
    for (int k = 0; j + k <= poly_degree; ++k, ++idx)
      acc += B_coeff[idx] * ipow(z, j) * ipow(std::conj(z), k);
  return acc;
}

Complex AntiderivativePair::eval_A_dz(Complex z) const {
  if (!has_poly()) fail(Err::ConfigError, "antiderivative pair has no polynomial form");
  Complex acc(0, 0);
  std::size_t idx = 0;
  for (int j = 0; j + 0 <= poly_degree; ++j)
    for (int k = 0; j + k <= poly_degree; ++k, ++idx)
      if (j > 0) acc += A_coeff[idx] * double(j) * ipow(z, j - 1) * ipow(std::conj(z), k);
  return acc;
}

Complex AntiderivativePair::eval_B_dzbar(Complex z) const {
  if (!has_poly()) fail(Err::ConfigError, "antiderivative pair has no polynomial form");
  Complex acc(0, 0);
  std::size_t idx = 0;
  for (int j = 0; j + 0 <= poly_degree; ++j)
    for (int k = 0; j + k <= poly_degree; ++k, ++idx)
      if (k > 0) acc += B_coeff[idx] * double(k) * ipow(z, j) * ipow(std::conj(z), k - 1);
  return acc;
}

namespace {

// Holomorphic (power == +1) or antiholomorphic (power == -1) polynomial
// correction h with Im(f0 + h) minimized on Gamma0 in the weighted L2 sense.
std::vector<Complex> fit_im_correction(const ScalarField& f0, const BoundaryPartition& part,
                                       int degree, int power, double ridge = 1e-12) {
  auto g0 = part.gamma_zero_nodes();
  const int m = degree + 1;
  Eigen::MatrixXd At(2 * m, 2 * m);
  Eigen::VectorXd rhs(2 * m);
  At.setZero();
  rhs.setZero();
  for (int i : g0) {
    const double w = part.mesh->boundary_weight[std::size_t(i)];
    Complex zp = to_complex(part.mesh->nodes[std::size_t(i)]);
    if (power < 0) zp = std::conj(zp);
    Eigen::VectorXd row(2 * m);
    Complex zk(1, 0);
    for (int k = 0; k < m; ++k) {
      row(2 * k) = zk.imag();      // Im(alpha z^k)
      row(2 * k + 1) = zk.real();  // Im(i beta z^k)
      zk *= zp;
    }
    const double target = -f0[i].imag();
    At.noalias() += w * row * row.transpose();
    rhs.noalias() += w * target * row;
  }
  At.diagonal().array() += ridge;
  Eigen::VectorXd sol = At.ldlt().solve(rhs);
  std::vector<Complex> c(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) c[std::size_t(k)] = Complex(sol(2 * k), sol(2 * k + 1));
  return c;
}

ScalarField eval_poly_1d(MeshPtr mesh, const std::vector<Complex>& c, int power) {
  ScalarField f(mesh);
  for (int i = 0; i < f.size(); ++i) {
    Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    if (power < 0) z = std::conj(z);
    Complex acc(0, 0), zk(1, 0);
    for (const auto& ck : c) {
      acc += ck * zk;
      zk *= z;
    }
    f[i] = acc;
  }
  return f;
}

// Least-squares polynomial P (total degree D in z, zbar) with
// 2 d P = -F (d = dzbar for which==0, dz for which==1) and Im P ~ 0 on Gamma0.
// Rows are assembled in blocks so the normal equations build with gemm.
std::vector<Complex> fit_potential_poly(const ScalarField& F, const BoundaryPartition& part,
                                        int which, int D) {
  MeshPtr mesh = F.mesh;
  const int n = F.size();
  const int M = (D + 1) * (D + 2) / 2;
  std::vector<std::pair<int, int>> mono;
  mono.reserve(std::size_t(M));
  for (int j = 0; j <= D; ++j)
    for (int k = 0; j + k <= D; ++k) mono.push_back({j, k});

  Eigen::MatrixXd AtA = Eigen::MatrixXd::Zero(2 * M, 2 * M);
  Eigen::VectorXd Atb = Eigen::VectorXd::Zero(2 * M);

  const int block = 256;
  Eigen::MatrixXd rows(2 * block, 2 * M);
  Eigen::VectorXd rhs(2 * block);
  int fill = 0;
  auto flush = [&]() {
    if (fill == 0) return;
    const auto Rb = rows.topRows(fill);
    AtA.noalias() += Rb.transpose() * Rb;
    Atb.noalias() += Rb.transpose() * rhs.head(fill);
    fill = 0;
  };
  auto push_complex_row = [&](const Complex* basis, Complex target, double w) {
    const double sw = std::sqrt(w);
    for (int t = 0; t < M; ++t) {
      const Complex b = sw * basis[t];
      rows(fill, 2 * t) = b.real();
      rows(fill, 2 * t + 1) = -b.imag();
      rows(fill + 1, 2 * t) = b.imag();
      rows(fill + 1, 2 * t + 1) = b.real();
    }
    rhs(fill) = sw * target.real();
    rhs(fill + 1) = sw * target.imag();
    fill += 2;
    if (fill == 2 * block) flush();
  };

  std::vector<Complex> basis(static_cast<std::size_t>(M));
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex zb = std::conj(z);
    for (int t = 0; t < M; ++t) {
      const auto [j, k] = mono[std::size_t(t)];
      if (which == 0)  // 2 dzbar (z^j zbar^k) = 2k z^j zbar^{k-1}
        basis[std::size_t(t)] = k > 0 ? 2.0 * double(k) * ipow(z, j) * ipow(zb, k - 1) : Complex(0, 0);
      else
        basis[std::size_t(t)] = j > 0 ? 2.0 * double(j) * ipow(z, j - 1) * ipow(zb, k) : Complex(0, 0);
    }
    push_complex_row(basis.data(), -F[i], mesh->lumped_area[std::size_t(i)]);
  }
  // Im P = 0 on Gamma0 (one real row per node), weighted to dominate
  const double wb = 10.0;
  for (int i : part.gamma_zero_nodes()) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex zb = std::conj(z);
    const double sw = std::sqrt(wb * mesh->boundary_weight[std::size_t(i)]);
    for (int t = 0; t < M; ++t) {
      const auto [j, k] = mono[std::size_t(t)];
      const Complex b = ipow(z, j) * ipow(zb, k);
      rows(fill, 2 * t) = sw * b.imag();   // Im((x+iy) b) = x Im b + y Re b
      rows(fill, 2 * t + 1) = sw * b.real();
    }
    rhs(fill) = 0.0;
    fill += 1;
    if (fill >= 2 * block - 1) flush();
  }
  flush();

  AtA.diagonal().array() += 1e-12;
  Eigen::VectorXd sol = AtA.ldlt().solve(Atb);
  std::vector<Complex> c(static_cast<std::size_t>(M));
  for (int t = 0; t < M; ++t) c[std::size_t(t)] = Complex(sol(2 * t), sol(2 * t + 1));
  return c;
}

ScalarField eval_poly_2d(MeshPtr mesh, const std::vector<Complex>& c, int D) {
  ScalarField f(mesh);
  for (int i = 0; i < f.size(); ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex zb = std::conj(z);
    Complex acc(0, 0);
    std::size_t idx = 0;
    for (int j = 0; j <= D; ++j)
      for (int k = 0; j + k <= D; ++k, ++idx) acc += c[idx] * ipow(z, j) * ipow(zb, k);
    f[i] = acc;
  }
  return f;
}

}  // namespace

PolyAntiderivative polynomial_antiderivative(const ScalarField& F, const BoundaryPartition& part,
                                             int which, int degree) {
  PolyAntiderivative out;
  out.degree = degree;
  out.coeff = fit_potential_poly(F, part, which, degree);
  out.field = eval_poly_2d(F.mesh, out.coeff, degree);
  return out;
}

AntiderivativePair antiderivative_pair(const ScalarField& A, const ScalarField& B,
                                       const BoundaryPartition& part, PotentialMethod method,
                                       int degree) {
  check_same_mesh(A, B);
  MeshPtr mesh = A.mesh;
  AntiderivativePair pair;

  if (method == PotentialMethod::transform) {
    ScalarField A0 = -0.5 * cauchy_inverse(A, CauchyKind::dzbar_inv);
    ScalarField B0 = -0.5 * cauchy_inverse(B, CauchyKind::dz_inv);
    auto ca = fit_im_correction(A0, part, degree, +1);
    auto cb = fit_im_correction(B0, part, degree, -1);
    pair.A_pot = A0 + eval_poly_1d(mesh, ca, +1);
    pair.B_pot = B0 + eval_poly_1d(mesh, cb, -1);
  } else {
    auto ca = fit_potential_poly(A, part, 0, degree);
    auto cb = fit_potential_poly(B, part, 1, degree);
    pair.A_pot = eval_poly_2d(mesh, ca, degree);
    pair.B_pot = eval_poly_2d(mesh, cb, degree);
    pair.poly_degree = degree;
    pair.A_coeff = std::move(ca);
    pair.B_coeff = std::move(cb);
  }

  for (int i : part.gamma_zero_nodes())
    pair.im_residual_on_gamma0 = std::max(
        {pair.im_residual_on_gamma0, std::abs(pair.A_pot[i].imag()), std::abs(pair.B_pot[i].imag())});

  ScalarField resA = 2.0 * ScalarField(wirtinger(pair.A_pot, WirtingerKind::dzbar)) + A;
  ScalarField resB = 2.0 * ScalarField(wirtinger(pair.B_pot, WirtingerKind::dz)) + B;
  pair.pde_residual_A = sup_norm_interior(resA);
  pair.pde_residual_B = sup_norm_interior(resB);

  const double scale = std::max(sup_norm(A), sup_norm(B));
  if (scale > 0 && pair.im_residual_on_gamma0 > 1e-6 * std::max(1.0, scale) &&
      method == PotentialMethod::transform) {
    // only the boundary matching is a hard contract; the interior residual
    // is the transform's discretization error
    fail(Err::CorrectionFailure,
         "Im residual on Gamma0 = " + std::to_string(pair.im_residual_on_gamma0));
  }
  return pair;
}

namespace {
ScalarField exp_field(const ScalarField& f, double sign) {
  ScalarField r(f.mesh);
  for (int i = 0; i < f.size(); ++i) r[i] = std::exp(sign * f[i]);
  return r;
}
}  // namespace

// The 1/2 makes these exact right inverses: (2 dz + B) T_B g = g and
// (2 dzbar + A) P_A g = g with the standard Cauchy kernels.
ScalarField conjugated_inverse(const ScalarField& g, const AntiderivativePair& pot,
                               ConjugatedKind kind) {
  if (kind == ConjugatedKind::T_B) {
    ScalarField inner = exp_field(pot.B_pot, -1.0) * g;
    return Complex(0.5) * (exp_field(pot.B_pot, +1.0) * cauchy_inverse(inner, CauchyKind::dz_inv));
  }
  ScalarField inner = exp_field(pot.A_pot, -1.0) * g;
  return Complex(0.5) * (exp_field(pot.A_pot, +1.0) * cauchy_inverse(inner, CauchyKind::dzbar_inv));
}

void require_oscillation_budget(const HolomorphicWeight& Phi, MeshPtr mesh, double tau) {
  double max_grad = 0;
  for (const auto& p : mesh->nodes) max_grad = std::max(max_grad, std::abs(Phi.deriv(to_complex(p))));
  if (std::abs(tau) * max_grad * mesh->h > 0.5)
    fail(Err::OscillationUnresolved,
         "tau=" + std::to_string(tau) + " exceeds budget |tau|*max|grad psi|*h = " +
             std::to_string(std::abs(tau) * max_grad * mesh->h) + " > 0.5");
}

ScalarField r_tau(const ScalarField& g, const AntiderivativePair& pot,
                  const HolomorphicWeight& Phi, double tau, RTauKind kind) {
  require_oscillation_budget(Phi, g.mesh, tau);
  MeshPtr mesh = g.mesh;
  const int n = g.size();
  ScalarField osc(mesh);  // e^{tau(Phi - conj Phi)} = e^{2 i tau psi}
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    osc[i] = std::exp(Complex(0, 2.0 * tau * Phi.psi(z)));
  }
  const ScalarField& pot_field = (kind == RTauKind::R_tauA) ? pot.A_pot : pot.B_pot;
  ScalarField inner(mesh);
  for (int i = 0; i < n; ++i) inner[i] = g[i] * std::exp(-pot_field[i]) * osc[i];
  ScalarField w = cauchy_inverse(
      inner, kind == RTauKind::R_tauA ? CauchyKind::dzbar_inv : CauchyKind::dz_inv);
  ScalarField r(mesh);
  for (int i = 0; i < n; ++i)
    r[i] = 0.5 * std::exp(pot_field[i]) * std::conj(osc[i]) * w[i];
  return r;
}

EnergyIdentityReport verify_energy_identity(const ScalarField& v, const ScalarField& C_field,
                                            const HolomorphicWeight& Phi, double tau,
                                            EnergyVariant variant,
                                            const BoundaryPartition& part) {
  MeshPtr mesh = v.mesh;
  const int n = v.size();
  const Complex iu(0, 1);

  ScalarField v1 = derivative(v, 1), v2 = derivative(v, 2);
  ScalarField C1(mesh), C2(mesh);
  for (int i = 0; i < n; ++i) {
    C1[i] = C_field[i].real();
    C2[i] = C_field[i].imag();
  }
  ScalarField dC1 = derivative(C1, 1), dC2 = derivative(C2, 2);

  EnergyIdentityReport rep;
  ScalarField f(mesh), g1(mesh), g2(mesh), bw(mesh), rot(mesh), divf(mesh);
  for (int i = 0; i < n; ++i) {
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Complex phase = (variant == EnergyVariant::vika1) ? Phi.deriv(z) : std::conj(Phi.deriv(z));
    const Complex vz = 0.5 * (v1[i] - iu * v2[i]);
    const Complex vzb = 0.5 * (v1[i] + iu * v2[i]);
    f[i] = (variant == EnergyVariant::vika1)
               ? 2.0 * vz - tau * phase * v[i] + C_field[i] * v[i]
               : 2.0 * vzb - tau * phase * v[i] + C_field[i] * v[i];
    const Complex m = tau * phase - C_field[i];
    g1[i] = v1[i] - iu * m.imag() * v[i];
    g2[i] = (variant == EnergyVariant::vika1) ? Complex(iu * v2[i] - m.real() * v[i])
                                              : Complex(-iu * v2[i] - m.real() * v[i]);
    divf[i] = (variant == EnergyVariant::vika1) ? dC1[i] + dC2[i] : dC1[i] - dC2[i];
  }
  // -1/i d2 v = i d2 v ... keep the two squared norms as written
  for (int i = 0; i < n; ++i) {
    if (!mesh->is_boundary[std::size_t(i)]) continue;
    const Complex z = to_complex(mesh->nodes[std::size_t(i)]);
    const Vec2 nu = part.nu(i);
    const Complex dphi = Phi.deriv(z);
    const double grad_phi_nu = dphi.real() * nu.x1 - dphi.imag() * nu.x2;
    const double cn = (variant == EnergyVariant::vika1)
                          ? nu.x1 * C1[i].real() + nu.x2 * C2[i].real()
                          : nu.x1 * C1[i].real() - nu.x2 * C2[i].real();
    bw[i] = (tau * grad_phi_nu - cn) * std::norm(v[i]);
    const Complex dtan = nu.x2 * v1[i] - nu.x1 * v2[i];
    const Complex term = (variant == EnergyVariant::vika1) ? iu * dtan * std::conj(v[i])
                                                           : -iu * dtan * std::conj(v[i]);
    rot[i] = term.real();
  }

  ScalarField g1sq(mesh), g2sq(mesh), dsq(mesh);
  for (int i = 0; i < n; ++i) {
    g1sq[i] = std::norm(g1[i]);
    g2sq[i] = std::norm(g2[i]);
    dsq[i] = divf[i].real() * std::norm(v[i]);
  }
  rep.grad1_sq = integrate(g1sq).real();
  rep.grad2_sq = integrate(g2sq).real();
  rep.divergence = -integrate(dsq).real();
  rep.boundary_weight = -integrate_boundary(bw).real();
  rep.rotation = integrate_boundary(rot).real();
  ScalarField fsq(mesh);
  for (int i = 0; i < n; ++i) fsq[i] = std::norm(f[i]);
  rep.rhs = integrate(fsq).real();
  rep.lhs = rep.grad1_sq + rep.grad2_sq + rep.divergence + rep.boundary_weight + rep.rotation;
  rep.relative_gap = std::abs(rep.lhs - rep.rhs) / std::max(rep.rhs, 1e-300);
  return rep;
}

}  // namespace cgo2d
