#include "cgo2d/operators.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace cgo2d {

Metric Metric::identity(MeshPtr m) {
  Metric g;
  g.kind = Kind::identity;
  g.mesh = std::move(m);
  return g;
}

Metric Metric::conformal(MeshPtr m, const std::vector<double>& mu) {
  Metric g;
  g.kind = Kind::conformal;
  g.mesh = std::move(m);
  g.mu = mu;
  g.require_elliptic();
  return g;
}

Metric Metric::general(MeshPtr m, std::vector<double> g11, std::vector<double> g12,
                       std::vector<double> g22) {
  Metric g;
  g.kind = Kind::general;
  g.mesh = std::move(m);
  g.g11 = std::move(g11);
  g.g12 = std::move(g12);
  g.g22 = std::move(g22);
  g.require_elliptic();
  return g;
}

std::array<double, 3> Metric::entries(int i) const {
  switch (kind) {
    case Kind::identity: return {1.0, 0.0, 1.0};
    case Kind::conformal: return {mu[std::size_t(i)], 0.0, mu[std::size_t(i)]};
    case Kind::general:
      return {g11[std::size_t(i)], g12[std::size_t(i)], g22[std::size_t(i)]};
  }
  return {1, 0, 1};
}

double Metric::sqrt_det(int i) const {
  const auto e = entries(i);
  return std::sqrt(e[0] * e[2] - e[1] * e[1]);
}

std::array<double, 3> Metric::weak_matrix(int i) const {
  if (kind == Kind::identity || kind == Kind::conformal) return {1.0, 0.0, 1.0};
  const auto e = entries(i);
  const double sd = std::sqrt(e[0] * e[2] - e[1] * e[1]);
  return {e[2] / sd, -e[1] / sd, e[0] / sd};
}

double Metric::ellipticity() const {
  if (kind == Kind::identity) return 1.0;
  double lo = 1e300;
  const int n = mesh->n_nodes();
  for (int i = 0; i < n; ++i) {
    const auto e = entries(i);
    const double tr = e[0] + e[2];
    const double det = e[0] * e[2] - e[1] * e[1];
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    lo = std::min(lo, 0.5 * (tr - disc));
  }
  return lo;
}

void Metric::require_elliptic(double alpha_min) const {
  const double lo = ellipticity();
  if (!(lo > alpha_min))
    fail(Err::EllipticityViolation,
         "metric eigenvalue " + std::to_string(lo) + " below " + std::to_string(alpha_min));
}

Metric Metric::scaled(const std::vector<double>& beta) const {
  const int n = mesh->n_nodes();
  Metric g;
  g.mesh = mesh;
  switch (kind) {
    case Kind::identity:
      g.kind = Kind::conformal;
      g.mu = beta;
      break;
    case Kind::conformal:
      g.kind = Kind::conformal;
      g.mu.resize(std::size_t(n));
      for (int i = 0; i < n; ++i) g.mu[std::size_t(i)] = mu[std::size_t(i)] * beta[std::size_t(i)];
      break;
    case Kind::general:
      g.kind = Kind::general;
      g.g11.resize(std::size_t(n));
      g.g12.resize(std::size_t(n));
      g.g22.resize(std::size_t(n));
      for (int i = 0; i < n; ++i) {
        g.g11[std::size_t(i)] = g11[std::size_t(i)] * beta[std::size_t(i)];
        g.g12[std::size_t(i)] = g12[std::size_t(i)] * beta[std::size_t(i)];
        g.g22[std::size_t(i)] = g22[std::size_t(i)] * beta[std::size_t(i)];
      }
      break;
  }
  g.require_elliptic();
  return g;
}

std::uint64_t CoefficientSet::hash() const {
  std::uint64_t h = A.mesh->hash();
  h = fnv1a(A.v.data(), A.v.size() * sizeof(Complex), h);
  h = fnv1a(B.v.data(), B.v.size() * sizeof(Complex), h);
  h = fnv1a(q.v.data(), q.v.size() * sizeof(Complex), h);
  if (metric.kind == Metric::Kind::conformal)
    h = fnv1a(metric.mu.data(), metric.mu.size() * sizeof(double), h);
  if (metric.kind == Metric::Kind::general) {
    h = fnv1a(metric.g11.data(), metric.g11.size() * sizeof(double), h);
    h = fnv1a(metric.g12.data(), metric.g12.size() * sizeof(double), h);
    h = fnv1a(metric.g22.data(), metric.g22.size() * sizeof(double), h);
  }
  return h;
}

CoefficientSet make_coefficients(MeshPtr mesh, const std::string& A, const std::string& B,
                                 const std::string& q, const std::string& metric_kind,
                                 const std::string& mu) {
  CoefficientSet L;
  L.A = evaluate(A, mesh);
  L.B = evaluate(B, mesh);
  L.q = evaluate(q, mesh);
  if (metric_kind == "identity") {
    L.metric = Metric::identity(mesh);
  } else if (metric_kind == "conformal") {
    ScalarField muf = evaluate(mu, mesh);
    std::vector<double> m(muf.v.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = muf.v[i].real();
    L.metric = Metric::conformal(mesh, m);
  } else {
    fail(Err::ConfigError, "metric kind '" + metric_kind + "' not expressible from text");
  }
  CoefficientSet::Sources s;
  s.metric_kind = metric_kind;
  s.mu = mu;
  s.A = A;
  s.B = B;
  s.q = q;
  L.sources = s;
  return L;
}

std::string CoefficientSet::to_json() const {
  if (!sources)
    fail(Err::ConfigError, "coefficient set has no expression sources to serialize");
  nlohmann::json j;
  j["metric"] = sources->metric_kind;
  if (!sources->mu.empty()) j["mu"] = sources->mu;
  j["A"] = sources->A;
  j["B"] = sources->B;
  j["q"] = sources->q;
  return j.dump();
}

CoefficientSet CoefficientSet::from_json(const std::string& text, MeshPtr mesh) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Err::ConfigError, "coefficient JSON parse failure");
  return make_coefficients(mesh, j.at("A"), j.at("B"), j.at("q"),
                           j.value("metric", "identity"), j.value("mu", ""));
}

ScalarField laplace_beltrami(const Metric& g, const ScalarField& u) {
  if (g.mesh->hash() != u.mesh->hash()) fail(Err::MeshMismatch, "metric/field mesh mismatch");
  g.require_elliptic();
  const int n = u.size();
  if (g.kind == Metric::Kind::identity || g.kind == Metric::Kind::conformal) {
    ScalarField lap = second_derivative(u, 1, 1) + second_derivative(u, 2, 2);
    if (g.kind == Metric::Kind::conformal)
      for (int i = 0; i < n; ++i) lap[i] /= g.mu[std::size_t(i)];
    return lap;
  }
  ScalarField u1 = derivative(u, 1), u2 = derivative(u, 2);
  ScalarField F1(u.mesh), F2(u.mesh);
  for (int i = 0; i < n; ++i) {
    const auto e = g.entries(i);
    const double sd = g.sqrt_det(i);
    const double i11 = e[2] / (sd * sd), i12 = -e[1] / (sd * sd), i22 = e[0] / (sd * sd);
    // sqrt(det g) g^{jk} du_j
    F1[i] = sd * (i11 * u1[i] + i12 * u2[i]);
    F2[i] = sd * (i12 * u1[i] + i22 * u2[i]);
  }
  ScalarField div = derivative(F1, 1) + derivative(F2, 2);
  for (int i = 0; i < n; ++i) div[i] /= g.sqrt_det(i);
  return div;
}

ScalarField apply_operator(const CoefficientSet& L, const ScalarField& u,
                           const DerivativeHints* hints) {
  check_same_mesh(L.A, u);
  const int n = u.size();
  ScalarField lap, uz, uzb;
  if (hints && hints->lap_u && hints->u_d1 && hints->u_d2) {
    if (L.metric.kind == Metric::Kind::general)
      fail(Err::ConfigError, "exact-derivative application supports identity/conformal metric");
    lap = *hints->lap_u;
    if (L.metric.kind == Metric::Kind::conformal)
      for (int i = 0; i < n; ++i) lap[i] /= L.metric.mu[std::size_t(i)];
    const Complex iu(0, 1);
    uz = ScalarField(u.mesh);
    uzb = ScalarField(u.mesh);
    for (int i = 0; i < n; ++i) {
      uz[i] = 0.5 * ((*hints->u_d1)[i] - iu * (*hints->u_d2)[i]);
      uzb[i] = 0.5 * ((*hints->u_d1)[i] + iu * (*hints->u_d2)[i]);
    }
  } else {
    lap = laplace_beltrami(L.metric, u);
    uz = wirtinger(u, WirtingerKind::dz);
    uzb = wirtinger(u, WirtingerKind::dzbar);
  }
  ScalarField r(u.mesh);
  for (int i = 0; i < n; ++i)
    r[i] = lap[i] + 2.0 * L.A[i] * uz[i] + 2.0 * L.B[i] * uzb[i] + L.q[i] * u[i];
  return r;
}

ScalarField conormal_derivative(const CoefficientSet& L, const ScalarField& u,
                                const BoundaryPartition& part) {
  check_same_mesh(L.A, u);
  ScalarField u1 = derivative(u, 1), u2 = derivative(u, 2);
  ScalarField r(u.mesh);
  for (int i = 0; i < u.size(); ++i) {
    if (!u.mesh->is_boundary[std::size_t(i)]) continue;
    const auto G = L.metric.weak_matrix(i);
    const Vec2 nu = part.nu(i);
    r[i] = nu.x1 * (G[0] * u1[i] + G[1] * u2[i]) + nu.x2 * (G[1] * u1[i] + G[2] * u2[i]);
  }
  return r;
}

namespace {
void require_real(const ScalarField& f, const char* name) {
  double scale = std::max(1.0, sup_norm(f));
  for (const auto& x : f.v)
    if (std::abs(x.imag()) > 1e-13 * scale)
      fail(Err::NonRealVectorField, std::string(name) + " has a nonzero imaginary part");
}
}  // namespace

MagneticExpansion magnetic_expand(const MagneticData& m) {
  require_real(m.A1t, "A1t");
  require_real(m.A2t, "A2t");
  auto mesh = m.A1t.mesh;
  const int n = m.A1t.size();
  const Complex iu(0, 1);

  ScalarField a1_1, a1_2, a2_1, a2_2;
  if (m.dA1_d1 && m.dA1_d2 && m.dA2_d1 && m.dA2_d2) {
    a1_1 = *m.dA1_d1;
    a1_2 = *m.dA1_d2;
    a2_1 = *m.dA2_d1;
    a2_2 = *m.dA2_d2;
  } else {
    a1_1 = derivative(m.A1t, 1);
    a1_2 = derivative(m.A1t, 2);
    a2_1 = derivative(m.A2t, 1);
    a2_2 = derivative(m.A2t, 2);
  }

  MagneticExpansion out{CoefficientSet{}, ScalarField(mesh)};
  out.L.metric = Metric::identity(mesh);
  out.L.A = ScalarField(mesh);
  out.L.B = ScalarField(mesh);
  out.L.q = ScalarField(mesh);
  for (int i = 0; i < n; ++i) {
    const double A1 = m.A1t[i].real(), A2 = m.A2t[i].real();
    out.rot[i] = a2_1[i] - a1_2[i];
    out.L.A[i] = iu * Complex(A1, A2);   // -(1/i) conj(calA),  calA = A1 - i A2
    out.L.B[i] = iu * Complex(A1, -A2);  // -(1/i) calA
    // dz of conj(calA) = dz(A1 + i A2)
    const Complex dz_conj = 0.5 * ((a1_1[i] + iu * a2_1[i]) - iu * (a1_2[i] + iu * a2_2[i]));
    const Complex rot = out.rot[i];
    out.L.q[i] = -((2.0 / iu) * dz_conj - rot + (A1 * A1 + A2 * A2) + m.q_t[i]);
  }
  return out;
}

ScalarField magnetic_apply(const MagneticData& m, const ScalarField& u,
                           const DerivativeHints* hints) {
  require_real(m.A1t, "A1t");
  require_real(m.A2t, "A2t");
  const int n = u.size();
  const Complex iu(0, 1);
  ScalarField lap, u1, u2;
  if (hints && hints->lap_u && hints->u_d1 && hints->u_d2) {
    lap = *hints->lap_u;
    u1 = *hints->u_d1;
    u2 = *hints->u_d2;
  } else {
    lap = second_derivative(u, 1, 1) + second_derivative(u, 2, 2);
    u1 = derivative(u, 1);
    u2 = derivative(u, 2);
  }
  ScalarField a1_1, a2_2;
  if (m.dA1_d1 && m.dA2_d2) {
    a1_1 = *m.dA1_d1;
    a2_2 = *m.dA2_d2;
  } else {
    a1_1 = derivative(m.A1t, 1);
    a2_2 = derivative(m.A2t, 2);
  }
  ScalarField r(u.mesh);
  for (int i = 0; i < n; ++i) {
    const double A1 = m.A1t[i].real(), A2 = m.A2t[i].real();
    r[i] = -lap[i] + (2.0 / iu) * (A1 * u1[i] + A2 * u2[i]) +
           ((A1 * A1 + A2 * A2) + (1.0 / iu) * (a1_1[i] + a2_2[i]) + m.q_t[i]) * u[i];
  }
  return r;
}

CoefficientSet convection_to_wirtinger(const ScalarField& a, const ScalarField& b,
                                       const ScalarField& q) {
  check_same_mesh(a, b);
  check_same_mesh(a, q);
  CoefficientSet L;
  L.metric = Metric::identity(a.mesh);
  L.A = ScalarField(a.mesh);
  L.B = ScalarField(a.mesh);
  L.q = q;
  const Complex iu(0, 1);
  for (int i = 0; i < a.size(); ++i) {
    L.A[i] = 0.5 * (a[i] + iu * b[i]);
    L.B[i] = 0.5 * (a[i] - iu * b[i]);
  }
  return L;
}

FactorizationReport verify_factorization(const CoefficientSet& L, const ScalarField& u) {
  if (!L.metric.is_identity()) fail(Err::MetricNotIdentity, "factorization requires metric I");
  const int n = u.size();
  ScalarField direct = apply_operator(L, u);

  ScalarField A_z = wirtinger(L.A, WirtingerKind::dz);
  ScalarField B_zb = wirtinger(L.B, WirtingerKind::dzbar);

  // (2dz + B)(2dzbar + A)u + (q - 2 dz A - A B) u
  ScalarField inner1(u.mesh), inner2(u.mesh);
  ScalarField uz = wirtinger(u, WirtingerKind::dz);
  ScalarField uzb = wirtinger(u, WirtingerKind::dzbar);
  for (int i = 0; i < n; ++i) {
    inner1[i] = 2.0 * uzb[i] + L.A[i] * u[i];
    inner2[i] = 2.0 * uz[i] + L.B[i] * u[i];
  }
  ScalarField d1 = wirtinger(inner1, WirtingerKind::dz);
  ScalarField d2 = wirtinger(inner2, WirtingerKind::dzbar);
  ScalarField f1(u.mesh), f2(u.mesh);
  for (int i = 0; i < n; ++i) {
    f1[i] = 2.0 * d1[i] + L.B[i] * inner1[i] + (L.q[i] - 2.0 * A_z[i] - L.A[i] * L.B[i]) * u[i];
    f2[i] = 2.0 * d2[i] + L.A[i] * inner2[i] + (L.q[i] - 2.0 * B_zb[i] - L.A[i] * L.B[i]) * u[i];
  }

  FactorizationReport rep;
  for (int i = 0; i < n; ++i) {
    if (u.mesh->is_boundary[std::size_t(i)]) continue;
    rep.direct_vs_first = std::max(rep.direct_vs_first, std::abs(direct[i] - f1[i]));
    rep.direct_vs_second = std::max(rep.direct_vs_second, std::abs(direct[i] - f2[i]));
    rep.max_discrepancy = std::max({rep.max_discrepancy, std::abs(direct[i] - f1[i]),
                                    std::abs(direct[i] - f2[i]), std::abs(f1[i] - f2[i])});
  }
  return rep;
}

}  // namespace cgo2d
