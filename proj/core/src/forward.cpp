#include "cgo2d/forward.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cgo2d/rng.hpp"

namespace cgo2d {

struct DiscreteSystem::Impl {
  Eigen::SparseMatrix<Complex> mat;
  Eigen::SparseMatrix<Complex> stiffness;
  std::vector<double> w;  // lumped volume weight per node
  ScalarField A, B, q;
  bool has_lower = true;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  bool lu_ok = false;
};

namespace {

// P1 gradients: grad phi_a = (b_a, c_a) / (2 area)
void p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2, double area, double bb[3],
                  double cc[3]) {
  bb[0] = p1.x2 - p2.x2;
  bb[1] = p2.x2 - p0.x2;
  bb[2] = p0.x2 - p1.x2;
  cc[0] = p2.x1 - p1.x1;
  cc[1] = p0.x1 - p2.x1;
  cc[2] = p1.x1 - p0.x1;
  for (int a = 0; a < 3; ++a) {
    bb[a] /= 2.0 * area;
    cc[a] /= 2.0 * area;
  }
}

Eigen::SparseMatrix<Complex> assemble_stiffness(const DomainMesh& mesh,
                                                std::function<std::array<double, 3>(int cell)> Gc) {
  const int n = mesh.n_nodes();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(mesh.cells.size() * 9);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& t = mesh.cells[std::size_t(c)];
    const Vec2 &p0 = mesh.nodes[std::size_t(t[0])], &p1 = mesh.nodes[std::size_t(t[1])],
               &p2 = mesh.nodes[std::size_t(t[2])];
    const double area = mesh.cell_area[std::size_t(c)];
    double bb[3], cc[3];
    p1_gradients(p0, p1, p2, area, bb, cc);
    const auto G = Gc(c);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double k = area * (G[0] * bb[a] * bb[b] + G[1] * (bb[a] * cc[b] + cc[a] * bb[b]) +
                                 G[2] * cc[a] * cc[b]);
        trips.emplace_back(t[a], t[b], Complex(k, 0));
      }
  }
  Eigen::SparseMatrix<Complex> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

void estimate_condition(DiscreteSystem& sys) {
  const auto& impl = *sys.impl;
  if (!impl.lu_ok) return;
  const int n = impl.mat.rows();
  // ||A||_inf
  std::vector<double> rowsum(std::size_t(n), 0.0);
  for (int k = 0; k < impl.mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(impl.mat, k); it; ++it)
      rowsum[std::size_t(it.row())] += std::abs(it.value());
  double norm_a = 0;
  for (double r : rowsum) norm_a = std::max(norm_a, r);
  // ||A^{-1}|| probe
  SplitMix64 rng(0x5eedULL);
  double norm_inv = 0;
  for (int probe = 0; probe < 3; ++probe) {
    Eigen::VectorXcd r(n);
    for (int i = 0; i < n; ++i) r(i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXcd x = impl.lu.solve(r);
    norm_inv = std::max(norm_inv, x.lpNorm<Eigen::Infinity>() / r.lpNorm<Eigen::Infinity>());
  }
  sys.condition_estimate = norm_a * norm_inv;
  sys.near_singular = sys.condition_estimate > 1e12;
}

Complex lower_order_at(const DiscreteSystem::Impl& impl, const DomainMesh& mesh,
                       const ScalarField& u, int i) {
  const NodeStencil& st = mesh.stencil[std::size_t(i)];
  Complex d1(0, 0), d2(0, 0);
  for (std::size_t k = 0; k < st.nbr.size(); ++k) {
    d1 += st.d1[k] * u[st.nbr[k]];
    d2 += st.d2[k] * u[st.nbr[k]];
  }
  const Complex iu(0, 1);
  const Complex uz = 0.5 * (d1 - iu * d2), uzb = 0.5 * (d1 + iu * d2);
  return 2.0 * impl.A[i] * uz + 2.0 * impl.B[i] * uzb + impl.q[i] * u[i];
}

}  // namespace

DiscreteSystem assemble(const CoefficientSet& L, const BoundaryPartition& part) {
  MeshPtr mesh = L.mesh();
  if (mesh->hash() != part.mesh->hash()) fail(Err::MeshMismatch, "operator/partition mismatch");
  L.metric.require_elliptic();
  const int n = mesh->n_nodes();

  auto impl = std::make_shared<DiscreteSystem::Impl>();
  impl->A = L.A;
  impl->B = L.B;
  impl->q = L.q;

  // cell metric from vertex-averaged entries
  impl->stiffness = assemble_stiffness(*mesh, [&](int c) -> std::array<double, 3> {
    if (L.metric.kind != Metric::Kind::general) return {1.0, 0.0, 1.0};
    const auto& t = mesh->cells[std::size_t(c)];
    double g11 = 0, g12 = 0, g22 = 0;
    for (int v : t) {
      const auto e = L.metric.entries(v);
      g11 += e[0] / 3.0;
      g12 += e[1] / 3.0;
      g22 += e[2] / 3.0;
    }
    const double sd = std::sqrt(g11 * g22 - g12 * g12);
    if (!(sd > 0)) fail(Err::SingularPrincipalPart, "cell metric not positive definite");
    return {g22 / sd, -g12 / sd, g11 / sd};
  });

  impl->w.assign(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    impl->w[std::size_t(i)] = mesh->lumped_area[std::size_t(i)] * L.metric.sqrt_det(i);

  std::vector<Eigen::Triplet<Complex>> trips;
  for (int k = 0; k < impl->stiffness.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(impl->stiffness, k); it; ++it)
      if (!mesh->is_boundary[std::size_t(it.row())])
        trips.emplace_back(int(it.row()), int(it.col()), -it.value());
  const Complex iu(0, 1);
  for (int i = 0; i < n; ++i) {
    if (mesh->is_boundary[std::size_t(i)]) {
      trips.emplace_back(i, i, Complex(1, 0));
      continue;
    }
    const NodeStencil& st = mesh->stencil[std::size_t(i)];
    const double w = impl->w[std::size_t(i)];
    for (std::size_t k = 0; k < st.nbr.size(); ++k) {
      const Complex dz = 0.5 * Complex(st.d1[k], -st.d2[k]);
      const Complex dzb = 0.5 * Complex(st.d1[k], st.d2[k]);
      Complex val = w * (2.0 * L.A[i] * dz + 2.0 * L.B[i] * dzb);
      if (st.nbr[k] == i) val += w * L.q[i];
      if (val != Complex(0, 0)) trips.emplace_back(i, st.nbr[k], val);
    }
  }

  impl->mat.resize(n, n);
  impl->mat.setFromTriplets(trips.begin(), trips.end());
  impl->mat.makeCompressed();
  impl->lu.compute(impl->mat);
  impl->lu_ok = impl->lu.info() == Eigen::Success;

  DiscreteSystem sys;
  sys.mesh = mesh;
  sys.part = part;
  sys.operator_tag = L.hash();
  sys.impl = impl;
  sys.factorization_token = hex64(sys.operator_tag ^ mesh->hash());
  estimate_condition(sys);
  return sys;
}

namespace {
ScalarField system_solve(const DiscreteSystem& sys, const ScalarField* f, bool tilde_only,
                         const ScalarField* rhs) {
  const auto& impl = *sys.impl;
  if (!impl.lu_ok) fail(Err::SolveFailure, "factorization failed");
  if (sys.condition_estimate > 1e13)
    fail(Err::SolveFailure, "condition estimate " + std::to_string(sys.condition_estimate));
  const DomainMesh& mesh = *sys.mesh;
  const int n = mesh.n_nodes();
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) {
    if (mesh.is_boundary[std::size_t(i)]) {
      Complex bv = f ? (*f)[i] : Complex(0, 0);
      if (tilde_only && !sys.part.in_gamma_tilde(i)) bv = Complex(0, 0);
      b(i) = bv;
    } else {
      b(i) = rhs ? impl.w[std::size_t(i)] * (*rhs)[i] : Complex(0, 0);
    }
  }
  Eigen::VectorXcd x = impl.lu.solve(b);
  if (impl.lu.info() != Eigen::Success) fail(Err::SolveFailure, "backsolve failed");
  ScalarField u(sys.mesh);
  for (int i = 0; i < n; ++i) u[i] = x(i);
  return u;
}
}  // namespace

ScalarField DiscreteSystem::solve(const ScalarField& f_tilde, const ScalarField& rhs) const {
  return system_solve(*this, f_tilde.mesh ? &f_tilde : nullptr, true,
                      rhs.mesh ? &rhs : nullptr);
}

ScalarField DiscreteSystem::solve_full_dirichlet(const ScalarField& f,
                                                 const ScalarField& rhs) const {
  return system_solve(*this, f.mesh ? &f : nullptr, false, rhs.mesh ? &rhs : nullptr);
}

ScalarField solve_dirichlet(const DiscreteSystem& sys, const ScalarField& f_tilde,
                            const ScalarField& rhs) {
  return sys.solve(f_tilde, rhs);
}

ScalarField DiscreteSystem::weak_conormal(const ScalarField& u, const ScalarField& rhs) const {
  const auto& im = *impl;
  const DomainMesh& msh = *mesh;
  const int n = msh.n_nodes();
  Eigen::VectorXcd uv(n);
  for (int i = 0; i < n; ++i) uv(i) = u[i];
  Eigen::VectorXcd Ku = im.stiffness * uv;
  ScalarField out(mesh);
  for (int i = 0; i < n; ++i) {
    if (!msh.is_boundary[std::size_t(i)]) continue;
    const Complex rhs_i = rhs.mesh ? rhs[i] : Complex(0, 0);
    const Complex low = im.has_lower ? lower_order_at(im, msh, u, i) : Complex(0, 0);
    const Complex flux = Ku(i) + im.w[std::size_t(i)] * (rhs_i - low);
    out[i] = flux / msh.boundary_weight[std::size_t(i)];
  }
  return out;
}

DiscreteSystem DiscreteSystem::row_scaled(const std::vector<double>& beta) const {
  for (double b : beta)
    if (!(b > 0)) fail(Err::NonPositiveBeta, "row scaling requires beta > 0");
  auto impl2 = std::make_shared<Impl>();
  impl2->A = impl->A;
  impl2->B = impl->B;
  impl2->q = impl->q;
  impl2->has_lower = impl->has_lower;
  impl2->stiffness = impl->stiffness;
  impl2->w = impl->w;
  impl2->mat = impl->mat;
  for (int k = 0; k < impl2->mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(impl2->mat, k); it; ++it)
      if (!mesh->is_boundary[std::size_t(it.row())])
        it.valueRef() /= beta[std::size_t(it.row())];
  impl2->lu.compute(impl2->mat);
  impl2->lu_ok = impl2->lu.info() == Eigen::Success;
  DiscreteSystem sys;
  sys.mesh = mesh;
  sys.part = part;
  sys.operator_tag = operator_tag ^ 0x9e3779b97f4a7c15ULL;
  sys.impl = impl2;
  sys.factorization_token = hex64(sys.operator_tag ^ mesh->hash());
  estimate_condition(sys);
  return sys;
}

std::vector<ScalarField> default_boundary_basis(const BoundaryPartition& part, int count) {
  MeshPtr mesh = part.mesh;
  // contiguous gamma_tilde runs in loop order
  std::vector<std::vector<int>> arcs;
  for (const auto& loop : mesh->boundary_loops) {
    const int m = int(loop.size());
    int start = -1;
    for (int k = 0; k < m; ++k)
      if (!part.in_gamma_tilde(loop[std::size_t(k)])) start = k;
    if (start < 0) {
      arcs.push_back(loop);  // whole loop accessible
      continue;
    }
    std::vector<int> cur;
    for (int k = 1; k <= m; ++k) {
      const int i = loop[std::size_t((start + k) % m)];
      if (part.in_gamma_tilde(i)) {
        cur.push_back(i);
      } else if (!cur.empty()) {
        arcs.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) arcs.push_back(cur);
  }
  if (arcs.empty()) fail(Err::EmptyRegion, "gamma_tilde has no nodes");

  std::vector<ScalarField> basis;
  for (int k = 0; k < count; ++k) {
    const auto& arc = arcs[std::size_t(k) % arcs.size()];
    const int mode = k / int(arcs.size());
    ScalarField f(mesh);
    // arclength parameterization of the arc
    std::vector<double> s(arc.size(), 0.0);
    for (std::size_t j = 1; j < arc.size(); ++j) {
      const Vec2 &a = mesh->nodes[std::size_t(arc[j - 1])], &b = mesh->nodes[std::size_t(arc[j])];
      s[j] = s[j - 1] + std::hypot(a.x1 - b.x1, a.x2 - b.x2);
    }
    const double len = s.back();
    const double inset = std::min(0.25 * len, 2.0 * len / double(arc.size() - 1));
    for (std::size_t j = 0; j < arc.size(); ++j) {
      const double t = (s[j] - inset) / (len - 2.0 * inset);
      if (t <= 0.0 || t >= 1.0) continue;
      const double window = std::pow(4.0 * t * (1.0 - t), 3);
      const double phase = M_PI * t * double((mode + 2) / 2);
      const double trig = (mode == 0) ? 1.0 : (mode % 2 ? std::cos(phase) : std::sin(phase));
      f[arc[j]] = window * trig;
    }
    basis.push_back(std::move(f));
  }
  return basis;
}

CauchyDataSet extract_cauchy_data(const DiscreteSystem& sys,
                                  const std::vector<ScalarField>& basis) {
  CauchyDataSet data;
  data.part = sys.part;
  data.operator_tag = sys.operator_tag;
  for (const auto& f : basis) {
    ScalarField u = sys.solve(f, ScalarField{});
    ScalarField trace(sys.mesh);
    for (int i = 0; i < trace.size(); ++i)
      if (sys.mesh->is_boundary[std::size_t(i)]) trace[i] = u[i];
    data.inputs.push_back(f);
    data.traces.push_back(std::move(trace));
    data.conormals.push_back(sys.weak_conormal(u, ScalarField{}));
  }
  return data;
}

CauchyDataSet extract_cauchy_data(const CoefficientSet& L, const BoundaryPartition& part,
                                  const std::vector<ScalarField>& basis) {
  return extract_cauchy_data(assemble(L, part), basis);
}

double cauchy_distance(const CauchyDataSet& C1, const CauchyDataSet& C2) {
  if (C1.inputs.size() != C2.inputs.size())
    fail(Err::BasisMismatch, "different numbers of inputs");
  if (C1.part.on_gamma_tilde != C2.part.on_gamma_tilde)
    fail(Err::BasisMismatch, "different accessible sets");
  double dmax = 0;
  for (std::size_t k = 0; k < C1.inputs.size(); ++k) {
    ScalarField df = C1.inputs[k] - C2.inputs[k];
    const double fscale = std::max(sup_norm(C1.inputs[k]), sup_norm(C2.inputs[k]));
    if (sup_norm(df) > 1e-12 * std::max(1.0, fscale))
      fail(Err::BasisMismatch, "input " + std::to_string(k) + " differs between data sets");
    ScalarField dg = C1.conormals[k] - C2.conormals[k];
    const double num = norm_l2_arc(dg, C1.part, true);
    const double den = norm_l2_arc(C1.inputs[k], C1.part, true) + 1e-300;
    dmax = std::max(dmax, num / den);
  }
  return dmax;
}

void Conductivity::require_spd() const {
  for (std::size_t i = 0; i < s11.size(); ++i) {
    const double tr = s11[i] + s22[i], det = s11[i] * s22[i] - s12[i] * s12[i];
    if (!(tr > 0) || !(det > 0))
      fail(Err::EllipticityViolation, "conductivity not positive definite at node " +
                                          std::to_string(i));
  }
}

Conductivity make_conductivity(MeshPtr mesh, const std::string& s11, const std::string& s12,
                               const std::string& s22) {
  Conductivity sig;
  sig.mesh = mesh;
  auto take_real = [&](const std::string& src) {
    ScalarField f = evaluate(src, mesh);
    std::vector<double> v(f.v.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.v[i].real();
    return v;
  };
  sig.s11 = take_real(s11);
  sig.s12 = take_real(s12);
  sig.s22 = take_real(s22);
  sig.sources = {s11, s12, s22};
  sig.require_spd();
  return sig;
}

CauchyDataSet conductivity_cauchy_data(const Conductivity& sigma, const BoundaryPartition& part,
                                       const std::vector<ScalarField>& basis) {
  MeshPtr mesh = sigma.mesh;
  sigma.require_spd();
  auto impl = std::make_shared<DiscreteSystem::Impl>();
  impl->A = ScalarField(mesh);
  impl->B = ScalarField(mesh);
  impl->q = ScalarField(mesh);
  impl->has_lower = false;
  impl->stiffness = assemble_stiffness(*mesh, [&](int c) -> std::array<double, 3> {
    const auto& t = mesh->cells[std::size_t(c)];
    double a = 0, b = 0, d = 0;
    for (int v : t) {
      a += sigma.s11[std::size_t(v)] / 3.0;
      b += sigma.s12[std::size_t(v)] / 3.0;
      d += sigma.s22[std::size_t(v)] / 3.0;
    }
    return {a, b, d};
  });
  impl->w.assign(std::size_t(mesh->n_nodes()), 0.0);
  const int n = mesh->n_nodes();
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int k = 0; k < impl->stiffness.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(impl->stiffness, k); it; ++it)
      if (!mesh->is_boundary[std::size_t(it.row())])
        trips.emplace_back(int(it.row()), int(it.col()), it.value());
  for (int i = 0; i < n; ++i)
    if (mesh->is_boundary[std::size_t(i)]) trips.emplace_back(i, i, Complex(1, 0));
  impl->mat.resize(n, n);
  impl->mat.setFromTriplets(trips.begin(), trips.end());
  impl->lu.compute(impl->mat);
  impl->lu_ok = impl->lu.info() == Eigen::Success;

  DiscreteSystem sys;
  sys.mesh = mesh;
  sys.part = part;
  sys.operator_tag = fnv1a(sigma.s11.data(), sigma.s11.size() * sizeof(double),
                           fnv1a(sigma.s12.data(), sigma.s12.size() * sizeof(double),
                                 fnv1a(sigma.s22.data(), sigma.s22.size() * sizeof(double))));
  sys.impl = impl;
  estimate_condition(sys);
  return extract_cauchy_data(sys, basis);
}

std::string CauchyDataSet::to_json() const {
  nlohmann::json j;
  j["operator_tag"] = hex64(operator_tag);
  auto gt = part.gamma_tilde_nodes();
  auto& arr = j["inputs"] = nlohmann::json::array();
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    nlohmann::json e;
    auto &jt = e["theta"] = nlohmann::json::array(), &jf = e["f"] = nlohmann::json::array(),
         &ju = e["trace"] = nlohmann::json::array(),
         &jg = e["conormal"] = nlohmann::json::array();
    for (int i : gt) {
      jt.push_back(part.mesh->boundary_angle(i));
      jf.push_back({inputs[k][i].real(), inputs[k][i].imag()});
      ju.push_back({traces[k][i].real(), traces[k][i].imag()});
      jg.push_back({conormals[k][i].real(), conormals[k][i].imag()});
    }
    arr.push_back(std::move(e));
  }
  return j.dump();
}

std::string CauchyDataSet::to_csv() const {
  std::ostringstream os;
  os << "input,node,theta,f_re,f_im,trace_re,trace_im,conormal_re,conormal_im\n";
  os.precision(17);
  auto gt = part.gamma_tilde_nodes();
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (int i : gt)
      os << k << ',' << i << ',' << part.mesh->boundary_angle(i) << ',' << inputs[k][i].real()
         << ',' << inputs[k][i].imag() << ',' << traces[k][i].real() << ',' << traces[k][i].imag()
         << ',' << conormals[k][i].real() << ',' << conormals[k][i].imag() << '\n';
  return os.str();
}

}  // namespace cgo2d
