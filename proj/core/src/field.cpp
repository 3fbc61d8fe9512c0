#include "cgo2d/field.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace cgo2d {

void check_same_mesh(const ScalarField& a, const ScalarField& b) {
  if (!a.mesh || !b.mesh || a.mesh->hash() != b.mesh->hash())
    fail(Err::MeshMismatch, "fields sampled on different meshes");
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  check_same_mesh(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  check_same_mesh(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  check_same_mesh(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= b[i];
  return r;
}

ScalarField operator*(Complex s, const ScalarField& a) {
  ScalarField r = a;
  for (auto& x : r.v) x *= s;
  return r;
}

ScalarField conj(const ScalarField& a) {
  ScalarField r = a;
  for (auto& x : r.v) x = std::conj(x);
  return r;
}

double sup_norm(const ScalarField& a) {
  double m = 0;
  for (const auto& x : a.v) m = std::max(m, std::abs(x));
  return m;
}

double sup_norm_interior(const ScalarField& a) {
  double m = 0;
  for (int i = 0; i < a.size(); ++i)
    if (!a.mesh->is_boundary[std::size_t(i)]) m = std::max(m, std::abs(a[i]));
  return m;
}

ScalarField evaluate(const FieldExpr& expr, MeshPtr mesh) {
  ScalarField f(mesh, Complex(0, 0), expr.source());
  for (int i = 0; i < f.size(); ++i) {
    const Vec2& p = mesh->nodes[std::size_t(i)];
    try {
      f[i] = expr.eval(p.x1, p.x2);
    } catch (const Error& e) {
      if (e.code() == Err::EvalError)
        fail(Err::EvalError, std::string(e.what()) + " at node " + std::to_string(i));
      throw;
    }
  }
  return f;
}

ScalarField evaluate(const std::string& source, MeshPtr mesh) {
  return evaluate(parse_field_expr(source), std::move(mesh));
}

namespace {
ScalarField apply_stencil(const ScalarField& f,
                          const std::vector<double> NodeStencil::*row) {
  ScalarField r(f.mesh, Complex(0, 0), f.label);
  const auto& stencils = f.mesh->stencil;
  for (std::size_t i = 0; i < stencils.size(); ++i) {
    const NodeStencil& st = stencils[i];
    const auto& coeff = st.*row;
    Complex acc(0, 0);
    for (std::size_t k = 0; k < st.nbr.size(); ++k)
      acc += coeff[k] * f.v[std::size_t(st.nbr[k])];
    r.v[i] = acc;
  }
  return r;
}
}  // namespace

ScalarField derivative(const ScalarField& f, int which) {
  return apply_stencil(f, which == 1 ? &NodeStencil::d1 : &NodeStencil::d2);
}

ScalarField second_derivative(const ScalarField& f, int j, int k) {
  if (j == 1 && k == 1) return apply_stencil(f, &NodeStencil::d11);
  if (j == 2 && k == 2) return apply_stencil(f, &NodeStencil::d22);
  return apply_stencil(f, &NodeStencil::d12);
}

ScalarField wirtinger(const ScalarField& f, WirtingerKind which) {
  ScalarField d1 = derivative(f, 1), d2 = derivative(f, 2);
  ScalarField r(f.mesh);
  const Complex iu(0, 1);
  if (which == WirtingerKind::dz)
    for (int i = 0; i < r.size(); ++i) r[i] = 0.5 * (d1[i] - iu * d2[i]);
  else
    for (int i = 0; i < r.size(); ++i) r[i] = 0.5 * (d1[i] + iu * d2[i]);
  return r;
}

Complex integrate(const ScalarField& f) {
  Complex acc(0, 0);
  for (int i = 0; i < f.size(); ++i) acc += f.mesh->lumped_area[std::size_t(i)] * f[i];
  return acc;
}

Complex integrate_boundary(const ScalarField& f) {
  Complex acc(0, 0);
  bool any = false;
  for (int i = 0; i < f.size(); ++i)
    if (f.mesh->is_boundary[std::size_t(i)]) {
      acc += f.mesh->boundary_weight[std::size_t(i)] * f[i];
      any = true;
    }
  if (!any) fail(Err::EmptyRegion, "mesh has no boundary nodes");
  return acc;
}

namespace {
// arclength weights restricted to one side of the partition: an edge
// contributes only when both endpoints lie on the same side
Complex arc_sum(const ScalarField& f, const BoundaryPartition& part, bool tilde) {
  if (!f.mesh || !part.mesh || f.mesh->hash() != part.mesh->hash())
    fail(Err::MeshMismatch, "field and partition meshes differ");
  const DomainMesh& mesh = *f.mesh;
  Complex acc(0, 0);
  bool any = false;
  for (const auto& loop : mesh.boundary_loops) {
    const int m = int(loop.size());
    for (int k = 0; k < m; ++k) {
      int i = loop[std::size_t(k)], j = loop[std::size_t((k + 1) % m)];
      if (part.in_gamma_tilde(i) != tilde || part.in_gamma_tilde(j) != tilde) continue;
      const Vec2 &a = mesh.nodes[std::size_t(i)], &b = mesh.nodes[std::size_t(j)];
      const double len = std::hypot(a.x1 - b.x1, a.x2 - b.x2);
      acc += 0.5 * len * (f[i] + f[j]);
      any = true;
    }
  }
  if (!any) fail(Err::EmptyRegion, tilde ? "gamma_tilde is empty" : "gamma_zero is empty");
  return acc;
}
}  // namespace

Complex integrate_arc(const ScalarField& f, const BoundaryPartition& part, bool gamma_tilde) {
  return arc_sum(f, part, gamma_tilde);
}

Complex integrate(const ScalarField& f, Region region, const BoundaryPartition* part) {
  switch (region) {
    case Region::area: return integrate(f);
    case Region::boundary: return integrate_boundary(f);
    case Region::arc_gamma_tilde:
      if (!part) fail(Err::EmptyRegion, "arc region requires a partition");
      return integrate_arc(f, *part, true);
    case Region::arc_gamma_zero:
      if (!part) fail(Err::EmptyRegion, "arc region requires a partition");
      return integrate_arc(f, *part, false);
  }
  return Complex(0, 0);
}

double norm_l2(const ScalarField& f) {
  double acc = 0;
  for (int i = 0; i < f.size(); ++i)
    acc += f.mesh->lumped_area[std::size_t(i)] * std::norm(f[i]);
  return std::sqrt(acc);
}

double norm_l2_arc(const ScalarField& f, const BoundaryPartition& part, bool gamma_tilde) {
  ScalarField sq(f.mesh);
  for (int i = 0; i < f.size(); ++i) sq[i] = std::norm(f[i]);
  return std::sqrt(std::abs(arc_sum(sq, part, gamma_tilde).real()));
}

Complex interpolate(const ScalarField& f, const Vec2& p) {
  auto loc = f.mesh->locate(p);
  const auto& t = f.mesh->cells[std::size_t(loc.cell)];
  return loc.bary[0] * f[t[0]] + loc.bary[1] * f[t[1]] + loc.bary[2] * f[t[2]];
}

std::string field_to_json(const ScalarField& f) {
  nlohmann::json j;
  j["mesh_hash"] = f.mesh->hash_hex();
  auto& jv = j["values"] = nlohmann::json::array();
  for (const auto& x : f.v) jv.push_back({x.real(), x.imag()});
  if (!f.label.empty()) j["label"] = f.label;
  return j.dump();
}

ScalarField field_from_json(const std::string& text, MeshPtr mesh) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Err::ConfigError, "field JSON parse failure");
  if (j.at("mesh_hash").get<std::string>() != mesh->hash_hex())
    fail(Err::MeshMismatch, "field mesh_hash does not match the target mesh");
  ScalarField f(mesh);
  const auto& jv = j.at("values");
  if (int(jv.size()) != mesh->n_nodes()) fail(Err::MeshMismatch, "value count mismatch");
  for (int i = 0; i < f.size(); ++i)
    f[i] = Complex(jv[std::size_t(i)].at(0), jv[std::size_t(i)].at(1));
  f.label = j.value("label", "");
  return f;
}

}  // namespace cgo2d
