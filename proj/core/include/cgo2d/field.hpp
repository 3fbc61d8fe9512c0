#pragma once

#include <string>
#include <vector>

#include "cgo2d/expr.hpp"
#include "cgo2d/mesh.hpp"

namespace cgo2d {

// Complex-valued function sampled at mesh nodes. Immutable mesh reference;
// combining fields from different meshes is a MeshMismatch error.
struct ScalarField {
  MeshPtr mesh;
  std::vector<Complex> v;
  std::string label;

  ScalarField() = default;
  ScalarField(MeshPtr m, Complex fill = Complex(0, 0), std::string lab = {})
      : mesh(std::move(m)), v(std::size_t(mesh->n_nodes()), fill), label(std::move(lab)) {}

  int size() const { return int(v.size()); }
  Complex& operator[](int i) { return v[std::size_t(i)]; }
  const Complex& operator[](int i) const { return v[std::size_t(i)]; }
};

void check_same_mesh(const ScalarField& a, const ScalarField& b);

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator*(Complex s, const ScalarField& a);
ScalarField conj(const ScalarField& a);

double sup_norm(const ScalarField& a);
double sup_norm_interior(const ScalarField& a);

// Samples an expression at every node; EvalError reports the node index.
ScalarField evaluate(const FieldExpr& expr, MeshPtr mesh);
ScalarField evaluate(const std::string& source, MeshPtr mesh);

enum class WirtingerKind { dz, dzbar };

// 0.5*(d1 -/+ i d2) by the mesh's moving-least-squares stencils.
ScalarField wirtinger(const ScalarField& f, WirtingerKind which);
ScalarField derivative(const ScalarField& f, int which);           // d1 or d2
ScalarField second_derivative(const ScalarField& f, int j, int k); // d11/d12/d22

enum class Region { area, boundary, arc_gamma_tilde, arc_gamma_zero };

Complex integrate(const ScalarField& f);                    // over the area
Complex integrate_boundary(const ScalarField& f);           // over all of the boundary
Complex integrate_arc(const ScalarField& f, const BoundaryPartition& part, bool gamma_tilde);
Complex integrate(const ScalarField& f, Region region, const BoundaryPartition* part = nullptr);

double norm_l2(const ScalarField& f);                       // area L2
double norm_l2_arc(const ScalarField& f, const BoundaryPartition& part, bool gamma_tilde);

// P1 interpolation at an arbitrary point.
Complex interpolate(const ScalarField& f, const Vec2& p);

// {"mesh_hash":..., "values":[[re,im],...]}
std::string field_to_json(const ScalarField& f);
ScalarField field_from_json(const std::string& text, MeshPtr mesh);

}  // namespace cgo2d
