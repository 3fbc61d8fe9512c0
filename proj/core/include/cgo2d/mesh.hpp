#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "cgo2d/errors.hpp"
#include "cgo2d/numerics.hpp"

namespace cgo2d {

enum class MeshShape { unit_disc, rectangle, annulus };

// Per-node derivative stencil from a moving-least-squares quadratic fit
// over the node's ring neighborhood. Coefficient rows are real, so
// conj(D f) == D conj(f) holds node-wise.
struct NodeStencil {
  std::vector<int> nbr;       // includes the node itself
  std::vector<double> d1, d2; // first derivatives
  std::vector<double> d11, d12, d22;
};

class DomainMesh;
using MeshPtr = std::shared_ptr<const DomainMesh>;

class DomainMesh {
 public:
  MeshShape shape = MeshShape::unit_disc;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> cells;
  std::vector<std::vector<int>> boundary_loops; // outer loop CCW; holes CW
  double h = 0.0;                               // max cell diameter

  // derived, built once in finalize()
  std::vector<char> is_boundary;
  std::vector<double> lumped_area;      // vertex-rule cell mass per node
  std::vector<double> boundary_weight;  // arclength trapezoid weight (0 interior)
  std::vector<double> cell_area;
  std::vector<Vec2> normal;             // outward unit normal (boundary nodes)
  std::vector<NodeStencil> stencil;
  std::vector<std::vector<int>> node_cells;

  int n_nodes() const { return int(nodes.size()); }
  int n_cells() const { return int(cells.size()); }
  std::uint64_t hash() const { return hash_; }
  std::string hash_hex() const { return hex64(hash_); }

  // boundary parameterization used for arc specs (angle about the centroid)
  double boundary_angle(int node) const;

  // P1 interpolation support: cell containing p (approximately; clamped
  // barycentrics for points marginally outside).
  struct Location {
    int cell = -1;
    std::array<double, 3> bary{};
  };
  Location locate(const Vec2& p) const;

  static MeshPtr make_unit_disc(double target_h);
  static MeshPtr make_disc(double radius, double target_h);
  static MeshPtr make_rectangle(double x0, double x1, double y0, double y1, double target_h);
  static MeshPtr make_annulus(double inner_radius, double target_h);

  std::string to_json(const std::vector<std::array<double, 2>>& gamma_tilde_ranges = {}) const;
  static MeshPtr from_json(const std::string& text);

  void finalize();  // validates invariants, builds derived data

 private:
  void build_stencils_();
  void build_grid_();

  std::uint64_t hash_ = 0;
  Vec2 centroid_{};
  // uniform grid index for locate()
  double grid_x0_ = 0, grid_y0_ = 0, grid_dx_ = 1, grid_dy_ = 1;
  int grid_nx_ = 1, grid_ny_ = 1;
  std::vector<std::vector<int>> grid_cells_;
};

// Accessible/inaccessible split of the boundary plus the clockwise frame
// (tau = (nu2, -nu1)).
struct BoundaryPartition {
  MeshPtr mesh;
  std::vector<char> on_gamma_tilde;  // indexed by node id; false for interior
  std::vector<std::array<double, 2>> ranges;  // angle ranges defining gamma_tilde

  bool in_gamma_tilde(int node) const { return on_gamma_tilde[std::size_t(node)] != 0; }
  Vec2 nu(int node) const { return mesh->normal[std::size_t(node)]; }
  Vec2 tau_vec(int node) const {
    Vec2 n = mesh->normal[std::size_t(node)];
    return Vec2{n.x2, -n.x1};
  }
  std::vector<int> gamma_tilde_nodes() const;
  std::vector<int> gamma_zero_nodes() const;
};

// ranges: angle intervals [a,b] (radians, b>a, wrap allowed) about the centroid
BoundaryPartition make_partition(MeshPtr mesh, const std::vector<std::array<double, 2>>& ranges);

}  // namespace cgo2d
