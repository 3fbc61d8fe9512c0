#include "cgo2d/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace cgo2d {

namespace {

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x1 - b.x1, a.x2 - b.x2); }

double tri_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (b.x2 - a.x2) * (c.x1 - a.x1));
}

// Triangulates the strip between two concentric node rings by a two-pointer
// angle merge. Returns triangles oriented CCW.
void merge_rings(const std::vector<int>& inner, const std::vector<int>& outer,
                 std::vector<std::array<int, 3>>& cells) {
  const int m1 = int(inner.size()), m2 = int(outer.size());
  int i = 0, k = 0;
  while (i < m1 || k < m2) {
    const double ai_next = 2.0 * M_PI * double(i + 1) / double(m1);
    const double bk_next = 2.0 * M_PI * double(k + 1) / double(m2);
    if (k == m2 || (i < m1 && ai_next <= bk_next)) {
      cells.push_back({inner[i % m1], outer[k % m2], inner[(i + 1) % m1]});
      ++i;
    } else {
      cells.push_back({outer[k % m2], outer[(k + 1) % m2], inner[i % m1]});
      ++k;
    }
  }
}

}  // namespace

MeshPtr DomainMesh::make_unit_disc(double target_h) { return make_disc(1.0, target_h); }

MeshPtr DomainMesh::make_disc(double radius, double target_h) {
  if (!(target_h > 0.0) || !(radius > 0.0)) fail(Err::ConfigError, "mesh h must be positive");
  const int n = std::max(2, int(std::lround(radius / target_h)));
  auto mesh = std::make_shared<DomainMesh>();
  mesh->shape = MeshShape::unit_disc;
  mesh->nodes.push_back({0.0, 0.0});
  std::vector<std::vector<int>> rings(std::size_t(n) + 1);
  rings[0] = {0};
  for (int j = 1; j <= n; ++j) {
    const double r = radius * double(j) / double(n);
    const int m = 6 * j;
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * M_PI * double(k) / double(m);
      rings[std::size_t(j)].push_back(int(mesh->nodes.size()));
      mesh->nodes.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  for (int k = 0; k < 6; ++k)
    mesh->cells.push_back({0, rings[1][std::size_t(k)], rings[1][std::size_t((k + 1) % 6)]});
  for (int j = 2; j <= n; ++j)
    merge_rings(rings[std::size_t(j) - 1], rings[std::size_t(j)], mesh->cells);
  mesh->boundary_loops.push_back(rings[std::size_t(n)]);
  mesh->finalize();
  return mesh;
}

MeshPtr DomainMesh::make_rectangle(double x0, double x1, double y0, double y1, double target_h) {
  if (!(target_h > 0.0) || !(x1 > x0) || !(y1 > y0))
    fail(Err::ConfigError, "bad rectangle spec");
  const int nx = std::max(2, int(std::lround((x1 - x0) / target_h)));
  const int ny = std::max(2, int(std::lround((y1 - y0) / target_h)));
  auto mesh = std::make_shared<DomainMesh>();
  mesh->shape = MeshShape::rectangle;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh->nodes.push_back({x0 + (x1 - x0) * double(i) / nx, y0 + (y1 - y0) * double(j) / ny});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh->cells.push_back({a, b, c});
        mesh->cells.push_back({a, c, d});
      } else {
        mesh->cells.push_back({a, b, d});
        mesh->cells.push_back({b, c, d});
      }
    }
  std::vector<int> loop;
  for (int i = 0; i < nx; ++i) loop.push_back(id(i, 0));
  for (int j = 0; j < ny; ++j) loop.push_back(id(nx, j));
  for (int i = nx; i > 0; --i) loop.push_back(id(i, ny));
  for (int j = ny; j > 0; --j) loop.push_back(id(0, j));
  mesh->boundary_loops.push_back(loop);
  mesh->finalize();
  return mesh;
}

MeshPtr DomainMesh::make_annulus(double inner_radius, double target_h) {
  if (!(inner_radius > 0.0) || !(inner_radius < 1.0))
    fail(Err::ConfigError, "annulus inner radius must be in (0,1)");
  const int n = std::max(2, int(std::lround((1.0 - inner_radius) / target_h)));
  const double rmid = 0.5 * (1.0 + inner_radius);
  const int m = std::max(8, int(std::lround(2.0 * M_PI * rmid / target_h)));
  auto mesh = std::make_shared<DomainMesh>();
  mesh->shape = MeshShape::annulus;
  std::vector<std::vector<int>> rings(std::size_t(n) + 1);
  for (int j = 0; j <= n; ++j) {
    const double r = inner_radius + (1.0 - inner_radius) * double(j) / double(n);
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * M_PI * double(k) / double(m);
      rings[std::size_t(j)].push_back(int(mesh->nodes.size()));
      mesh->nodes.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  for (int j = 1; j <= n; ++j)
    merge_rings(rings[std::size_t(j) - 1], rings[std::size_t(j)], mesh->cells);
  mesh->boundary_loops.push_back(rings[std::size_t(n)]);  // outer, CCW
  std::vector<int> inner_loop = rings[0];
  std::reverse(inner_loop.begin() + 1, inner_loop.end());  // hole loop, CW
  mesh->boundary_loops.push_back(inner_loop);
  mesh->finalize();
  return mesh;
}

double DomainMesh::boundary_angle(int node) const {
  const Vec2& p = nodes[std::size_t(node)];
  return std::atan2(p.x2 - centroid_.x2, p.x1 - centroid_.x1);
}

void DomainMesh::finalize() {
  const int N = n_nodes();
  is_boundary.assign(std::size_t(N), 0);
  lumped_area.assign(std::size_t(N), 0.0);
  boundary_weight.assign(std::size_t(N), 0.0);
  normal.assign(std::size_t(N), Vec2{0, 0});
  node_cells.assign(std::size_t(N), {});
  cell_area.resize(cells.size());

  centroid_ = {0, 0};
  for (const auto& p : nodes) {
    centroid_.x1 += p.x1 / N;
    centroid_.x2 += p.x2 / N;
  }

  h = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& t = cells[c];
    const Vec2 &a = nodes[std::size_t(t[0])], &b = nodes[std::size_t(t[1])],
               &cc = nodes[std::size_t(t[2])];
    const double area = tri_area(a, b, cc);
    if (area <= 0.0) fail(Err::ConfigError, "cell " + std::to_string(c) + " not positively oriented");
    cell_area[c] = area;
    h = std::max({h, dist(a, b), dist(b, cc), dist(cc, a)});
    for (int v : t) {
      lumped_area[std::size_t(v)] += area / 3.0;
      node_cells[std::size_t(v)].push_back(int(c));
    }
  }

  for (const auto& loop : boundary_loops) {
    const int m = int(loop.size());
    for (int k = 0; k < m; ++k) {
      int i = loop[std::size_t(k)], j = loop[std::size_t((k + 1) % m)];
      is_boundary[std::size_t(i)] = 1;
      const double len = dist(nodes[std::size_t(i)], nodes[std::size_t(j)]);
      boundary_weight[std::size_t(i)] += 0.5 * len;
      boundary_weight[std::size_t(j)] += 0.5 * len;
    }
  }

  // analytic outward normals per shape
  for (int i = 0; i < N; ++i) {
    if (!is_boundary[std::size_t(i)]) continue;
    const Vec2& p = nodes[std::size_t(i)];
    Vec2 nu{0, 0};
    switch (shape) {
      case MeshShape::unit_disc: {
        const double r = std::hypot(p.x1, p.x2);
        nu = {p.x1 / r, p.x2 / r};
        break;
      }
      case MeshShape::annulus: {
        const double r = std::hypot(p.x1, p.x2);
        nu = {p.x1 / r, p.x2 / r};  // corrected per loop below
        break;
      }
      case MeshShape::rectangle: {
        double xmin = nodes[0].x1, xmax = nodes[0].x1, ymin = nodes[0].x2, ymax = nodes[0].x2;
        for (const auto& q : nodes) {
          xmin = std::min(xmin, q.x1);
          xmax = std::max(xmax, q.x1);
          ymin = std::min(ymin, q.x2);
          ymax = std::max(ymax, q.x2);
        }
        const double tol = 1e-12 * std::max(xmax - xmin, ymax - ymin);
        double nx = 0, ny = 0;
        if (std::abs(p.x1 - xmin) < tol) nx -= 1;
        if (std::abs(p.x1 - xmax) < tol) nx += 1;
        if (std::abs(p.x2 - ymin) < tol) ny -= 1;
        if (std::abs(p.x2 - ymax) < tol) ny += 1;
        const double nn = std::hypot(nx, ny);
        nu = {nx / nn, ny / nn};
        break;
      }
    }
    normal[std::size_t(i)] = nu;
  }

  // fix annulus normals properly (outer vs inner loop)
  if (shape == MeshShape::annulus && boundary_loops.size() == 2) {
    for (int i : boundary_loops[0]) {
      const Vec2& p = nodes[std::size_t(i)];
      const double r = std::hypot(p.x1, p.x2);
      normal[std::size_t(i)] = {p.x1 / r, p.x2 / r};
    }
    for (int i : boundary_loops[1]) {
      const Vec2& p = nodes[std::size_t(i)];
      const double r = std::hypot(p.x1, p.x2);
      normal[std::size_t(i)] = {-p.x1 / r, -p.x2 / r};
    }
  }

  build_stencils_();
  build_grid_();

  std::uint64_t hsh = fnv1a(nodes.data(), nodes.size() * sizeof(Vec2));
  hsh = fnv1a(cells.data(), cells.size() * sizeof(std::array<int, 3>), hsh);
  hash_ = hsh;
}

namespace {
// neighbor collection helper
void gather_ring(const DomainMesh& mesh, int node, int depth, std::set<int>& out) {
  out.insert(node);
  std::set<int> frontier{node};
  for (int d = 0; d < depth; ++d) {
    std::set<int> next;
    for (int u : frontier)
      for (int c : mesh.node_cells[std::size_t(u)])
        for (int v : mesh.cells[std::size_t(c)])
          if (!out.count(v)) next.insert(v);
    out.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
}
}  // namespace

struct StencilBuilder {
  static void build(DomainMesh& mesh) {
    const int N = mesh.n_nodes();
    mesh.stencil.resize(std::size_t(N));
    for (int i = 0; i < N; ++i) {
      // cubic fit needs two rings of support; widen if rank-deficient
      bool ok = try_fit(mesh, i, 2) || try_fit(mesh, i, 3) || try_fit(mesh, i, 4);
      if (!ok) fail(Err::DegenerateStencil, "node " + std::to_string(i));
    }
  }

  static bool try_fit(DomainMesh& mesh, int node, int depth) {
    std::set<int> nbrs;
    gather_ring(mesh, node, depth, nbrs);
    if (nbrs.size() < 12) return false;
    const Vec2& p0 = mesh.nodes[std::size_t(node)];
    std::vector<int> idx(nbrs.begin(), nbrs.end());
    const int m = int(idx.size());
    double R = 0;
    for (int j : idx) R = std::max(R, dist(mesh.nodes[std::size_t(j)], p0));
    if (R <= 0) return false;

    Eigen::MatrixXd Nmat(m, 10);
    Eigen::VectorXd w(m);
    for (int r = 0; r < m; ++r) {
      const Vec2& p = mesh.nodes[std::size_t(idx[std::size_t(r)])];
      const double X = (p.x1 - p0.x1) / R, Y = (p.x2 - p0.x2) / R;
      Nmat(r, 0) = 1;
      Nmat(r, 1) = X;
      Nmat(r, 2) = Y;
      Nmat(r, 3) = X * X;
      Nmat(r, 4) = X * Y;
      Nmat(r, 5) = Y * Y;
      Nmat(r, 6) = X * X * X;
      Nmat(r, 7) = X * X * Y;
      Nmat(r, 8) = X * Y * Y;
      Nmat(r, 9) = Y * Y * Y;
      w(r) = std::exp(-1.5 * (X * X + Y * Y));
    }
    Eigen::MatrixXd A = Nmat.transpose() * w.asDiagonal() * Nmat;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) return false;
    // reject rank-deficient fits
    Eigen::VectorXd diag = ldlt.vectorD();
    if (diag.minCoeff() < 1e-9 * diag.maxCoeff()) return false;

    // rows of the pseudo-inverse give the coefficient functionals
    Eigen::MatrixXd G = ldlt.solve(Nmat.transpose() * w.asDiagonal());  // 10 x m
    NodeStencil st;
    st.nbr = idx;
    st.d1.resize(std::size_t(m));
    st.d2.resize(std::size_t(m));
    st.d11.resize(std::size_t(m));
    st.d12.resize(std::size_t(m));
    st.d22.resize(std::size_t(m));
    for (int r = 0; r < m; ++r) {
      st.d1[std::size_t(r)] = G(1, r) / R;
      st.d2[std::size_t(r)] = G(2, r) / R;
      st.d11[std::size_t(r)] = 2.0 * G(3, r) / (R * R);
      st.d12[std::size_t(r)] = G(4, r) / (R * R);
      st.d22[std::size_t(r)] = 2.0 * G(5, r) / (R * R);
    }
    mesh.stencil[std::size_t(node)] = std::move(st);
    return true;
  }
};

void DomainMesh::build_stencils_() { StencilBuilder::build(*this); }

void DomainMesh::build_grid_() {
  double xmin = nodes[0].x1, xmax = xmin, ymin = nodes[0].x2, ymax = ymin;
  for (const auto& p : nodes) {
    xmin = std::min(xmin, p.x1);
    xmax = std::max(xmax, p.x1);
    ymin = std::min(ymin, p.x2);
    ymax = std::max(ymax, p.x2);
  }
  const int target = std::max(1, int(std::sqrt(double(cells.size()))));
  grid_nx_ = target;
  grid_ny_ = target;
  grid_x0_ = xmin;
  grid_y0_ = ymin;
  grid_dx_ = (xmax - xmin) / grid_nx_ + 1e-300;
  grid_dy_ = (ymax - ymin) / grid_ny_ + 1e-300;
  grid_cells_.assign(std::size_t(grid_nx_) * std::size_t(grid_ny_), {});
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double cx0 = 1e300, cx1 = -1e300, cy0 = 1e300, cy1 = -1e300;
    for (int v : cells[c]) {
      cx0 = std::min(cx0, nodes[std::size_t(v)].x1);
      cx1 = std::max(cx1, nodes[std::size_t(v)].x1);
      cy0 = std::min(cy0, nodes[std::size_t(v)].x2);
      cy1 = std::max(cy1, nodes[std::size_t(v)].x2);
    }
    int i0 = std::clamp(int((cx0 - grid_x0_) / grid_dx_), 0, grid_nx_ - 1);
    int i1 = std::clamp(int((cx1 - grid_x0_) / grid_dx_), 0, grid_nx_ - 1);
    int j0 = std::clamp(int((cy0 - grid_y0_) / grid_dy_), 0, grid_ny_ - 1);
    int j1 = std::clamp(int((cy1 - grid_y0_) / grid_dy_), 0, grid_ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        grid_cells_[std::size_t(j) * std::size_t(grid_nx_) + std::size_t(i)].push_back(int(c));
  }
}

DomainMesh::Location DomainMesh::locate(const Vec2& p) const {
  int gi = std::clamp(int((p.x1 - grid_x0_) / grid_dx_), 0, grid_nx_ - 1);
  int gj = std::clamp(int((p.x2 - grid_y0_) / grid_dy_), 0, grid_ny_ - 1);
  Location best;
  double best_defect = 1e300;
  for (int ring = 0; ring < std::max(grid_nx_, grid_ny_); ++ring) {
    bool any = false;
    for (int j = std::max(0, gj - ring); j <= std::min(grid_ny_ - 1, gj + ring); ++j)
      for (int i = std::max(0, gi - ring); i <= std::min(grid_nx_ - 1, gi + ring); ++i) {
        if (ring > 0 && std::abs(i - gi) != ring && std::abs(j - gj) != ring) continue;
        any = true;
        for (int c : grid_cells_[std::size_t(j) * std::size_t(grid_nx_) + std::size_t(i)]) {
          const auto& t = cells[std::size_t(c)];
          const Vec2 &a = nodes[std::size_t(t[0])], &b = nodes[std::size_t(t[1])],
                     &cc = nodes[std::size_t(t[2])];
          const double A = cell_area[std::size_t(c)];
          double l0 = tri_area(p, b, cc) / A;
          double l1 = tri_area(a, p, cc) / A;
          double l2 = 1.0 - l0 - l1;
          double defect = std::max({-l0, -l1, -l2, 0.0});
          if (defect < best_defect) {
            best_defect = defect;
            best.cell = c;
            best.bary = {l0, l1, l2};
          }
          if (defect <= 1e-12) {
            best.cell = c;
            best.bary = {l0, l1, l2};
            return best;
          }
        }
      }
    if (best.cell >= 0 && best_defect < 0.5 && ring >= 1) break;
    if (!any) break;
  }
  if (best.cell < 0) fail(Err::InterpolationFailure, "point outside mesh index");
  // clamp barycentrics for slightly-exterior points
  double l0 = std::max(0.0, best.bary[0]), l1 = std::max(0.0, best.bary[1]),
         l2 = std::max(0.0, best.bary[2]);
  const double s = l0 + l1 + l2;
  best.bary = {l0 / s, l1 / s, l2 / s};
  return best;
}

std::vector<int> BoundaryPartition::gamma_tilde_nodes() const {
  std::vector<int> out;
  for (const auto& loop : mesh->boundary_loops)
    for (int i : loop)
      if (on_gamma_tilde[std::size_t(i)]) out.push_back(i);
  return out;
}

std::vector<int> BoundaryPartition::gamma_zero_nodes() const {
  std::vector<int> out;
  for (const auto& loop : mesh->boundary_loops)
    for (int i : loop)
      if (!on_gamma_tilde[std::size_t(i)]) out.push_back(i);
  return out;
}

BoundaryPartition make_partition(MeshPtr mesh,
                                 const std::vector<std::array<double, 2>>& ranges) {
  BoundaryPartition part;
  part.mesh = mesh;
  part.ranges = ranges;
  part.on_gamma_tilde.assign(std::size_t(mesh->n_nodes()), 0);
  auto in_range = [&](double th) {
    for (const auto& r : ranges) {
      double a = r[0], b = r[1];
      double t = th;
      while (t < a) t += 2.0 * M_PI;
      if (t <= b) return true;
    }
    return false;
  };
  for (const auto& loop : mesh->boundary_loops)
    for (int i : loop)
      if (in_range(mesh->boundary_angle(i))) part.on_gamma_tilde[std::size_t(i)] = 1;
  return part;
}

std::string DomainMesh::to_json(const std::vector<std::array<double, 2>>& ranges) const {
  nlohmann::json j;
  j["shape"] = shape == MeshShape::unit_disc    ? "unit_disc"
               : shape == MeshShape::rectangle  ? "rectangle"
                                                : "annulus";
  auto& jn = j["nodes"] = nlohmann::json::array();
  for (const auto& p : nodes) jn.push_back({p.x1, p.x2});
  auto& jc = j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) jc.push_back({c[0], c[1], c[2]});
  j["boundary_loops"] = boundary_loops;
  auto& jg = j["gamma_tilde"] = nlohmann::json::array();
  for (const auto& r : ranges) jg.push_back({r[0], r[1]});
  return j.dump();
}

MeshPtr DomainMesh::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Err::ConfigError, "mesh JSON parse failure");
  auto mesh = std::make_shared<DomainMesh>();
  const std::string s = j.value("shape", "unit_disc");
  mesh->shape = s == "rectangle" ? MeshShape::rectangle
               : s == "annulus" ? MeshShape::annulus
                                : MeshShape::unit_disc;
  for (const auto& p : j.at("nodes")) mesh->nodes.push_back({p.at(0), p.at(1)});
  for (const auto& c : j.at("cells"))
    mesh->cells.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
  mesh->boundary_loops = j.at("boundary_loops").get<std::vector<std::vector<int>>>();
  mesh->finalize();
  return mesh;
}

}  // namespace cgo2d
