#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "coefficients.hpp"
#include "fields.hpp"
#include "mesh.hpp"

namespace parasrc {

using SparseSymMatrix = Eigen::SparseMatrix<double>;

namespace detail {

struct P1Element {
  double area;
  double gx[3], gy[3];  // grad of the three barycentric basis functions
  double cx, cy;        // centroid
};

inline P1Element p1_element(const Mesh& m, int t) {
  const auto& tri = m.triangles[t];
  const auto& p0 = m.nodes[tri[0]];
  const auto& p1 = m.nodes[tri[1]];
  const auto& p2 = m.nodes[tri[2]];
  P1Element e;
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
  if (!(det > 0.0)) throw std::runtime_error("assembly: triangle with nonpositive area");
  e.area = 0.5 * det;
  e.gx[0] = (p1[1] - p2[1]) / det;
  e.gy[0] = (p2[0] - p1[0]) / det;
  e.gx[1] = (p2[1] - p0[1]) / det;
  e.gy[1] = (p0[0] - p2[0]) / det;
  e.gx[2] = (p0[1] - p1[1]) / det;
  e.gy[2] = (p1[0] - p0[0]) / det;
  e.cx = (p0[0] + p1[0] + p2[0]) / 3.0;
  e.cy = (p0[1] + p1[1] + p2[1]) / 3.0;
  return e;
}

inline SparseSymMatrix from_triplets(int n, std::vector<Eigen::Triplet<double>>& trips) {
  SparseSymMatrix mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  mat.makeCompressed();
  return mat;
}

}  // namespace detail

// M_ij = int_Omega phi_i phi_j, exact for P1.
inline SparseSymMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto e = detail::p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    const double w = e.area / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], w * (i == j ? 2.0 : 1.0));
  }
  return detail::from_triplets(mesh.node_count(), trips);
}

// K_ij = int_Omega A grad phi_j . grad phi_i + b phi_i phi_j dx
//      + int_boundary sigma phi_i phi_j ds,   coefficients frozen at time t.
// A and b are evaluated at element centroids, sigma at edge midpoints.
inline SparseSymMatrix assemble_operator(const Mesh& mesh, const CoefficientSet& coeffs, double t) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.triangles.size() + 4 * mesh.boundary_edges.size());
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto e = detail::p1_element(mesh, k);
    const auto& tri = mesh.triangles[k];
    const auto a = coeffs.A(e.cx, e.cy, t);
    if (!(min_eigenvalue_sym2(a[0], a[1], a[2]) >= coeffs.ellipticity - 1e-9) ||
        !(min_eigenvalue_sym2(a[0], a[1], a[2]) > 0.0))
      throw std::runtime_error("assemble_operator: ellipticity violated at a quadrature point");
    const double bc = coeffs.b(e.cx, e.cy, t);
    for (int i = 0; i < 3; ++i) {
      // (A grad phi_i) components
      const double ax = a[0] * e.gx[i] + a[1] * e.gy[i];
      const double ay = a[1] * e.gx[i] + a[2] * e.gy[i];
      for (int j = 0; j < 3; ++j) {
        const double diff = e.area * (ax * e.gx[j] + ay * e.gy[j]);
        const double reac = bc * e.area / 12.0 * (i == j ? 2.0 : 1.0);
        trips.emplace_back(tri[i], tri[j], diff + reac);
      }
    }
  }
  for (const auto& edge : mesh.boundary_edges) {
    const double len = edge_length(mesh, edge.a, edge.b);
    const double mx = 0.5 * (mesh.nodes[edge.a][0] + mesh.nodes[edge.b][0]);
    const double my = 0.5 * (mesh.nodes[edge.a][1] + mesh.nodes[edge.b][1]);
    const double s = coeffs.sigma(mx, my, t);
    const double w = s * len / 6.0;
    trips.emplace_back(edge.a, edge.a, 2.0 * w);
    trips.emplace_back(edge.b, edge.b, 2.0 * w);
    trips.emplace_back(edge.a, edge.b, w);
    trips.emplace_back(edge.b, edge.a, w);
  }
  return detail::from_triplets(mesh.node_count(), trips);
}

// (B_Gamma)_ij = int_Gamma phi_i phi_j ds over the edges selected by spec;
// rows and columns away from Gamma stay empty.
inline SparseSymMatrix assemble_boundary_mass(const Mesh& mesh, const BoundarySpec& spec) {
  std::vector<Eigen::Triplet<double>> trips;
  int selected = 0;
  for (const auto& edge : mesh.boundary_edges) {
    if (!spec.selects(mesh, edge)) continue;
    ++selected;
    const double w = edge_length(mesh, edge.a, edge.b) / 6.0;
    trips.emplace_back(edge.a, edge.a, 2.0 * w);
    trips.emplace_back(edge.b, edge.b, 2.0 * w);
    trips.emplace_back(edge.a, edge.b, w);
    trips.emplace_back(edge.b, edge.a, w);
  }
  if (selected == 0) throw std::invalid_argument("assemble_boundary_mass: empty observation segment");
  return detail::from_triplets(mesh.node_count(), trips);
}

// Interior load of a nodal source: (fbar, phi_i) = (M fbar)_i.
inline NodalField assemble_load(const SparseSymMatrix& mass, const NodalField& fbar) {
  if (fbar.size() != mass.rows()) throw std::invalid_argument("assemble_load: size mismatch");
  return mass * fbar;
}

inline NodalField assemble_load(const Mesh& mesh, const NodalField& fbar) {
  return assemble_load(assemble_mass(mesh), fbar);
}

// Boundary load (g(.,t), phi_i) over the whole boundary, midpoint rule per edge.
inline NodalField assemble_boundary_load(const Mesh& mesh, const std::function<double(double, double, double)>& g,
                                         double t) {
  NodalField load = NodalField::Zero(mesh.node_count());
  for (const auto& edge : mesh.boundary_edges) {
    const double len = edge_length(mesh, edge.a, edge.b);
    const double mx = 0.5 * (mesh.nodes[edge.a][0] + mesh.nodes[edge.b][0]);
    const double my = 0.5 * (mesh.nodes[edge.a][1] + mesh.nodes[edge.b][1]);
    const double gv = g(mx, my, t) * len * 0.5;
    load[edge.a] += gv;
    load[edge.b] += gv;
  }
  return load;
}

inline NodalField interpolate_nodal(const Mesh& mesh, const std::function<double(double, double)>& field) {
  NodalField v(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    v[i] = field(mesh.nodes[i][0], mesh.nodes[i][1]);
    if (!std::isfinite(v[i])) throw std::runtime_error("interpolate_nodal: non-finite value at a node");
  }
  return v;
}

inline NodalField interpolate_nodal(const Mesh& mesh, const std::function<double(double, double, double)>& field,
                                    double t) {
  return interpolate_nodal(mesh, [&](double x, double y) { return field(x, y, t); });
}

// Per-slab time averages at the nodes, 2-point Gauss in time (exact through
// cubic integrands).
inline SpaceTimeField slab_average(const std::function<double(double, double, double)>& field, const TimeGrid& grid,
                                   const Mesh& mesh) {
  require_valid(grid);
  SpaceTimeField f = SpaceTimeField::zero(grid, mesh.node_count());
  const double off = 0.5 / std::sqrt(3.0);
  for (int n = 1; n <= grid.M; ++n) {
    const double tm = grid.slab_mid(n), dt = grid.tau();
    const double t1 = tm - off * dt, t2 = tm + off * dt;
    for (int i = 0; i < mesh.node_count(); ++i) {
      const double x = mesh.nodes[i][0], y = mesh.nodes[i][1];
      const double v = 0.5 * (field(x, y, t1) + field(x, y, t2));
      if (!std::isfinite(v)) throw std::runtime_error("slab_average: non-finite value");
      f.slab(n)[i] = v;
    }
  }
  return f;
}

// Variant for sources with a known slab mean (discontinuous-in-time data):
// avg(x, y, t0, t1) returns the exact mean over (t0, t1].
inline SpaceTimeField slab_average_exact(const std::function<double(double, double, double, double)>& avg,
                                         const TimeGrid& grid, const Mesh& mesh) {
  require_valid(grid);
  SpaceTimeField f = SpaceTimeField::zero(grid, mesh.node_count());
  for (int n = 1; n <= grid.M; ++n)
    for (int i = 0; i < mesh.node_count(); ++i) {
      const double v = avg(mesh.nodes[i][0], mesh.nodes[i][1], grid.slab_begin(n), grid.slab_end(n));
      if (!std::isfinite(v)) throw std::runtime_error("slab_average_exact: non-finite value");
      f.slab(n)[i] = v;
    }
  return f;
}

// L2(Omega_T) inner product of slab fields: sum_n tau a_n^T M b_n.
inline double l2_inner(const SpaceTimeField& a, const SpaceTimeField& b, const SparseSymMatrix& mass) {
  if (a.slab_count() != b.slab_count()) throw std::invalid_argument("l2_inner: slab count mismatch");
  double s = 0.0;
  for (int n = 1; n <= a.slab_count(); ++n) s += a.slab(n).dot(mass * b.slab(n));
  return a.grid.tau() * s;
}

inline double l2_norm(const SpaceTimeField& a, const SparseSymMatrix& mass) {
  return std::sqrt(std::max(0.0, l2_inner(a, a, mass)));
}

}  // namespace parasrc
