#pragma once

// Brute-force reference computations, independent of the library's assembly
// and solver paths: dense quadrature element integrals, dense Crank-Nicolson
// stepping, and a dense normal-equations minimizer for tiny instances.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <parasrc/parasrc.hpp>
#include <vector>

namespace oracles {

using parasrc::BoundaryObservation;
using parasrc::BoundarySpec;
using parasrc::CoefficientSet;
using parasrc::Mesh;
using parasrc::NodalField;
using parasrc::SpaceTimeField;
using parasrc::TimeGrid;

// 7-point degree-5 triangle rule in barycentric coordinates.
struct TriPoint {
  double l0, l1, l2, w;
};

inline const std::vector<TriPoint>& tri_rule() {
  static const std::vector<TriPoint> rule = [] {
    std::vector<TriPoint> r;
    const double s15 = std::sqrt(15.0);
    r.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40});
    const double a = (6.0 + s15) / 21.0, wa = (155.0 + s15) / 1200.0;
    const double b = (6.0 - s15) / 21.0, wb = (155.0 - s15) / 1200.0;
    for (int k = 0; k < 3; ++k) {
      double l[3] = {a, a, a};
      l[k] = 1.0 - 2.0 * a;
      r.push_back({l[0], l[1], l[2], wa});
    }
    for (int k = 0; k < 3; ++k) {
      double l[3] = {b, b, b};
      l[k] = 1.0 - 2.0 * b;
      r.push_back({l[0], l[1], l[2], wb});
    }
    return r;
  }();
  return rule;
}

// 4-point Gauss rule on [0,1].
inline const std::vector<std::pair<double, double>>& edge_rule() {
  static const std::vector<std::pair<double, double>> rule = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    return std::vector<std::pair<double, double>>{
        {0.5 * (1 - a), 0.5 * wa}, {0.5 * (1 + a), 0.5 * wa}, {0.5 * (1 - b), 0.5 * wb}, {0.5 * (1 + b), 0.5 * wb}};
  }();
  return rule;
}

inline Eigen::MatrixXd dense_mass(const Mesh& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.node_count(), m.node_count());
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    const double area = parasrc::triangle_area(m, t);
    for (const auto& p : tri_rule()) {
      const double phi[3] = {p.l0, p.l1, p.l2};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(tri[i], tri[j]) += area * p.w * phi[i] * phi[j];
    }
  }
  return out;
}

inline Eigen::MatrixXd dense_operator(const Mesh& m, const CoefficientSet& coeffs, double t) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.node_count(), m.node_count());
  for (int k = 0; k < m.triangle_count(); ++k) {
    const auto& tri = m.triangles[k];
    const auto& p0 = m.nodes[tri[0]];
    const auto& p1 = m.nodes[tri[1]];
    const auto& p2 = m.nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    const double area = 0.5 * det;
    const double gx[3] = {(p1[1] - p2[1]) / det, (p2[1] - p0[1]) / det, (p0[1] - p1[1]) / det};
    const double gy[3] = {(p2[0] - p1[0]) / det, (p0[0] - p2[0]) / det, (p1[0] - p0[0]) / det};
    for (const auto& qp : tri_rule()) {
      const double phi[3] = {qp.l0, qp.l1, qp.l2};
      const double x = qp.l0 * p0[0] + qp.l1 * p1[0] + qp.l2 * p2[0];
      const double y = qp.l0 * p0[1] + qp.l1 * p1[1] + qp.l2 * p2[1];
      const auto a = coeffs.A(x, y, t);
      const double bv = coeffs.b(x, y, t);
      for (int i = 0; i < 3; ++i) {
        const double ax = a[0] * gx[i] + a[1] * gy[i];
        const double ay = a[1] * gx[i] + a[2] * gy[i];
        for (int j = 0; j < 3; ++j)
          out(tri[i], tri[j]) += area * qp.w * (ax * gx[j] + ay * gy[j] + bv * phi[i] * phi[j]);
      }
    }
  }
  for (const auto& e : m.boundary_edges) {
    const double len = parasrc::edge_length(m, e.a, e.b);
    for (const auto& [s, w] : edge_rule()) {
      const double x = (1 - s) * m.nodes[e.a][0] + s * m.nodes[e.b][0];
      const double y = (1 - s) * m.nodes[e.a][1] + s * m.nodes[e.b][1];
      const double sv = coeffs.sigma(x, y, t);
      const double phi[2] = {1 - s, s};
      const int id[2] = {e.a, e.b};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(id[i], id[j]) += len * w * sv * phi[i] * phi[j];
    }
  }
  return out;
}

inline Eigen::MatrixXd dense_boundary_mass(const Mesh& m, const BoundarySpec& spec) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.node_count(), m.node_count());
  for (const auto& e : m.boundary_edges) {
    if (!spec.selects(m, e)) continue;
    const double len = parasrc::edge_length(m, e.a, e.b);
    for (const auto& [s, w] : edge_rule()) {
      const double phi[2] = {1 - s, s};
      const int id[2] = {e.a, e.b};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(id[i], id[j]) += len * w * phi[i] * phi[j];
    }
  }
  return out;
}

inline Eigen::VectorXd dense_boundary_load(const Mesh& m, const std::function<double(double, double, double)>& g,
                                           double t) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.node_count());
  for (const auto& e : m.boundary_edges) {
    const double len = parasrc::edge_length(m, e.a, e.b);
    for (const auto& [s, w] : edge_rule()) {
      const double x = (1 - s) * m.nodes[e.a][0] + s * m.nodes[e.b][0];
      const double y = (1 - s) * m.nodes[e.a][1] + s * m.nodes[e.b][1];
      const double gv = g(x, y, t);
      out[e.a] += len * w * gv * (1 - s);
      out[e.b] += len * w * gv * s;
    }
  }
  return out;
}

// Dense Crank-Nicolson forward sweep with centroid-frozen coefficients (the
// library's contract) but dense assembly and dense linear solves.
struct DenseCn {
  Eigen::MatrixXd mass;
  std::vector<Eigen::MatrixXd> lhs, rhs;  // per slab
  const Mesh* mesh;
  TimeGrid grid;

  DenseCn(const Mesh& m, const TimeGrid& g, const CoefficientSet& c) : mesh(&m), grid(g) {
    mass = dense_mass(m);
    for (int n = 1; n <= g.M; ++n) {
      const Eigen::MatrixXd k = dense_operator(m, c, g.level(n));
      lhs.push_back(mass / g.tau() + 0.5 * k);
      rhs.push_back(mass / g.tau() - 0.5 * k);
    }
  }

  std::vector<Eigen::VectorXd> forward(const Eigen::VectorXd& u0,
                                       const std::function<Eigen::VectorXd(int)>& load) const {
    std::vector<Eigen::VectorXd> u(grid.M + 1);
    u[0] = u0;
    for (int n = 1; n <= grid.M; ++n) u[n] = lhs[n - 1].ldlt().solve(rhs[n - 1] * u[n - 1] + load(n));
    return u;
  }

  std::vector<Eigen::VectorXd> backward(const Eigen::VectorXd& um,
                                        const std::function<Eigen::VectorXd(int)>& load) const {
    std::vector<Eigen::VectorXd> p(grid.M + 1);
    p[grid.M] = um;
    for (int n = grid.M; n >= 1; --n) p[n - 1] = lhs[n - 1].ldlt().solve(rhs[n - 1] * p[n] + load(n));
    return p;
  }
};

// Exact minimizer of the discrete regularized functional by dense normal
// equations over the stacked source coefficients (slab-major).
inline SpaceTimeField dense_normal_equations_minimizer(const Mesh& mesh, const TimeGrid& grid,
                                                       const CoefficientSet& coeffs, const BoundarySpec& gamma,
                                                       const BoundaryObservation& z, const SpaceTimeField& f_star,
                                                       double rho) {
  const int nn = mesh.node_count();
  const int dim = grid.M * nn;
  const DenseCn cn(mesh, grid, coeffs);
  const Eigen::MatrixXd bmass = dense_boundary_mass(mesh, gamma);

  auto forward_of = [&](const Eigen::VectorXd& fvec, bool with_data) {
    const Eigen::VectorXd u0 = with_data ? Eigen::VectorXd(parasrc::interpolate_nodal(mesh, coeffs.q))
                                         : Eigen::VectorXd(Eigen::VectorXd::Zero(nn));
    return cn.forward(u0, [&](int n) {
      Eigen::VectorXd load = cn.mass * fvec.segment((n - 1) * nn, nn);
      if (with_data) load += dense_boundary_load(mesh, coeffs.g, grid.level(n));
      return load;
    });
  };

  // stacked state map: row block n = U^n, as a dense affine map f -> S f + c
  Eigen::MatrixXd s_mat = Eigen::MatrixXd::Zero(grid.M * nn, dim);
  for (int col = 0; col < dim; ++col) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[col] = 1.0;
    const auto u = forward_of(e, false);
    for (int n = 1; n <= grid.M; ++n) s_mat.block((n - 1) * nn, col, nn, 1) = u[n];
  }
  const auto u_c = forward_of(Eigen::VectorXd::Zero(dim), true);
  Eigen::VectorXd c_vec(grid.M * nn), z_vec(grid.M * nn), fstar_vec(dim);
  for (int n = 1; n <= grid.M; ++n) {
    c_vec.segment((n - 1) * nn, nn) = u_c[n];
    z_vec.segment((n - 1) * nn, nn) = z.slab(n);
    fstar_vec.segment((n - 1) * nn, nn) = f_star.slab(n);
  }

  const double tau = grid.tau();
  Eigen::MatrixXd w_blk = Eigen::MatrixXd::Zero(grid.M * nn, grid.M * nn);
  Eigen::MatrixXd m_blk = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n < grid.M; ++n) {
    w_blk.block(n * nn, n * nn, nn, nn) = tau * bmass;
    m_blk.block(n * nn, n * nn, nn, nn) = tau * Eigen::MatrixXd(cn.mass);
  }

  const Eigen::MatrixXd lhs = s_mat.transpose() * w_blk * s_mat + rho * m_blk;
  const Eigen::VectorXd rhs = s_mat.transpose() * w_blk * (z_vec - c_vec) + rho * m_blk * fstar_vec;
  const Eigen::VectorXd fopt = lhs.ldlt().solve(rhs);

  SpaceTimeField out = SpaceTimeField::zero(grid, nn);
  for (int n = 1; n <= grid.M; ++n) out.slab(n) = fopt.segment((n - 1) * nn, nn);
  return out;
}

inline SpaceTimeField random_field(const TimeGrid& grid, int nodes, std::uint64_t seed) {
  parasrc::detail::UniformRng rng(seed);
  auto f = SpaceTimeField::zero(grid, nodes);
  for (auto& slab : f.slabs)
    for (int i = 0; i < nodes; ++i) slab[i] = rng.next() - 0.5;
  return f;
}

}  // namespace oracles
