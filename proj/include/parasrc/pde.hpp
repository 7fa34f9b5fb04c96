#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "assembly.hpp"
#include "coefficients.hpp"
#include "fields.hpp"
#include "linsolve.hpp"
#include "mesh.hpp"
#include "observation.hpp"

namespace parasrc {

// Discrete operators shared by the forward, sensitivity, adjoint and
// source-condition solves on one (mesh, grid, coefficients, Gamma) setup:
// the mass matrix M, the Gamma boundary mass, and per-level step matrices
// A_n = M/tau + K_n/2 (factored once) and C_n = M/tau - K_n/2 with K_n the
// operator frozen at t^n. Time-independent coefficients share a single
// factorization. Immutable after construction, safe for concurrent solves.
class CnSystem {
 public:
  CnSystem(const Mesh& mesh, const TimeGrid& grid, CoefficientSet coeffs, const BoundarySpec& gamma)
      : mesh_(&mesh), grid_(grid), coeffs_(std::move(coeffs)), gamma_(gamma) {
    require_valid(grid_);
    mass_ = assemble_mass(mesh);
    bmass_ = assemble_boundary_mass(mesh, gamma);
    for (const auto& e : mesh.boundary_edges)
      if (gamma.selects(mesh, e)) {
        gamma_nodes_.push_back(e.a);
        gamma_nodes_.push_back(e.b);
      }
    std::sort(gamma_nodes_.begin(), gamma_nodes_.end());
    gamma_nodes_.erase(std::unique(gamma_nodes_.begin(), gamma_nodes_.end()), gamma_nodes_.end());

    const int count = coeffs_.time_independent ? 1 : grid_.M;
    const double inv_tau = 1.0 / grid_.tau();
    rhs_mats_.reserve(count);
    solvers_.reserve(count);
    for (int n = 1; n <= count; ++n) {
      const SparseSymMatrix k = assemble_operator(mesh, coeffs_, grid_.level(n));
      SparseSymMatrix lhs = inv_tau * mass_ + 0.5 * k;
      rhs_mats_.push_back(inv_tau * mass_ - 0.5 * k);
      solvers_.push_back(std::make_unique<SpdSolver>(lhs));
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  const TimeGrid& grid() const { return grid_; }
  const CoefficientSet& coeffs() const { return coeffs_; }
  const BoundarySpec& gamma() const { return gamma_; }
  const SparseSymMatrix& mass() const { return mass_; }
  const SparseSymMatrix& boundary_mass() const { return bmass_; }
  const std::vector<int>& gamma_nodes() const { return gamma_nodes_; }

  const SpdSolver& lhs_solver(int n) const { return *solvers_[index(n)]; }
  const SparseSymMatrix& rhs_matrix(int n) const { return rhs_mats_[index(n)]; }

 private:
  int index(int n) const {
    if (n < 1 || n > grid_.M) throw std::out_of_range("CnSystem: slab index");
    return coeffs_.time_independent ? 0 : n - 1;
  }

  const Mesh* mesh_;
  TimeGrid grid_;
  CoefficientSet coeffs_;
  BoundarySpec gamma_;
  SparseSymMatrix mass_, bmass_;
  std::vector<int> gamma_nodes_;
  std::vector<SparseSymMatrix> rhs_mats_;
  std::vector<std::unique_ptr<SpdSolver>> solvers_;
};

// One Crank-Nicolson sweep. Forward marches n = 1..M solving
// A_n u^n = C_n u^{n-1} + load(n); backward marches n = M..1 solving
// A_n u^{n-1} = C_n u^n + load(n). All four PDE solves below are this sweep
// with different loads, which keeps the discrete adjoint an exact dual of
// the discrete forward map.
inline Trajectory cn_march(const CnSystem& sys, bool backward, const NodalField& start,
                           const std::function<NodalField(int)>& slab_load) {
  const int m = sys.grid().M;
  Trajectory u = Trajectory::zero(sys.grid(), sys.mesh().node_count());
  if (backward) {
    u.level(m) = start;
    for (int n = m; n >= 1; --n)
      u.level(n - 1) = sys.lhs_solver(n).solve(sys.rhs_matrix(n) * u.level(n) + slab_load(n));
  } else {
    u.level(0) = start;
    for (int n = 1; n <= m; ++n)
      u.level(n) = sys.lhs_solver(n).solve(sys.rhs_matrix(n) * u.level(n - 1) + slab_load(n));
  }
  return u;
}

inline void require_compatible(const CnSystem& sys, const SpaceTimeField& f, const char* who) {
  if (!(f.grid == sys.grid()) || f.slab_count() != sys.grid().M || f.node_count() != sys.mesh().node_count())
    throw std::invalid_argument(std::string(who) + ": field does not match the system discretization");
}

// State solve: U^0 = nodal interpolation of q, then
// A_n U^n = C_n U^{n-1} + M f^n + G^n with G^n the boundary load of g(., t^n).
inline Trajectory solve_forward(const CnSystem& sys, const SpaceTimeField& f) {
  require_compatible(sys, f, "solve_forward");
  const NodalField u0 = interpolate_nodal(sys.mesh(), sys.coeffs().q);
  return cn_march(sys, false, u0, [&](int n) -> NodalField {
    return sys.mass() * f.slab(n) + assemble_boundary_load(sys.mesh(), sys.coeffs().g, sys.grid().level(n));
  });
}

// Directional derivative of the source-to-state map: zero initial value,
// zero boundary data, interior load only.
inline Trajectory solve_sensitivity(const CnSystem& sys, const SpaceTimeField& xi) {
  require_compatible(sys, xi, "solve_sensitivity");
  const NodalField zero = NodalField::Zero(sys.mesh().node_count());
  return cn_march(sys, false, zero, [&](int n) -> NodalField { return sys.mass() * xi.slab(n); });
}

inline Trajectory solve_adjoint(const CnSystem& sys, const Trajectory& state, const BoundaryObservation& z) {
  if (!(state.grid == sys.grid()) || !(z.grid == sys.grid()))
    throw std::invalid_argument("solve_adjoint: grid mismatch");
  const NodalField zero = NodalField::Zero(sys.mesh().node_count());
  return cn_march(sys, true, zero,
                  [&](int n) -> NodalField { return sys.boundary_mass() * (state.level(n) - z.slab(n)); });
}

// Backward generator solve for sources of the form f = F(w) + f*: same sweep
// as the adjoint with the slab means of w on Gamma in place of the residual.
inline Trajectory solve_source_condition(const CnSystem& sys,
                                         const std::function<double(double, double, double)>& w) {
  // wbar is sampled everywhere; B_Gamma zeroes all contributions away from Gamma
  SpaceTimeField wbar = slab_average(w, sys.grid(), sys.mesh());
  const NodalField zero = NodalField::Zero(sys.mesh().node_count());
  return cn_march(sys, true, zero, [&](int n) -> NodalField { return sys.boundary_mass() * wbar.slab(n); });
}

}  // namespace parasrc
