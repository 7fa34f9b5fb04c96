#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "observation.hpp"
#include "pde.hpp"

namespace parasrc {

// Regularized output-least-squares objective
//   J(f) = sum_n tau (U^n - z^n)^T B (U^n - z^n) + rho sum_n tau (f^n - f*^n)^T M (f^n - f*^n)
// with U the forward state of f.
struct Objective {
  const CnSystem* sys = nullptr;
  const BoundaryObservation* z = nullptr;
  const SpaceTimeField* f_star = nullptr;
  double rho = 0.0;

  Objective(const CnSystem& system, const BoundaryObservation& obs, const SpaceTimeField& prior, double rho_)
      : sys(&system), z(&obs), f_star(&prior), rho(rho_) {
    if (!(rho > 0.0)) throw std::invalid_argument("Objective: rho must be positive");
    if (!(obs.grid == system.grid())) throw std::invalid_argument("Objective: observation grid mismatch");
    require_compatible(system, prior, "Objective(f_star)");
  }

  double data_misfit(const Trajectory& state) const {
    double s = 0.0;
    for (int n = 1; n <= sys->grid().M; ++n) {
      const NodalField r = state.level(n) - z->slab(n);
      s += r.dot(sys->boundary_mass() * r);
    }
    return sys->grid().tau() * s;
  }

  double regularizer(const SpaceTimeField& f) const {
    double s = 0.0;
    for (int n = 1; n <= f.slab_count(); ++n) {
      const NodalField d = f.slab(n) - f_star->slab(n);
      s += d.dot(sys->mass() * d);
    }
    return rho * sys->grid().tau() * s;
  }

  double cost(const SpaceTimeField& f, const Trajectory& state) const { return data_misfit(state) + regularizer(f); }

  // Riesz representative of J' in the mass-weighted space-time inner product:
  // slab n of grad = 2 P^{n-1} + 2 rho (f^n - f*^n).
  SpaceTimeField gradient(const SpaceTimeField& f, const Trajectory& state) const {
    const Trajectory p = solve_adjoint(*sys, state, *z);
    SpaceTimeField g = SpaceTimeField::zero(sys->grid(), sys->mesh().node_count());
    for (int n = 1; n <= sys->grid().M; ++n)
      g.slab(n) = 2.0 * p.level(n - 1) + 2.0 * rho * (f.slab(n) - f_star->slab(n));
    return g;
  }

  double inner(const SpaceTimeField& a, const SpaceTimeField& b) const { return l2_inner(a, b, sys->mass()); }
  double norm(const SpaceTimeField& a) const { return l2_norm(a, sys->mass()); }

  // Exact minimizer of the quadratic alpha -> J(f + alpha d):
  //   alpha = -[sum_n tau Uhat_n^T B (U_n - z_n) + rho (d, f - f*)] /
  //            [sum_n tau Uhat_n^T B Uhat_n + rho (d, d)]
  // with Uhat the sensitivity state of d.
  double step_size(const SpaceTimeField& f, const SpaceTimeField& d, const Trajectory& state) const {
    if (norm(d) == 0.0) throw std::invalid_argument("step_size: zero direction");
    const Trajectory uhat = solve_sensitivity(*sys, d);
    const double tau = sys->grid().tau();
    double num = 0.0, den = 0.0;
    for (int n = 1; n <= sys->grid().M; ++n) {
      const NodalField bu = sys->boundary_mass() * uhat.level(n);
      num += tau * bu.dot(state.level(n) - z->slab(n));
      den += tau * bu.dot(uhat.level(n));
    }
    SpaceTimeField fm = f;
    fm -= *f_star;
    num += rho * inner(d, fm);
    den += rho * inner(d, d);
    if (!(den > 0.0)) throw std::runtime_error("step_size: nonpositive curvature");
    return -num / den;
  }
};

inline double evaluate_cost(const SpaceTimeField& f, const Objective& obj) {
  return obj.cost(f, solve_forward(*obj.sys, f));
}

inline SpaceTimeField evaluate_gradient(const SpaceTimeField& f, const Objective& obj) {
  return obj.gradient(f, solve_forward(*obj.sys, f));
}

// Polak-Ribiere coefficient in the mass-weighted inner product.
inline double pr_beta(const SpaceTimeField& g_k, const SpaceTimeField& g_km1, const SparseSymMatrix& mass) {
  const double denom = l2_inner(g_km1, g_km1, mass);
  if (!(denom > 0.0)) throw std::invalid_argument("pr_beta: zero previous gradient");
  SpaceTimeField diff = g_k;
  diff -= g_km1;
  return l2_inner(g_k, diff, mass) / denom;
}

// Distance to the fixed-point form of the optimality condition,
// || f - f* + P^{(.-1)}/rho ||; identical to ||grad J|| / (2 rho).
inline double optimality_residual(const SpaceTimeField& f, const Objective& obj) {
  const Trajectory state = solve_forward(*obj.sys, f);
  const Trajectory p = solve_adjoint(*obj.sys, state, *obj.z);
  SpaceTimeField r = f;
  r -= *obj.f_star;
  for (int n = 1; n <= f.slab_count(); ++n) r.slab(n) += p.level(n - 1) / obj.rho;
  return obj.norm(r);
}

struct InverseConfig {
  double rho = 0.0;
  SpaceTimeField f_star;
  SpaceTimeField f0;
  double tau_a = 1e-10;
  double tau_r = 1e-6;
  int k_max = 500;
};

enum class StopReason { converged, iteration_limit };

struct CGReport {
  SpaceTimeField minimizer;
  Trajectory state;  // forward state of the minimizer
  int iterations = 0;
  StopReason stop = StopReason::converged;
  double stop_threshold = 0.0;  // tau_a + tau_r * ||grad J(f0)||
  std::vector<double> j_history;          // J(f_0..f_K)
  std::vector<double> grad_norm_history;  // ||grad J(f_0..f_K)||
  std::vector<double> alphas;             // alpha_0..alpha_{K-1}
  std::vector<double> betas;              // beta used for d_1..d_{K-1} (after flooring)
  int pr_restarts = 0;                    // times Polak-Ribiere went negative
};

// Conjugate gradients with exact quadratic line search and Polak-Ribiere
// directions (floored at zero, which restarts with steepest descent).
inline CGReport cg_minimize(const InverseConfig& config, const CnSystem& sys, const BoundaryObservation& z) {
  if (config.k_max < 1) throw std::invalid_argument("cg_minimize: k_max must be >= 1");
  if (config.tau_a < 0.0 || config.tau_r < 0.0 || (config.tau_a == 0.0 && config.tau_r == 0.0))
    throw std::invalid_argument("cg_minimize: need tau_a, tau_r >= 0 and not both zero");
  const Objective obj(sys, z, config.f_star, config.rho);
  require_compatible(sys, config.f0, "cg_minimize(f0)");

  CGReport rep;
  SpaceTimeField f = config.f0;
  Trajectory state = solve_forward(sys, f);
  SpaceTimeField grad = obj.gradient(f, state);
  double gnorm = obj.norm(grad);
  rep.stop_threshold = config.tau_a + config.tau_r * gnorm;
  rep.j_history.push_back(obj.cost(f, state));
  rep.grad_norm_history.push_back(gnorm);

  SpaceTimeField dir = grad;
  dir *= -1.0;
  int k = 0;
  while (gnorm > rep.stop_threshold && k < config.k_max) {
    const double alpha = obj.step_size(f, dir, state);
    f.axpy(alpha, dir);
    ++k;
    state = solve_forward(sys, f);
    const SpaceTimeField grad_new = obj.gradient(f, state);
    const double gnorm_new = obj.norm(grad_new);
    rep.alphas.push_back(alpha);
    rep.j_history.push_back(obj.cost(f, state));
    rep.grad_norm_history.push_back(gnorm_new);
    if (gnorm_new <= rep.stop_threshold || k >= config.k_max) {
      grad = grad_new;
      gnorm = gnorm_new;
      break;
    }
    double beta = pr_beta(grad_new, grad, sys.mass());
    if (beta < 0.0) {
      beta = 0.0;
      ++rep.pr_restarts;
    }
    rep.betas.push_back(beta);
    dir *= beta;
    dir -= grad_new;
    grad = grad_new;
    gnorm = gnorm_new;
  }

  rep.minimizer = std::move(f);
  rep.state = std::move(state);
  rep.iterations = k;
  rep.stop = gnorm <= rep.stop_threshold ? StopReason::converged : StopReason::iteration_limit;
  return rep;
}

}  // namespace parasrc
