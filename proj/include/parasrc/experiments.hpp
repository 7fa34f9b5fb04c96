#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "inverse.hpp"
#include "observation.hpp"
#include "pde.hpp"

namespace parasrc {

// One benchmark problem family. Levels halve the nominal mesh size starting
// from base_h; tau, rho and delta follow the nominal size through the
// coupling constants.
struct Scenario {
  std::string name;
  std::string variant;  // time_dependent sub-case "a" | "b" | "c"
  RectBounds domain{-1.0, -1.0, 1.0, 1.0};
  double T = 1.0;
  CoefficientSet coeffs;
  BoundarySpec gamma = BoundarySpec::all();

  std::function<double(double, double, double)> source;                    // exact source, analytic
  std::function<double(double, double, double, double)> source_slab_avg;   // optional exact slab mean
  bool source_space_discontinuous = false;   // switches the source error to centroid quadrature
  bool source_generated = false;             // source comes from the backward generator solve
  double w = 0.0;                            // generator flux on Sigma

  enum class Prior { informed, zero, expression };
  Prior prior = Prior::informed;
  std::function<double(double, double, double)> prior_expr;

  double tau_over_h = 0.25, rho_over_h = 0.01, delta_over_h2 = 0.5;
  double base_h = 0.8;
  int base_n = 4;

  std::array<double, 2> probe1{-0.1, -0.5};
  std::array<double, 2> probe2{0.5, 0.6};
};

struct Level {
  int index = 1;
  double h = 0.8;  // nominal size driving the couplings
  int n_subdiv = 4;
  int M = 5;
  double tau = 0.2, rho = 0.008, delta = 0.32;
};

inline Level make_level(const Scenario& sc, int l) {
  if (l < 1) throw std::invalid_argument("make_level: level index must be >= 1");
  Level lv;
  lv.index = l;
  lv.h = sc.base_h / static_cast<double>(1 << (l - 1));
  lv.n_subdiv = sc.base_n << (l - 1);
  const int base_m = std::max(1, static_cast<int>(std::lround(sc.T / (sc.tau_over_h * sc.base_h))));
  lv.M = base_m << (l - 1);
  lv.tau = sc.T / lv.M;
  lv.rho = sc.rho_over_h * lv.h;
  lv.delta = sc.delta_over_h2 * lv.h * lv.h;
  return lv;
}

// ---- scenario factories -------------------------------------------------

inline CoefficientSet standard_coefficients(double g, double q) {
  CoefficientSet c = constant_coefficients(3.0, 1.0, 2.0, 1.0, 1.0, g, q);
  return c;
}

inline Scenario make_time_dependent_scenario(const std::string& variant = "a") {
  Scenario sc;
  sc.name = "time_dependent";
  sc.variant = variant;
  sc.coeffs = standard_coefficients(0.4, 0.4);
  sc.gamma = BoundarySpec::line('y', -1.0);
  if (variant == "a") {
    sc.source = [](double, double, double t) {
      const double u = 2.0 * t - 1.0;
      return u * u * std::sin(u);
    };
    sc.source_slab_avg = [](double, double, double t0, double t1) {
      auto anti = [](double t) {
        const double u = 2.0 * t - 1.0;
        return 0.5 * ((2.0 - u * u) * std::cos(u) + 2.0 * u * std::sin(u));
      };
      return (anti(t1) - anti(t0)) / (2.0 * (t1 - t0));
    };
  } else if (variant == "b") {
    sc.source = [](double, double, double t) { return 0.5 - std::abs(0.5 - t); };
    sc.source_slab_avg = [](double, double, double t0, double t1) {
      auto anti = [](double t) {  // antiderivative of |0.5 - t|
        return t <= 0.5 ? 0.5 * t - 0.5 * t * t : 0.125 + 0.5 * (t - 0.5) * (t - 0.5);
      };
      return 0.5 - (anti(t1) - anti(t0)) / (t1 - t0);
    };
  } else if (variant == "c") {
    sc.source = [](double, double, double t) { return t > 0.5 ? 0.5 : t < 0.5 ? 0.0 : 0.25; };
    sc.source_slab_avg = [](double, double, double t0, double t1) {
      return 0.5 * std::max(0.0, t1 - std::max(t0, 0.5)) / (t1 - t0);
    };
  } else {
    throw std::invalid_argument("time_dependent variant must be a, b or c");
  }
  return sc;
}

inline Scenario make_space_dependent_scenario() {
  Scenario sc;
  sc.name = "space_dependent";
  sc.coeffs = standard_coefficients(0.4, 0.4);
  sc.gamma = BoundarySpec::all();
  sc.source = [](double x, double y, double) { return x * x + y * y < 0.25 ? 0.5 : 0.0; };
  sc.source_slab_avg = [](double x, double y, double, double) { return x * x + y * y < 0.25 ? 0.5 : 0.0; };
  sc.source_space_discontinuous = true;
  return sc;
}

inline Scenario make_general_scenario() {
  Scenario sc;
  sc.name = "general";
  sc.coeffs = constant_coefficients(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
  sc.gamma = BoundarySpec::all();
  sc.source = [](double x, double y, double t) {
    const double px = (x * x - 1.0), py = (y * y - 1.0);
    return px * px * py * py - t * px * px * (12.0 * y * y - 4.0) - t * (12.0 * x * x - 4.0) * py * py;
  };
  return sc;
}

inline Scenario make_source_condition_scenario() {
  Scenario sc;
  sc.name = "source_condition";
  sc.coeffs = standard_coefficients(0.4, 0.4);
  sc.gamma = BoundarySpec::all();
  sc.source_generated = true;
  sc.w = 0.2;
  sc.prior = Scenario::Prior::expression;
  sc.prior_expr = [](double x, double y, double t) { return (x * x + y) * t; };
  return sc;
}

inline Scenario make_scenario(const std::string& name, const std::string& variant = "a") {
  if (name == "time_dependent") return make_time_dependent_scenario(variant);
  if (name == "space_dependent") return make_space_dependent_scenario();
  if (name == "general") return make_general_scenario();
  if (name == "source_condition") return make_source_condition_scenario();
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

// ---- field sampling helpers ---------------------------------------------

inline SpaceTimeField sample_source(const Scenario& sc, const Mesh& mesh, const TimeGrid& grid) {
  if (sc.source_slab_avg) return slab_average_exact(sc.source_slab_avg, grid, mesh);
  if (!sc.source) throw std::logic_error("sample_source: scenario has no analytic source");
  return slab_average(sc.source, grid, mesh);
}

// Mean of the exact source over the space-time cylinder, centroid quadrature
// per element per slab on the given discretization.
inline double source_mean(const Scenario& sc, const Mesh& mesh, const TimeGrid& grid) {
  auto slab_avg = [&](double x, double y, int n) {
    if (sc.source_slab_avg) return sc.source_slab_avg(x, y, grid.slab_begin(n), grid.slab_end(n));
    const double off = 0.5 / std::sqrt(3.0) * grid.tau();
    return 0.5 * (sc.source(x, y, grid.slab_mid(n) - off) + sc.source(x, y, grid.slab_mid(n) + off));
  };
  double acc = 0.0, area = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto e = detail::p1_element(mesh, t);
    area += e.area;
    for (int n = 1; n <= grid.M; ++n) acc += e.area * grid.tau() * slab_avg(e.cx, e.cy, n);
  }
  return acc / (area * grid.T);
}

// ---- error norms ---------------------------------------------------------

struct ErrorNorms {
  double state_l2 = 0.0;     // L2(Omega_T)
  double state_sigma = 0.0;  // L2(Sigma)
  double source_l2 = 0.0;    // L2(Omega_T)
};

// State errors compare time-level values (weight tau per level); the source
// error compares slab fields in the mass norm.
inline ErrorNorms error_norms(const Trajectory& u_exact, const Trajectory& u_rec, const SpaceTimeField& f_exact,
                              const SpaceTimeField& f_rec, const SparseSymMatrix& mass,
                              const SparseSymMatrix& bmass) {
  if (u_exact.grid.M != u_rec.grid.M) throw std::invalid_argument("error_norms: grid mismatch");
  ErrorNorms e;
  const double tau = u_rec.grid.tau();
  double sl2 = 0.0, ssig = 0.0;
  for (int n = 1; n <= u_rec.grid.M; ++n) {
    const NodalField d = u_exact.level(n) - u_rec.level(n);
    sl2 += d.dot(mass * d);
    ssig += d.dot(bmass * d);
  }
  e.state_l2 = std::sqrt(tau * sl2);
  e.state_sigma = std::sqrt(tau * ssig);
  SpaceTimeField df = f_exact;
  df -= f_rec;
  e.source_l2 = l2_norm(df, mass);
  return e;
}

// Source error against the analytic (possibly discontinuous) source by
// centroid quadrature per element per slab.
inline double source_error_centroid(const Scenario& sc, const Mesh& mesh, const SpaceTimeField& f_rec) {
  const TimeGrid& grid = f_rec.grid;
  auto slab_avg = [&](double x, double y, int n) {
    if (sc.source_slab_avg) return sc.source_slab_avg(x, y, grid.slab_begin(n), grid.slab_end(n));
    const double off = 0.5 / std::sqrt(3.0) * grid.tau();
    return 0.5 * (sc.source(x, y, grid.slab_mid(n) - off) + sc.source(x, y, grid.slab_mid(n) + off));
  };
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto e = detail::p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int n = 1; n <= grid.M; ++n) {
      const double rec = (f_rec.slab(n)[tri[0]] + f_rec.slab(n)[tri[1]] + f_rec.slab(n)[tri[2]]) / 3.0;
      const double d = slab_avg(e.cx, e.cy, n) - rec;
      acc += e.area * grid.tau() * d * d;
    }
  }
  return std::sqrt(acc);
}

// ---- EOC -----------------------------------------------------------------

struct EocColumn {
  std::vector<double> eoc;  // eoc[l] = log2(e_l / e_{l+1})
  double mean = 0.0;
};

inline EocColumn compute_eoc(const std::vector<double>& errors) {
  if (errors.size() < 2) throw std::invalid_argument("compute_eoc: need at least two levels");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("compute_eoc: errors must be positive");
  EocColumn c;
  for (size_t i = 0; i + 1 < errors.size(); ++i) c.eoc.push_back(std::log2(errors[i] / errors[i + 1]));
  double s = 0.0;
  for (double v : c.eoc) s += v;
  c.mean = s / c.eoc.size();
  return c;
}

struct EocRow {
  int level = 0;
  double h = 0.0, delta = 0.0, rho = 0.0;
  double state_l2 = 0.0, state_sigma = 0.0, source_l2 = 0.0;
};

struct EocTable {
  std::vector<EocRow> rows;
  EocColumn state_l2, state_sigma, source_l2;
};

inline EocTable make_eoc_table(const std::vector<EocRow>& rows) {
  EocTable t;
  t.rows = rows;
  std::vector<double> a, b, c;
  for (const auto& r : rows) {
    a.push_back(r.state_l2);
    b.push_back(r.state_sigma);
    c.push_back(r.source_l2);
  }
  if (rows.size() >= 2) {
    t.state_l2 = compute_eoc(a);
    t.state_sigma = compute_eoc(b);
    t.source_l2 = compute_eoc(c);
  }
  return t;
}

// ---- probes ----------------------------------------------------------------

struct ProbeSeries {
  std::vector<double> coord;
  std::vector<double> value;
};

// Value of a slab field at one node against slab midpoints.
inline ProbeSeries probe_time_series(const SpaceTimeField& f, int node) {
  if (node < 0 || node >= f.node_count()) throw std::invalid_argument("probe_time_series: node out of range");
  ProbeSeries s;
  for (int n = 1; n <= f.slab_count(); ++n) {
    s.coord.push_back(f.grid.slab_mid(n));
    s.value.push_back(f.slab(n)[node]);
  }
  return s;
}

// Values along the mesh line through `node` parallel to `axis` at the slab
// containing time t.
inline ProbeSeries probe_space_series(const Mesh& mesh, const SpaceTimeField& f, int node, char axis, double t) {
  if (node < 0 || node >= mesh.node_count()) throw std::invalid_argument("probe_space_series: node out of range");
  if (axis != 'x' && axis != 'y') throw std::invalid_argument("probe_space_series: axis must be x or y");
  const int vary = axis == 'x' ? 0 : 1;
  const int fixed = 1 - vary;
  const double anchor = mesh.nodes[node][fixed];
  int slab = std::min(f.slab_count(), std::max(1, static_cast<int>(std::ceil(t / f.grid.tau() - 1e-12))));
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < mesh.node_count(); ++i)
    if (std::abs(mesh.nodes[i][fixed] - anchor) <= 1e-9) pts.emplace_back(mesh.nodes[i][vary], f.slab(slab)[i]);
  if (pts.size() < 2) throw std::invalid_argument("probe_space_series: node is not on a mesh line");
  std::sort(pts.begin(), pts.end());
  ProbeSeries s;
  for (const auto& [c, v] : pts) {
    s.coord.push_back(c);
    s.value.push_back(v);
  }
  return s;
}

// ---- scenario driver -------------------------------------------------------

struct RunOptions {
  std::vector<int> levels{1, 2, 3, 4};
  std::uint64_t seed = 1;
  double tau_a = 1e-10;
  double tau_r = 1e-6;
  int k_max = 500;
  int jobs = 1;
  double delta_factor = 1.0;        // scales the coupled noise level; 0 gives exact data
  double rho_override = 0.0;        // > 0 replaces the coupled rho at every level
  double delta_override = -1.0;     // >= 0 replaces the coupled delta at every level
  bool data_on_working_grid = false;  // skip the fine-grid synthesis (self-consistency runs)
  bool prior_exact = false;           // f* := exact source (overrides the scenario prior)
};

inline Level make_level(const Scenario& sc, int l, const RunOptions& opt) {
  Level lv = make_level(sc, l);
  if (opt.rho_override > 0.0) lv.rho = opt.rho_override;
  if (opt.delta_override >= 0.0) lv.delta = opt.delta_override;
  return lv;
}

struct LevelResult {
  Level level;
  std::uint64_t seed = 0;
  ErrorNorms errors;
  CGReport report;
  SpaceTimeField exact_source;   // reference on the working discretization
  Trajectory exact_state;        // reference on the working discretization
  Mesh mesh;                     // working mesh
  double elapsed_seconds = 0.0;
  bool failed = false;           // level aborted; `error` holds the reason
  std::string error;
};

struct ScenarioResult {
  Scenario scenario;
  RunOptions options;
  std::vector<LevelResult> levels;
  EocTable table;
};

inline LevelResult run_level(const Scenario& sc, const Level& lv, const RunOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  LevelResult out;
  out.level = lv;
  out.seed = opt.seed + static_cast<std::uint64_t>(lv.index);

  // working discretization
  Mesh base = build_rect_mesh(sc.domain, sc.base_n);
  Mesh mesh = tag_boundary(base, sc.gamma);
  for (int l = 1; l < lv.index; ++l) mesh = refine(mesh);
  const TimeGrid grid{sc.T, lv.M};
  CnSystem sys(mesh, grid, sc.coeffs, sc.gamma);

  // data discretization (one refinement in space and time unless disabled)
  const bool fine_data = !opt.data_on_working_grid;
  Mesh fine_mesh = fine_data ? refine(mesh) : mesh;
  const TimeGrid fine_grid{sc.T, fine_data ? 2 * lv.M : lv.M};
  CnSystem fine_sys(fine_mesh, fine_grid, sc.coeffs, sc.gamma);

  // exact source on the data discretization
  SpaceTimeField f_exact_fine;
  if (sc.source_generated) {
    const Trajectory gen = solve_source_condition(fine_sys, [&](double, double, double) { return sc.w; });
    f_exact_fine = slab_average(sc.prior_expr, fine_grid, fine_mesh);
    for (int n = 1; n <= fine_grid.M; ++n)
      f_exact_fine.slab(n) += 0.5 * (gen.level(n - 1) + gen.level(n));
  } else {
    f_exact_fine = sample_source(sc, fine_mesh, fine_grid);
  }

  // exact state and its restriction to the working discretization
  const Trajectory u_exact_fine = solve_forward(fine_sys, f_exact_fine);
  const int nw = mesh.node_count();
  out.exact_state = Trajectory::zero(grid, nw);
  const int ratio = fine_grid.M / grid.M;
  for (int n = 0; n <= grid.M; ++n) out.exact_state.level(n) = u_exact_fine.level(ratio * n).head(nw);

  if (sc.source_generated) {
    out.exact_source = head_nodes(slab_means(f_exact_fine, grid), nw);
  } else {
    out.exact_source = sample_source(sc, mesh, grid);
  }

  // observation: the data-grid trace at the working time levels (slab-end
  // convention of the model), noise scaled to delta
  std::vector<NodalField> trace_slabs(grid.M, NodalField::Zero(nw));
  for (int n = 1; n <= grid.M; ++n)
    for (int id : sys.gamma_nodes()) trace_slabs[n - 1][id] = u_exact_fine.level(ratio * n)[id];
  const double delta = lv.delta * opt.delta_factor;
  const BoundaryObservation z =
      synthesize_observation(trace_slabs, grid, sys.gamma_nodes(), sys.boundary_mass(), delta, out.seed);

  // prior
  InverseConfig cfg;
  cfg.rho = lv.rho;
  cfg.tau_a = opt.tau_a;
  cfg.tau_r = opt.tau_r;
  cfg.k_max = opt.k_max;
  cfg.f0 = SpaceTimeField::zero(grid, nw);
  if (opt.prior_exact) {
    cfg.f_star = out.exact_source;
  } else {
    switch (sc.prior) {
      case Scenario::Prior::zero:
        cfg.f_star = SpaceTimeField::zero(grid, nw);
        break;
      case Scenario::Prior::expression:
        cfg.f_star = slab_average(sc.prior_expr, grid, mesh);
        break;
      case Scenario::Prior::informed: {
        const double mean = source_mean(sc, mesh, grid);
        cfg.f_star = sample_source(sc, mesh, grid);
        for (auto& slab : cfg.f_star.slabs) slab = 1.2 * slab - NodalField::Constant(nw, 0.2 * mean);
        break;
      }
    }
  }

  out.report = cg_minimize(cfg, sys, z);

  out.errors = error_norms(out.exact_state, out.report.state, out.exact_source, out.report.minimizer, sys.mass(),
                           sys.boundary_mass());
  if (sc.source_space_discontinuous)
    out.errors.source_l2 = source_error_centroid(sc, mesh, out.report.minimizer);

  out.mesh = std::move(mesh);
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

inline ScenarioResult run_scenario(const Scenario& sc, const RunOptions& opt) {
  ScenarioResult res;
  res.scenario = sc;
  res.options = opt;
  res.levels.resize(opt.levels.size());

  // a failing level is recorded in place, the others still run
  auto run_one = [&](size_t i) {
    try {
      res.levels[i] = run_level(sc, make_level(sc, opt.levels[i], opt), opt);
    } catch (const std::exception& e) {
      res.levels[i].level = make_level(sc, opt.levels[i], opt);
      res.levels[i].failed = true;
      res.levels[i].error = e.what();
    }
  };

  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(opt.levels.size())));
  if (jobs == 1) {
    for (size_t i = 0; i < opt.levels.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < opt.levels.size(); i = next.fetch_add(1)) run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<EocRow> rows;
  bool any_failed = false;
  for (const auto& lr : res.levels) {
    if (lr.failed) {
      any_failed = true;
      continue;
    }
    rows.push_back({lr.level.index, lr.level.h, lr.level.delta * opt.delta_factor, lr.level.rho,
                    lr.errors.state_l2, lr.errors.state_sigma, lr.errors.source_l2});
  }
  // orders are only meaningful over an unbroken halving chain
  res.table = (!any_failed && rows.size() >= 2) ? make_eoc_table(rows) : EocTable{rows, {}, {}, {}};
  return res;
}

}  // namespace parasrc
