#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <parasrc/parasrc.hpp>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitSelfTest = 4;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parasrc::ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

parasrc::SpaceTimeField random_field(const parasrc::TimeGrid& grid, int nodes, std::uint64_t seed) {
  parasrc::detail::UniformRng rng(seed);
  auto f = parasrc::SpaceTimeField::zero(grid, nodes);
  for (auto& slab : f.slabs)
    for (int i = 0; i < nodes; ++i) slab[i] = rng.next() - 0.5;
  return f;
}

// Central-difference check of the adjoint gradient on the standard
// coefficient set; returns the max relative error over `dirs` directions.
double gradient_check(double h, int m, std::uint64_t seed, int dirs = 5) {
  using namespace parasrc;
  const RectBounds bounds{-1.0, -1.0, 1.0, 1.0};
  Mesh mesh = tag_boundary(build_rect_mesh(bounds, subdivisions_for(bounds, h)), BoundarySpec::all());
  const TimeGrid grid{1.0, m};
  CnSystem sys(mesh, grid, standard_coefficients(0.4, 0.4), BoundarySpec::all());
  const int nodes = mesh.node_count();

  // observation from a fixed source plus noise, so the misfit is nontrivial
  const SpaceTimeField f_true = slab_average([](double x, double y, double t) { return (x * x + y) * t; }, grid, mesh);
  const Trajectory u_true = solve_forward(sys, f_true);
  std::vector<NodalField> trace(grid.M, NodalField::Zero(nodes));
  for (int n = 1; n <= grid.M; ++n)
    for (int id : sys.gamma_nodes()) trace[n - 1][id] = u_true.level(n)[id];
  const BoundaryObservation z =
      synthesize_observation(trace, grid, sys.gamma_nodes(), sys.boundary_mass(), 0.01, seed);

  const SpaceTimeField f_star = SpaceTimeField::zero(grid, nodes);
  const Objective obj(sys, z, f_star, 0.01);
  const SpaceTimeField f = random_field(grid, nodes, seed + 1);
  const SpaceTimeField grad = evaluate_gradient(f, obj);

  const double eps = 1e-5;
  double worst = 0.0;
  for (int d = 0; d < dirs; ++d) {
    const SpaceTimeField xi = random_field(grid, nodes, seed + 2 + d);
    SpaceTimeField fp = f, fm = f;
    fp.axpy(eps, xi);
    fm.axpy(-eps, xi);
    const double fd = (evaluate_cost(fp, obj) - evaluate_cost(fm, obj)) / (2.0 * eps);
    const double dir_deriv = obj.inner(grad, xi);
    const double denom = std::max({std::abs(fd), std::abs(dir_deriv), 1e-14});
    worst = std::max(worst, std::abs(fd - dir_deriv) / denom);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parasrc: recover parabolic source terms from boundary observations"};
  app.require_subcommand(1);

  // scenario
  auto* cmd_scenario = app.add_subcommand("scenario", "run a benchmark scenario over refinement levels");
  std::string sc_name, sc_config, sc_out = "out", sc_format = "csv";
  int sc_levels = 0, sc_jobs = 0;
  std::int64_t sc_seed = -1;
  cmd_scenario->add_option("name", sc_name,
                           "time_dependent | space_dependent | general | source_condition");
  cmd_scenario->add_option("--config", sc_config, "config file (overrides defaults)");
  cmd_scenario->add_option("--levels", sc_levels, "run levels 1..N");
  cmd_scenario->add_option("--out", sc_out, "output directory");
  cmd_scenario->add_option("--seed", sc_seed, "noise seed");
  cmd_scenario->add_option("--jobs", sc_jobs, "levels solved concurrently");
  cmd_scenario->add_option("--format", sc_format, "output format (csv)");

  // solve
  auto* cmd_solve = app.add_subcommand("solve", "single inversion from a config file");
  cmd_solve->set_help_flag("--help", "print help");
  std::string so_config, so_out;
  double so_h = 0.0;
  std::int64_t so_seed = -1;
  cmd_solve->add_option("--config", so_config, "config file")->required();
  cmd_solve->add_option("--out", so_out, "output directory (overrides config)");
  cmd_solve->add_option("--h", so_h, "target mesh size for the single run");
  cmd_solve->add_option("--seed", so_seed, "noise seed");

  // eoc
  auto* cmd_eoc = app.add_subcommand("eoc", "convergence orders from an error table");
  std::string eoc_table, eoc_out;
  cmd_eoc->add_option("--table", eoc_table, "table.csv produced by a scenario run")->required();
  cmd_eoc->add_option("--out", eoc_out, "directory for eoc.csv (default: print only)");

  // gradient-check
  auto* cmd_grad = app.add_subcommand("gradient-check", "adjoint gradient vs central differences");
  cmd_grad->set_help_flag("--help", "print help");
  double gc_h = 0.5;
  int gc_m = 4;
  std::uint64_t gc_seed = 1;
  cmd_grad->add_option("--h", gc_h, "target mesh size");
  cmd_grad->add_option("--M", gc_m, "time steps");
  cmd_grad->add_option("--seed", gc_seed, "seed");

  // probe
  auto* cmd_probe = app.add_subcommand("probe", "extract a probe series from exported fields");
  std::string pr_mesh, pr_field, pr_point, pr_along = "t", pr_out;
  double pr_time = 0.5;
  cmd_probe->add_option("--mesh", pr_mesh, "mesh file (mesh.txt)")->required();
  cmd_probe->add_option("--field", pr_field, "field CSV (n,t,node,value)")->required();
  cmd_probe->add_option("--point", pr_point, "probe point \"x,y\"")->required();
  cmd_probe->add_option("--along", pr_along, "series axis: t, x or y");
  cmd_probe->add_option("--time", pr_time, "time for spatial slices");
  cmd_probe->add_option("--out", pr_out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  using namespace parasrc;
  try {
    if (*cmd_scenario || *cmd_solve) {
      const bool single = static_cast<bool>(*cmd_solve);
      const std::string& cfg_path = single ? so_config : sc_config;
      ExperimentSpec spec;
      if (!cfg_path.empty()) spec = parse_config(slurp(cfg_path));
      if (!single && !sc_name.empty()) spec.scenario = sc_name;
      if (!single && sc_name.empty() && cfg_path.empty())
        throw ConfigError("scenario: give a scenario name or --config");
      if (!single && sc_levels > 0) {
        spec.levels.clear();
        for (int l = 1; l <= sc_levels; ++l) spec.levels.push_back(l);
      }
      if (single && so_h > 0.0) spec.h = so_h;
      if (single && spec.h == 0.0 && spec.levels.size() > 1) spec.levels = {spec.levels.front()};
      const std::int64_t seed_flag = single ? so_seed : sc_seed;
      if (seed_flag >= 0) spec.seed = static_cast<std::uint64_t>(seed_flag);
      if (!single && sc_jobs > 0) spec.jobs = sc_jobs;
      if (!single && sc_format != "csv") throw ConfigError("only --format csv is supported");
      std::string out_dir = spec.out_dir;
      if (single && !so_out.empty()) out_dir = so_out;
      if (!single && sc_out != "out") out_dir = sc_out;
      else if (!single && spec.out_dir == "out") out_dir = sc_out;

      const Scenario sc = build_scenario(spec);
      const RunOptions opt = build_run_options(spec);
      const auto t0 = std::chrono::steady_clock::now();
      const ScenarioResult res = run_scenario(sc, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      emit_report(res, out_dir, cfg_path.empty() ? nullptr : &spec, secs);
      if (single && !res.levels.empty() && !res.levels.back().failed) {
        const auto& lr = res.levels.back();
        save_mesh(lr.mesh, out_dir + "/mesh.txt");
        write_field_csv(lr.report.minimizer, out_dir + "/source.csv");
        write_trajectory_csv(lr.report.state, out_dir + "/state.csv");
      }
      bool any_failed = false;
      for (const auto& lr : res.levels) {
        if (lr.failed) {
          any_failed = true;
          std::cout << "level " << lr.level.index << ": FAILED (" << lr.error << ")\n";
          continue;
        }
        std::cout << "level " << lr.level.index << ": h=" << lr.level.h << " M=" << lr.level.M
                  << " iters=" << lr.report.iterations
                  << (lr.report.stop == StopReason::converged ? "" : " (iteration limit)")
                  << " state_l2=" << format_g17(lr.errors.state_l2)
                  << " source_l2=" << format_g17(lr.errors.source_l2) << "\n";
      }
      if (res.table.rows.size() >= 2)
        std::cout << "mean EOC: state_l2=" << res.table.state_l2.mean
                  << " state_sigma=" << res.table.state_sigma.mean << " source_l2=" << res.table.source_l2.mean
                  << "\n";
      std::cout << "report written to " << out_dir << "\n";
      return any_failed ? kExitSolver : kExitOk;
    }

    if (*cmd_eoc) {
      const auto rows = read_table_csv(eoc_table);
      const EocTable table = make_eoc_table(rows);
      std::cout << "level,state_l2_omega,state_l2_sigma,source_l2\n";
      for (size_t i = 1; i < table.rows.size(); ++i)
        std::cout << table.rows[i].level << "," << format_g17(table.state_l2.eoc[i - 1]) << ","
                  << format_g17(table.state_sigma.eoc[i - 1]) << "," << format_g17(table.source_l2.eoc[i - 1])
                  << "\n";
      std::cout << "mean," << format_g17(table.state_l2.mean) << "," << format_g17(table.state_sigma.mean) << ","
                << format_g17(table.source_l2.mean) << "\n";
      if (!eoc_out.empty()) {
        std::filesystem::create_directories(eoc_out);
        write_eoc_csv(table, eoc_out + "/eoc.csv");
      }
      return kExitOk;
    }

    if (*cmd_grad) {
      const double worst = gradient_check(gc_h, gc_m, gc_seed);
      std::cout << "max relative gradient error: " << format_g17(worst) << " (tolerance 1e-6)\n";
      return worst <= 1e-6 ? kExitOk : kExitSelfTest;
    }

    if (*cmd_probe) {
      const Mesh mesh = load_mesh(pr_mesh);
      const SpaceTimeField f = read_field_csv(pr_field);
      double px = 0.0, py = 0.0;
      if (std::sscanf(pr_point.c_str(), "%lf,%lf", &px, &py) != 2)
        throw ConfigError("probe: --point expects \"x,y\"");
      const int node = closest_node(mesh, px, py);
      ProbeSeries series;
      if (pr_along == "t") series = probe_time_series(f, node);
      else if (pr_along == "x" || pr_along == "y")
        series = probe_space_series(mesh, f, node, pr_along[0], pr_time);
      else throw ConfigError("probe: --along must be t, x or y");
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!pr_out.empty()) {
        file.open(pr_out);
        if (!file) throw std::runtime_error("probe: cannot open " + pr_out);
        out = &file;
      }
      *out << "axis,coord,value\n";
      for (size_t i = 0; i < series.coord.size(); ++i)
        *out << pr_along << "," << format_g17(series.coord[i]) << "," << format_g17(series.value[i]) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ExpressionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
