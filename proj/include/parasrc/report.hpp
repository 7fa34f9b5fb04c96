#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "version.hpp"

namespace parasrc {

inline void write_table_csv(const std::vector<EocRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_table_csv: cannot open " + path);
  out << "level,h,delta,rho,state_l2_omega,state_l2_sigma,source_l2\n";
  for (const auto& r : rows)
    out << r.level << "," << format_g17(r.h) << "," << format_g17(r.delta) << "," << format_g17(r.rho) << ","
        << format_g17(r.state_l2) << "," << format_g17(r.state_sigma) << "," << format_g17(r.source_l2) << "\n";
}

inline std::vector<EocRow> read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_table_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_table_csv: empty file");
  if (line.rfind("level,", 0) != 0) throw std::runtime_error("read_table_csv: unexpected header");
  std::vector<EocRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("read_table_csv: bad row '" + line + "'");
    EocRow r;
    r.level = std::stoi(cells[0]);
    r.h = std::stod(cells[1]);
    r.delta = std::stod(cells[2]);
    r.rho = std::stod(cells[3]);
    r.state_l2 = std::stod(cells[4]);
    r.state_sigma = std::stod(cells[5]);
    r.source_l2 = std::stod(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

// EOC of the transition to each level (first row has no predecessor), plus a mean row.
inline void write_eoc_csv(const EocTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_eoc_csv: cannot open " + path);
  out << "level,state_l2_omega,state_l2_sigma,source_l2\n";
  for (size_t i = 0; i < table.rows.size(); ++i) {
    out << table.rows[i].level;
    if (i == 0) {
      out << ",,,\n";
    } else {
      out << "," << format_g17(table.state_l2.eoc[i - 1]) << "," << format_g17(table.state_sigma.eoc[i - 1]) << ","
          << format_g17(table.source_l2.eoc[i - 1]) << "\n";
    }
  }
  if (!table.state_l2.eoc.empty())
    out << "mean," << format_g17(table.state_l2.mean) << "," << format_g17(table.state_sigma.mean) << ","
        << format_g17(table.source_l2.mean) << "\n";
}

inline void write_trace_csv(const CGReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "k,J,grad_norm,alpha,beta\n";
  for (size_t k = 0; k < rep.j_history.size(); ++k) {
    out << k << "," << format_g17(rep.j_history[k]) << "," << format_g17(rep.grad_norm_history[k]) << ",";
    if (k < rep.alphas.size()) out << format_g17(rep.alphas[k]);
    out << ",";
    if (k >= 1 && k - 1 < rep.betas.size()) out << format_g17(rep.betas[k - 1]);
    out << "\n";
  }
}

struct ProbeRecord {
  std::string probe;  // e.g. "P1"
  char axis;          // 't', 'x' or 'y'
  ProbeSeries recovered;
  ProbeSeries exact;
};

inline void write_probes_csv(const std::vector<ProbeRecord>& probes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_probes_csv: cannot open " + path);
  out << "probe,axis,coord,recovered,exact\n";
  for (const auto& p : probes)
    for (size_t i = 0; i < p.recovered.coord.size(); ++i)
      out << p.probe << "," << p.axis << "," << format_g17(p.recovered.coord[i]) << ","
          << format_g17(p.recovered.value[i]) << "," << format_g17(p.exact.value[i]) << "\n";
}

// Reads a field CSV written by write_field_csv; grid and node count are
// inferred from the rows.
inline SpaceTimeField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_field_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "n,t,node,value")
    throw std::runtime_error("read_field_csv: unexpected header in " + path);
  int max_slab = 0, max_node = -1;
  double t_max = 0.0;
  struct Row {
    int n, node;
    double value;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string c0, c1, c2, c3;
    if (!std::getline(ss, c0, ',') || !std::getline(ss, c1, ',') || !std::getline(ss, c2, ',') ||
        !std::getline(ss, c3, ','))
      throw std::runtime_error("read_field_csv: bad row '" + line + "'");
    Row r{std::stoi(c0), std::stoi(c2), std::stod(c3)};
    rows.push_back(r);
    max_slab = std::max(max_slab, r.n);
    max_node = std::max(max_node, r.node);
    t_max = std::max(t_max, std::stod(c1));
  }
  if (rows.empty()) throw std::runtime_error("read_field_csv: no data in " + path);
  SpaceTimeField f = SpaceTimeField::zero(TimeGrid{t_max, max_slab}, max_node + 1);
  for (const auto& r : rows) f.slab(r.n)[r.node] = r.value;
  return f;
}

inline nlohmann::json scenario_manifest(const ScenarioResult& res, const ExperimentSpec* spec,
                                        double total_seconds) {
  nlohmann::json j;
  j["tool"] = "parasrc";
  j["version"] = kVersion;
  j["scenario"] = res.scenario.name;
  if (!res.scenario.variant.empty()) j["variant"] = res.scenario.variant;
  j["domain"] = {res.scenario.domain.x0, res.scenario.domain.y0, res.scenario.domain.x1, res.scenario.domain.y1};
  j["T"] = res.scenario.T;
  j["gamma"] = res.scenario.gamma.to_string();
  j["couplings"] = {{"tau_over_h", res.scenario.tau_over_h},
                    {"rho_over_h", res.scenario.rho_over_h},
                    {"delta_over_h2", res.scenario.delta_over_h2}};
  j["seed"] = res.options.seed;
  j["tolerances"] = {{"tau_a", res.options.tau_a}, {"tau_r", res.options.tau_r}, {"k_max", res.options.k_max}};
  j["jobs"] = res.options.jobs;
  j["data_grid"] = res.options.data_on_working_grid ? "working" : "refined";
  if (spec) j["config"] = emit_config(*spec);
  j["total_seconds"] = total_seconds;
  auto& levels = j["levels"] = nlohmann::json::array();
  for (const auto& lr : res.levels) {
    nlohmann::json lj;
    lj["level"] = lr.level.index;
    lj["h_nominal"] = lr.level.h;
    lj["n_subdiv"] = lr.level.n_subdiv;
    lj["M"] = lr.level.M;
    lj["tau"] = lr.level.tau;
    lj["rho"] = lr.level.rho;
    lj["delta"] = lr.level.delta * res.options.delta_factor;
    lj["seed"] = lr.seed;
    if (lr.failed) {
      lj["failed"] = true;
      lj["error"] = lr.error;
      levels.push_back(lj);
      continue;
    }
    lj["h_mesh"] = lr.mesh.h;
    lj["iterations"] = lr.report.iterations;
    lj["stop"] = lr.report.stop == StopReason::converged ? "converged" : "iteration_limit";
    lj["stop_threshold"] = lr.report.stop_threshold;
    lj["J_final"] = lr.report.j_history.back();
    lj["grad_norm_final"] = lr.report.grad_norm_history.back();
    lj["errors"] = {{"state_l2_omega", lr.errors.state_l2},
                    {"state_l2_sigma", lr.errors.state_sigma},
                    {"source_l2", lr.errors.source_l2}};
    lj["seconds"] = lr.elapsed_seconds;
    levels.push_back(lj);
  }
  return j;
}

// Writes table.csv, eoc.csv, per-level CG traces, probe series and the
// manifest into `dir`.
inline void emit_report(const ScenarioResult& res, const std::string& dir, const ExperimentSpec* spec = nullptr,
                        double total_seconds = 0.0) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::runtime_error("emit_report: cannot create directory " + dir);

  write_table_csv(res.table.rows, dir + "/table.csv");
  write_eoc_csv(res.table, dir + "/eoc.csv");
  for (const auto& lr : res.levels)
    if (!lr.failed) write_trace_csv(lr.report, dir + "/trace_" + std::to_string(lr.level.index) + ".csv");

  // recovered vs exact source at the two probe nodes of the finest level
  if (!res.levels.empty() && !res.levels.back().failed) {
    const auto& lr = res.levels.back();
    std::vector<ProbeRecord> probes;
    for (const auto& [label, pt] : {std::pair<std::string, std::array<double, 2>>{"P1", res.scenario.probe1},
                                    std::pair<std::string, std::array<double, 2>>{"P2", res.scenario.probe2}}) {
      const int node = closest_node(lr.mesh, pt[0], pt[1]);
      ProbeRecord rec;
      rec.probe = label;
      rec.axis = 't';
      rec.recovered = probe_time_series(lr.report.minimizer, node);
      rec.exact = probe_time_series(lr.exact_source, node);
      probes.push_back(std::move(rec));
    }
    write_probes_csv(probes, dir + "/probes.csv");
  }

  std::ofstream mf(dir + "/manifest.json");
  if (!mf) throw std::runtime_error("emit_report: cannot write manifest");
  mf << scenario_manifest(res, spec, total_seconds).dump(2) << "\n";
}

}  // namespace parasrc
