#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "expression.hpp"
#include "experiments.hpp"
#include "fields.hpp"
#include "mesh.hpp"

namespace parasrc {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fully validated experiment description, parsed from a line-oriented
// "key = value" file with [problem], [numerics] and [output] sections.
struct ExperimentSpec {
  // [problem]
  std::string scenario = "space_dependent";  // named scenario or "custom"
  std::string variant = "a";                 // time_dependent sub-case
  std::array<double, 4> domain{-1.0, -1.0, 1.0, 1.0};
  double T = 1.0;
  std::string a11 = "3", a12 = "1", a22 = "2";
  std::string b = "1", sigma = "1", g = "0.4", q = "0.4";
  std::string source;                 // required for custom problems
  std::string f_star = "informed";    // informed (scenario default) | zero | expression
  std::string gamma;                  // empty = scenario default; else "all" or side lines
  double w = 0.2;
  double ellipticity = 0.0;           // 0 = estimate by sampling

  // [numerics]
  std::vector<int> levels{1, 2, 3, 4};
  double h = 0.0;                     // > 0: single run, base size h
  double tau_over_h = 0.25, rho_over_h = 0.01, delta_over_h2 = 0.5;
  double rho = 0.0;                   // > 0 overrides the coupling
  double delta = -1.0;                // >= 0 overrides the coupling
  double tau_a = 1e-10, tau_r = 1e-6;
  int k_max = 500;
  std::uint64_t seed = 1;
  int jobs = 1;

  // [output]
  std::string out_dir = "out";
  std::string format = "csv";

  bool operator==(const ExperimentSpec&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long to_long(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline std::vector<int> to_levels(const std::string& v, const std::string& key) {
  std::vector<int> out;
  const auto dots = v.find("..");
  if (dots != std::string::npos) {
    const int a = static_cast<int>(to_long(trim(v.substr(0, dots)), key));
    const int b = static_cast<int>(to_long(trim(v.substr(dots + 2)), key));
    if (a < 1 || b < a) throw ConfigError("config: key '" + key + "': bad level range");
    for (int l = a; l <= b; ++l) out.push_back(l);
    return out;
  }
  std::stringstream ss(v);
  std::string tok;
  while (ss >> tok) out.push_back(static_cast<int>(to_long(tok, key)));
  if (out.empty()) throw ConfigError("config: key '" + key + "': no levels given");
  for (int l : out)
    if (l < 1) throw ConfigError("config: key '" + key + "': levels must be >= 1");
  return out;
}

}  // namespace detail

inline ExperimentSpec parse_config(const std::string& text) {
  using detail::to_double;
  using detail::to_long;
  using detail::trim;

  ExperimentSpec spec;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool any_content = false;
  std::map<std::string, int> seen;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    any_content = true;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "numerics" && section != "output")
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    const std::string path = section.empty() ? key : section + "." + key;
    if (++seen[path] > 1)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + path + "'");

    if (section == "problem") {
      if (key == "scenario") spec.scenario = value;
      else if (key == "variant") spec.variant = value;
      else if (key == "domain") {
        std::stringstream ss(value);
        if (!(ss >> spec.domain[0] >> spec.domain[1] >> spec.domain[2] >> spec.domain[3]) || !(ss >> std::ws).eof())
          throw ConfigError("config: key 'problem.domain': expected four numbers x0 y0 x1 y1");
      } else if (key == "T") spec.T = to_double(value, path);
      else if (key == "a11") spec.a11 = value;
      else if (key == "a12") spec.a12 = value;
      else if (key == "a22") spec.a22 = value;
      else if (key == "b") spec.b = value;
      else if (key == "sigma") spec.sigma = value;
      else if (key == "g") spec.g = value;
      else if (key == "q") spec.q = value;
      else if (key == "source") spec.source = value;
      else if (key == "f_star") spec.f_star = value;
      else if (key == "gamma") spec.gamma = value;
      else if (key == "w") spec.w = to_double(value, path);
      else if (key == "ellipticity") spec.ellipticity = to_double(value, path);
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key 'problem." + key + "'");
    } else if (section == "numerics") {
      if (key == "levels") spec.levels = detail::to_levels(value, path);
      else if (key == "h") spec.h = to_double(value, path);
      else if (key == "tau_over_h") spec.tau_over_h = to_double(value, path);
      else if (key == "rho_over_h") spec.rho_over_h = to_double(value, path);
      else if (key == "delta_over_h2") spec.delta_over_h2 = to_double(value, path);
      else if (key == "rho") spec.rho = to_double(value, path);
      else if (key == "delta") spec.delta = to_double(value, path);
      else if (key == "tau_a") spec.tau_a = to_double(value, path);
      else if (key == "tau_r") spec.tau_r = to_double(value, path);
      else if (key == "k_max") spec.k_max = static_cast<int>(to_long(value, path));
      else if (key == "seed") spec.seed = static_cast<std::uint64_t>(to_long(value, path));
      else if (key == "jobs") spec.jobs = static_cast<int>(to_long(value, path));
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key 'numerics." + key + "'");
    } else if (section == "output") {
      if (key == "dir") spec.out_dir = value;
      else if (key == "format") spec.format = value;
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key 'output." + key + "'");
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": key '" + key + "' outside any section");
    }
  }

  if (!any_content) throw ConfigError("config: empty input");

  // semantic validation, with the offending key in the message
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw ConfigError(std::string("config: key '") + key + "' must be positive");
  };
  positive(spec.T, "problem.T");
  positive(spec.tau_over_h, "numerics.tau_over_h");
  positive(spec.rho_over_h, "numerics.rho_over_h");
  if (spec.delta_over_h2 < 0.0) throw ConfigError("config: key 'numerics.delta_over_h2' must be >= 0");
  if (spec.rho < 0.0) throw ConfigError("config: key 'numerics.rho' must be positive when given");
  if (spec.h < 0.0) throw ConfigError("config: key 'numerics.h' must be positive when given");
  if (spec.tau_a < 0.0 || spec.tau_r < 0.0 || (spec.tau_a == 0.0 && spec.tau_r == 0.0))
    throw ConfigError("config: keys 'numerics.tau_a'/'numerics.tau_r' must be >= 0 and not both zero");
  if (spec.k_max < 1) throw ConfigError("config: key 'numerics.k_max' must be >= 1");
  if (spec.jobs < 1) throw ConfigError("config: key 'numerics.jobs' must be >= 1");
  if (!(spec.domain[2] > spec.domain[0]) || !(spec.domain[3] > spec.domain[1]))
    throw ConfigError("config: key 'problem.domain' is degenerate");
  if (spec.format != "csv") throw ConfigError("config: key 'output.format': only 'csv' is supported");
  if (spec.scenario == "custom" && spec.source.empty())
    throw ConfigError("config: key 'problem.source' is required for custom problems");
  if (spec.scenario == "custom" || spec.f_star != "informed") {
    // expressions must parse now, not at run time
    auto check = [](const std::string& text, const char* key) {
      if (text == "informed" || text == "zero" || text.empty()) return;
      try {
        ScalarExpression::parse(text);
      } catch (const ExpressionError& e) {
        throw ConfigError(std::string("config: key '") + key + "': " + e.what());
      }
    };
    check(spec.f_star, "problem.f_star");
    if (spec.scenario == "custom") {
      check(spec.a11, "problem.a11");
      check(spec.a12, "problem.a12");
      check(spec.a22, "problem.a22");
      check(spec.b, "problem.b");
      check(spec.sigma, "problem.sigma");
      check(spec.g, "problem.g");
      check(spec.q, "problem.q");
      check(spec.source, "problem.source");
    }
  }
  if (!spec.gamma.empty()) {
    try {
      BoundarySpec::parse(spec.gamma);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: key 'problem.gamma': ") + e.what());
    }
  }
  return spec;
}

inline std::string emit_config(const ExperimentSpec& s) {
  std::ostringstream out;
  out << "[problem]\n";
  out << "scenario = " << s.scenario << "\n";
  out << "variant = " << s.variant << "\n";
  out << "domain = " << format_g17(s.domain[0]) << " " << format_g17(s.domain[1]) << " " << format_g17(s.domain[2])
      << " " << format_g17(s.domain[3]) << "\n";
  out << "T = " << format_g17(s.T) << "\n";
  out << "a11 = " << s.a11 << "\n";
  out << "a12 = " << s.a12 << "\n";
  out << "a22 = " << s.a22 << "\n";
  out << "b = " << s.b << "\n";
  out << "sigma = " << s.sigma << "\n";
  out << "g = " << s.g << "\n";
  out << "q = " << s.q << "\n";
  if (!s.source.empty()) out << "source = " << s.source << "\n";
  out << "f_star = " << s.f_star << "\n";
  if (!s.gamma.empty()) out << "gamma = " << s.gamma << "\n";
  out << "w = " << format_g17(s.w) << "\n";
  if (s.ellipticity > 0.0) out << "ellipticity = " << format_g17(s.ellipticity) << "\n";
  out << "\n[numerics]\n";
  out << "levels =";
  for (int l : s.levels) out << " " << l;
  out << "\n";
  if (s.h > 0.0) out << "h = " << format_g17(s.h) << "\n";
  out << "tau_over_h = " << format_g17(s.tau_over_h) << "\n";
  out << "rho_over_h = " << format_g17(s.rho_over_h) << "\n";
  out << "delta_over_h2 = " << format_g17(s.delta_over_h2) << "\n";
  if (s.rho > 0.0) out << "rho = " << format_g17(s.rho) << "\n";
  if (s.delta >= 0.0) out << "delta = " << format_g17(s.delta) << "\n";
  out << "tau_a = " << format_g17(s.tau_a) << "\n";
  out << "tau_r = " << format_g17(s.tau_r) << "\n";
  out << "k_max = " << s.k_max << "\n";
  out << "seed = " << s.seed << "\n";
  out << "jobs = " << s.jobs << "\n";
  out << "\n[output]\n";
  out << "dir = " << s.out_dir << "\n";
  out << "format = " << s.format << "\n";
  return out.str();
}

// Builds the runnable scenario: named factories plus overrides, or a custom
// problem assembled from the spec's expressions.
inline Scenario build_scenario(const ExperimentSpec& spec) {
  Scenario sc;
  if (spec.scenario != "custom") {
    sc = make_scenario(spec.scenario, spec.variant);
  } else {
    sc.name = "custom";
    sc.domain = RectBounds{spec.domain[0], spec.domain[1], spec.domain[2], spec.domain[3]};
    sc.T = spec.T;
    const auto a11 = ScalarExpression::parse(spec.a11);
    const auto a12 = ScalarExpression::parse(spec.a12);
    const auto a22 = ScalarExpression::parse(spec.a22);
    const auto bf = ScalarExpression::parse(spec.b);
    const auto sf = ScalarExpression::parse(spec.sigma);
    const auto gf = ScalarExpression::parse(spec.g);
    const auto qf = ScalarExpression::parse(spec.q);
    CoefficientSet c;
    c.A = [a11, a12, a22](double x, double y, double t) {
      return std::array<double, 3>{a11(x, y, t), a12(x, y, t), a22(x, y, t)};
    };
    c.b = [bf](double x, double y, double t) { return bf(x, y, t); };
    c.sigma = [sf](double x, double y, double t) { return sf(x, y, t); };
    c.g = [gf](double x, double y, double t) { return gf(x, y, t); };
    c.q = [qf](double x, double y) { return qf(x, y, 0.0); };
    c.time_independent = !(a11.uses('t') || a12.uses('t') || a22.uses('t') || bf.uses('t') || sf.uses('t'));
    if (spec.ellipticity > 0.0) {
      c.ellipticity = spec.ellipticity;
    } else {
      // declare the sampled minimum eigenvalue over a space-time grid
      double lo = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 24; ++i)
        for (int j = 0; j <= 24; ++j)
          for (int k = 0; k <= 8; ++k) {
            const double x = spec.domain[0] + (spec.domain[2] - spec.domain[0]) * i / 24.0;
            const double y = spec.domain[1] + (spec.domain[3] - spec.domain[1]) * j / 24.0;
            const double t = spec.T * k / 8.0;
            lo = std::min(lo, min_eigenvalue_sym2(a11(x, y, t), a12(x, y, t), a22(x, y, t)));
          }
      if (!(lo > 0.0)) throw ConfigError("config: key 'problem.a11': diffusion matrix is not uniformly elliptic");
      c.ellipticity = lo;
    }
    sc.coeffs = std::move(c);
    const auto src = ScalarExpression::parse(spec.source);
    sc.source = [src](double x, double y, double t) { return src(x, y, t); };
    sc.base_h = 0.8;
    sc.base_n = subdivisions_for(sc.domain, sc.base_h);
  }

  if (spec.scenario != "custom" && !spec.source.empty()) {
    const auto src = ScalarExpression::parse(spec.source);
    sc.source = [src](double x, double y, double t) { return src(x, y, t); };
    sc.source_slab_avg = nullptr;
  }

  if (!spec.gamma.empty()) sc.gamma = BoundarySpec::parse(spec.gamma);
  sc.tau_over_h = spec.tau_over_h;
  sc.rho_over_h = spec.rho_over_h;
  sc.delta_over_h2 = spec.delta_over_h2;
  sc.w = spec.w;
  if (spec.h > 0.0) {
    sc.base_h = spec.h;
    sc.base_n = subdivisions_for(sc.domain, spec.h);
  }
  if (spec.f_star == "zero") {
    sc.prior = Scenario::Prior::zero;
  } else if (spec.f_star != "informed") {
    const auto pf = ScalarExpression::parse(spec.f_star);
    sc.prior = Scenario::Prior::expression;
    sc.prior_expr = [pf](double x, double y, double t) { return pf(x, y, t); };
  }
  return sc;
}

inline RunOptions build_run_options(const ExperimentSpec& spec) {
  RunOptions opt;
  opt.levels = spec.h > 0.0 ? std::vector<int>{1} : spec.levels;
  opt.seed = spec.seed;
  opt.tau_a = spec.tau_a;
  opt.tau_r = spec.tau_r;
  opt.k_max = spec.k_max;
  opt.jobs = spec.jobs;
  if (spec.rho > 0.0) opt.rho_override = spec.rho;
  if (spec.delta >= 0.0) opt.delta_override = spec.delta;
  return opt;
}

}  // namespace parasrc
