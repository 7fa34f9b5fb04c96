#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace parasrc {

// Uniform partition of (0,T] into M slabs (t^{n-1}, t^n], t^n = n*T/M.
struct TimeGrid {
  double T = 1.0;
  int M = 1;

  double tau() const { return T / M; }
  double level(int n) const { return T * n / M; }
  double slab_begin(int n) const { return level(n - 1); }
  double slab_end(int n) const { return level(n); }
  double slab_mid(int n) const { return 0.5 * (slab_begin(n) + slab_end(n)); }

  bool operator==(const TimeGrid& o) const { return T == o.T && M == o.M; }
};

inline void require_valid(const TimeGrid& g) {
  if (g.M < 1 || !(g.T > 0.0)) throw std::invalid_argument("TimeGrid: need M >= 1 and T > 0");
}

using NodalField = Eigen::VectorXd;

// Element of the piecewise-constant-in-time FE space: one nodal field per
// slab, valid on (t^{n-1}, t^n]. Slab n is stored at index n-1.
struct SpaceTimeField {
  TimeGrid grid;
  std::vector<NodalField> slabs;

  static SpaceTimeField zero(const TimeGrid& grid, int nodes) {
    SpaceTimeField f;
    f.grid = grid;
    f.slabs.assign(grid.M, NodalField::Zero(nodes));
    return f;
  }

  int slab_count() const { return static_cast<int>(slabs.size()); }
  int node_count() const { return slabs.empty() ? 0 : static_cast<int>(slabs.front().size()); }
  const NodalField& slab(int n) const { return slabs.at(n - 1); }
  NodalField& slab(int n) { return slabs.at(n - 1); }

  SpaceTimeField& operator+=(const SpaceTimeField& o) {
    for (size_t i = 0; i < slabs.size(); ++i) slabs[i] += o.slabs[i];
    return *this;
  }
  SpaceTimeField& operator-=(const SpaceTimeField& o) {
    for (size_t i = 0; i < slabs.size(); ++i) slabs[i] -= o.slabs[i];
    return *this;
  }
  SpaceTimeField& operator*=(double s) {
    for (auto& v : slabs) v *= s;
    return *this;
  }
  // this += alpha * o
  void axpy(double alpha, const SpaceTimeField& o) {
    for (size_t i = 0; i < slabs.size(); ++i) slabs[i] += alpha * o.slabs[i];
  }
};

inline SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
inline SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
inline SpaceTimeField operator*(double s, SpaceTimeField a) { return a *= s; }

// Time-level sequence U^0..U^M (forward) or P^M..P^0 (adjoint, stored by level).
struct Trajectory {
  TimeGrid grid;
  std::vector<NodalField> levels;

  static Trajectory zero(const TimeGrid& grid, int nodes) {
    Trajectory u;
    u.grid = grid;
    u.levels.assign(grid.M + 1, NodalField::Zero(nodes));
    return u;
  }

  int node_count() const { return levels.empty() ? 0 : static_cast<int>(levels.front().size()); }
  const NodalField& level(int n) const { return levels.at(n); }
  NodalField& level(int n) { return levels.at(n); }
};

// Slab means of a finer slab field on a coarser grid whose M divides it.
inline SpaceTimeField slab_means(const SpaceTimeField& fine, const TimeGrid& target) {
  if (fine.grid.M % target.M != 0 || fine.grid.T != target.T)
    throw std::invalid_argument("slab_means: target grid must subdivide the field grid");
  const int r = fine.grid.M / target.M;
  SpaceTimeField out = SpaceTimeField::zero(target, fine.node_count());
  for (int j = 1; j <= target.M; ++j) {
    NodalField acc = NodalField::Zero(fine.node_count());
    for (int k = 1; k <= r; ++k) acc += fine.slab(r * (j - 1) + k);
    out.slab(j) = acc / r;
  }
  return out;
}

// Restriction to the leading n_nodes entries (a refined mesh keeps parent
// node indices first).
inline NodalField head_nodes(const NodalField& v, int n_nodes) { return v.head(n_nodes); }

inline SpaceTimeField head_nodes(const SpaceTimeField& f, int n_nodes) {
  SpaceTimeField out;
  out.grid = f.grid;
  out.slabs.reserve(f.slabs.size());
  for (const auto& v : f.slabs) out.slabs.push_back(v.head(n_nodes));
  return out;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(const Trajectory& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out << "n,t,node,value\n";
  for (int n = 0; n < static_cast<int>(u.levels.size()); ++n)
    for (int i = 0; i < u.node_count(); ++i)
      out << n << "," << format_g17(u.grid.level(n)) << "," << i << "," << format_g17(u.levels[n][i]) << "\n";
}

inline void write_field_csv(const SpaceTimeField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << "n,t,node,value\n";
  for (int n = 1; n <= f.slab_count(); ++n)
    for (int i = 0; i < f.node_count(); ++i)
      out << n << "," << format_g17(f.grid.slab_end(n)) << "," << i << "," << format_g17(f.slab(n)[i]) << "\n";
}

}  // namespace parasrc
