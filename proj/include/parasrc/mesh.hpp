#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace parasrc {

struct RectBounds {
  double x0 = -1.0, y0 = -1.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

struct BoundaryEdge {
  int a = -1, b = -1;     // endpoint node indices, ordered CCW along the boundary
  bool in_gamma = false;  // part of the observation segment
};

// Conforming triangulation of a polygonal (rectangular) domain.
// Triangles are CCW; boundary edges each belong to exactly one triangle.
struct Mesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double h = 0.0;  // max edge length

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int boundary_edge_count() const { return static_cast<int>(boundary_edges.size()); }
};

inline double triangle_area(const Mesh& m, int t) {
  const auto& tri = m.triangles[t];
  const auto& p0 = m.nodes[tri[0]];
  const auto& p1 = m.nodes[tri[1]];
  const auto& p2 = m.nodes[tri[2]];
  return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]));
}

inline double edge_length(const Mesh& m, int a, int b) {
  const double dx = m.nodes[b][0] - m.nodes[a][0];
  const double dy = m.nodes[b][1] - m.nodes[a][1];
  return std::sqrt(dx * dx + dy * dy);
}

// Selects boundary edges for the observation segment: either the whole
// boundary or edges lying on axis-aligned lines such as "y=-1".
class BoundarySpec {
 public:
  static BoundarySpec all() {
    BoundarySpec s;
    s.all_ = true;
    return s;
  }

  static BoundarySpec line(char axis, double value) {
    BoundarySpec s;
    if (axis != 'x' && axis != 'y') throw std::invalid_argument("BoundarySpec: axis must be x or y");
    s.lines_.emplace_back(axis, value);
    return s;
  }

  // "all" or a comma-separated list of "x=VALUE" / "y=VALUE" items
  static BoundarySpec parse(const std::string& text) {
    std::string t;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    if (t == "all") return all();
    if (t.empty()) throw std::invalid_argument("BoundarySpec: empty specification");
    BoundarySpec s;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq != 1 || (item[0] != 'x' && item[0] != 'y'))
        throw std::invalid_argument("BoundarySpec: expected x=VALUE or y=VALUE, got '" + item + "'");
      s.lines_.emplace_back(item[0], std::stod(item.substr(2)));
    }
    return s;
  }

  bool is_all() const { return all_; }

  bool selects(const Mesh& m, const BoundaryEdge& e) const {
    if (all_) return true;
    for (const auto& [axis, value] : lines_) {
      const int c = axis == 'x' ? 0 : 1;
      if (std::abs(m.nodes[e.a][c] - value) <= kTol && std::abs(m.nodes[e.b][c] - value) <= kTol)
        return true;
    }
    return false;
  }

  std::string to_string() const {
    if (all_) return "all";
    std::string out;
    for (size_t i = 0; i < lines_.size(); ++i) {
      if (i) out += ",";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%c=%.17g", lines_[i].first, lines_[i].second);
      out += buf;
    }
    return out;
  }

 private:
  static constexpr double kTol = 1e-9;
  bool all_ = false;
  std::vector<std::pair<char, double>> lines_;
};

// Structured triangulation of a rectangle: n x n cells, each split along the
// lower-left to upper-right diagonal. (n+1)^2 nodes, 2n^2 triangles, 4n
// boundary edges. h is the cell diagonal.
inline Mesh build_rect_mesh(const RectBounds& bounds, int n) {
  if (n < 1) throw std::invalid_argument("build_rect_mesh: need n >= 1");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0))
    throw std::invalid_argument("build_rect_mesh: degenerate bounds");

  Mesh m;
  const int np = n + 1;
  m.nodes.reserve(static_cast<size_t>(np) * np);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i)
      m.nodes.push_back({bounds.x0 + bounds.width() * i / n, bounds.y0 + bounds.height() * j / n});

  auto vid = [np](int i, int j) { return j * np + i; };

  m.triangles.reserve(2 * static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }

  // boundary walked CCW: bottom, right, top, left
  for (int i = 0; i < n; ++i) m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), false});
  for (int j = 0; j < n; ++j) m.boundary_edges.push_back({vid(n, j), vid(n, j + 1), false});
  for (int i = n; i > 0; --i) m.boundary_edges.push_back({vid(i, n), vid(i - 1, n), false});
  for (int j = n; j > 0; --j) m.boundary_edges.push_back({vid(0, j), vid(0, j - 1), false});

  const double dx = bounds.width() / n, dy = bounds.height() / n;
  m.h = std::sqrt(dx * dx + dy * dy);
  return m;
}

// Smallest subdivision count whose cell diagonal does not exceed the target.
inline int subdivisions_for(const RectBounds& bounds, double h_target) {
  if (!(h_target > 0.0)) throw std::invalid_argument("subdivisions_for: h must be positive");
  const double diag = std::sqrt(bounds.width() * bounds.width() + bounds.height() * bounds.height());
  return std::max(1, static_cast<int>(std::ceil(diag / h_target - 1e-12)));
}

// Red refinement: every triangle splits into 4 congruent children via edge
// midpoints. Parent nodes keep their indices, so a refined mesh restricts to
// its parent by truncation. Boundary tags are inherited.
inline Mesh refine(const Mesh& parent) {
  Mesh m;
  m.nodes = parent.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = m.node_count();
    m.nodes.push_back({0.5 * (m.nodes[a][0] + m.nodes[b][0]), 0.5 * (m.nodes[a][1] + m.nodes[b][1])});
    midpoint.emplace(key, id);
    return id;
  };

  m.triangles.reserve(4 * parent.triangles.size());
  for (const auto& tri : parent.triangles) {
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    m.triangles.push_back({a, ab, ca});
    m.triangles.push_back({ab, b, bc});
    m.triangles.push_back({ca, bc, c});
    m.triangles.push_back({ab, bc, ca});
  }

  m.boundary_edges.reserve(2 * parent.boundary_edges.size());
  for (const auto& e : parent.boundary_edges) {
    const int c = mid(e.a, e.b);
    m.boundary_edges.push_back({e.a, c, e.in_gamma});
    m.boundary_edges.push_back({c, e.b, e.in_gamma});
  }

  m.h = 0.5 * parent.h;
  return m;
}

// Marks the observation segment. Idempotent; rejects empty selections.
inline Mesh tag_boundary(const Mesh& mesh, const BoundarySpec& spec) {
  Mesh m = mesh;
  int tagged = 0;
  for (auto& e : m.boundary_edges) {
    e.in_gamma = spec.selects(m, e);
    tagged += e.in_gamma ? 1 : 0;
  }
  if (tagged == 0) throw std::invalid_argument("tag_boundary: spec selects no boundary edges");
  return m;
}

// Ascending list of node indices incident to Gamma-tagged edges.
inline std::vector<int> gamma_nodes(const Mesh& mesh) {
  std::vector<int> ids;
  for (const auto& e : mesh.boundary_edges)
    if (e.in_gamma) {
      ids.push_back(e.a);
      ids.push_back(e.b);
    }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Exhaustive scan; ties resolved to the lowest index.
inline int closest_node(const Mesh& mesh, double x, double y) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.node_count(); ++i) {
    const double dx = mesh.nodes[i][0] - x, dy = mesh.nodes[i][1] - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

// Structural validation used by tests and by load_mesh.
inline void check_mesh(const Mesh& m) {
  for (const auto& tri : m.triangles)
    for (int v : tri)
      if (v < 0 || v >= m.node_count()) throw std::runtime_error("mesh: triangle references missing node");
  for (const auto& e : m.boundary_edges)
    if (e.a < 0 || e.a >= m.node_count() || e.b < 0 || e.b >= m.node_count())
      throw std::runtime_error("mesh: boundary edge references missing node");

  for (int t = 0; t < m.triangle_count(); ++t)
    if (!(triangle_area(m, t) > 0.0)) throw std::runtime_error("mesh: nonpositive triangle area");

  // every edge is shared by two triangles except boundary edges, which belong to one
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) edge_use[std::minmax(tri[k], tri[(k + 1) % 3])] += 1;
  for (const auto& [edge, count] : edge_use)
    if (count > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
  std::map<std::pair<int, int>, int> boundary_seen;
  for (const auto& e : m.boundary_edges) {
    auto key = std::minmax(e.a, e.b);
    auto it = edge_use.find(key);
    if (it == edge_use.end() || it->second != 1)
      throw std::runtime_error("mesh: boundary edge not on the topological boundary");
    boundary_seen[key] += 1;
  }
  for (const auto& [edge, count] : edge_use)
    if (count == 1 && boundary_seen.find(edge) == boundary_seen.end())
      throw std::runtime_error("mesh: topological boundary edge missing from boundary list");
  for (const auto& [edge, count] : boundary_seen)
    if (count != 1) throw std::runtime_error("mesh: duplicate boundary edge");
}

inline void save_mesh(const Mesh& m, std::ostream& out) {
  char buf[128];
  out << m.node_count() << " " << m.triangle_count() << " " << m.boundary_edge_count() << "\n";
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p[0], p[1]);
    out << buf;
  }
  for (const auto& t : m.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& e : m.boundary_edges) out << e.a << " " << e.b << " " << (e.in_gamma ? 1 : 0) << "\n";
}

inline void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  save_mesh(m, out);
}

inline Mesh load_mesh(std::istream& in) {
  Mesh m;
  int nn = 0, nt = 0, ne = 0;
  if (!(in >> nn >> nt >> ne)) throw std::runtime_error("load_mesh: bad header");
  if (nn < 3 || nt < 1 || ne < 3) throw std::runtime_error("load_mesh: implausible counts");
  m.nodes.resize(nn);
  for (auto& p : m.nodes)
    if (!(in >> p[0] >> p[1])) throw std::runtime_error("load_mesh: bad node line");
  m.triangles.resize(nt);
  for (auto& t : m.triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw std::runtime_error("load_mesh: bad triangle line");
  m.boundary_edges.resize(ne);
  for (auto& e : m.boundary_edges) {
    int tag = 0;
    if (!(in >> e.a >> e.b >> tag)) throw std::runtime_error("load_mesh: bad boundary edge line");
    e.in_gamma = tag != 0;
  }
  m.h = 0.0;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) m.h = std::max(m.h, edge_length(m, t[k], t[(k + 1) % 3]));
  check_mesh(m);
  return m;
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  return load_mesh(in);
}

}  // namespace parasrc
