#include <catch2/catch_amalgamated.hpp>
#include <parasrc/mesh.hpp>
#include <sstream>

using namespace parasrc;

namespace {
const RectBounds kSquare{0.0, 0.0, 1.0, 1.0};
const RectBounds kDomain{-1.0, -1.0, 1.0, 1.0};

double total_area(const Mesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.triangle_count(); ++t) a += triangle_area(m, t);
  return a;
}

double min_edge(const Mesh& m) {
  double lo = 1e300;
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) lo = std::min(lo, edge_length(m, tri[k], tri[(k + 1) % 3]));
  return lo;
}
}  // namespace

TEST_CASE("unit square with one cell", "[mesh]") {
  const Mesh m = build_rect_mesh(kSquare, 1);
  CHECK(m.node_count() == 4);
  CHECK(m.triangle_count() == 2);
  CHECK(m.boundary_edge_count() == 4);
  CHECK(m.h == Catch::Approx(std::sqrt(2.0)));
  check_mesh(m);
}

TEST_CASE("counting formulas for n subdivisions", "[mesh]") {
  const Mesh m = build_rect_mesh(kDomain, 2);
  CHECK(m.node_count() == 9);
  CHECK(m.triangle_count() == 8);
  CHECK(m.boundary_edge_count() == 8);
  check_mesh(m);

  for (int n : {3, 5, 8}) {
    const Mesh mm = build_rect_mesh(kDomain, n);
    CHECK(mm.node_count() == (n + 1) * (n + 1));
    CHECK(mm.triangle_count() == 2 * n * n);
    CHECK(mm.boundary_edge_count() == 4 * n);
    check_mesh(mm);
  }
}

TEST_CASE("triangle areas sum to the rectangle area", "[mesh]") {
  for (int n : {1, 2, 7}) {
    const Mesh m = build_rect_mesh(kDomain, n);
    CHECK(total_area(m) == Catch::Approx(4.0).epsilon(1e-12));
  }
  const Mesh skew = build_rect_mesh({0.0, 0.0, 2.5, 0.5}, 3);
  CHECK(total_area(skew) == Catch::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("cell diagonal mesh size and target sizes", "[mesh]") {
  const Mesh m = build_rect_mesh(kDomain, 40);
  CHECK(m.h == Catch::Approx(2.0 * std::sqrt(2.0) / 40.0));
  CHECK(subdivisions_for(kDomain, 0.05) == 57);
  CHECK(build_rect_mesh(kDomain, 57).h <= 0.05);
  CHECK(subdivisions_for(kDomain, 0.8) == 4);
}

TEST_CASE("degenerate input is rejected", "[mesh]") {
  CHECK_THROWS_AS(build_rect_mesh(kSquare, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_rect_mesh({0.0, 0.0, 0.0, 1.0}, 2), std::invalid_argument);
}

TEST_CASE("refinement splits every triangle in four and halves h", "[mesh]") {
  const Mesh m = build_rect_mesh(kSquare, 1);
  const Mesh r = refine(m);
  CHECK(r.triangle_count() == 8);
  CHECK(r.node_count() == 9);
  CHECK(r.h == 0.5 * m.h);
  check_mesh(r);

  // parent nodes keep their coordinates and indices
  for (int i = 0; i < m.node_count(); ++i) {
    CHECK(r.nodes[i][0] == m.nodes[i][0]);
    CHECK(r.nodes[i][1] == m.nodes[i][1]);
  }

  Mesh chain = build_rect_mesh(kDomain, 5);
  const double h0 = chain.h;
  for (int i = 0; i < 3; ++i) chain = refine(chain);
  CHECK(chain.h == h0 / 8.0);  // three halvings, exact
  CHECK(chain.triangle_count() == 2 * 5 * 5 * 64);
  check_mesh(chain);
}

TEST_CASE("quasi-uniformity is preserved through refinement", "[mesh]") {
  Mesh m = build_rect_mesh(kDomain, 4);
  for (int l = 0; l < 3; ++l) {
    double ratio = m.h / min_edge(m);
    CHECK(ratio <= 8.0);
    m = refine(m);
  }
}

TEST_CASE("boundary tagging", "[mesh]") {
  SECTION("all edges") {
    const Mesh m = tag_boundary(build_rect_mesh(kDomain, 2), BoundarySpec::all());
    for (const auto& e : m.boundary_edges) CHECK(e.in_gamma);
  }
  SECTION("bottom side y = -1") {
    const Mesh m = tag_boundary(build_rect_mesh(kDomain, 2), BoundarySpec::parse("y=-1"));
    int tagged = 0;
    for (const auto& e : m.boundary_edges)
      if (e.in_gamma) {
        ++tagged;
        CHECK(m.nodes[e.a][1] == -1.0);
        CHECK(m.nodes[e.b][1] == -1.0);
      }
    CHECK(tagged == 2);
  }
  SECTION("idempotent") {
    const auto spec = BoundarySpec::parse("y=-1");
    const Mesh once = tag_boundary(build_rect_mesh(kDomain, 2), spec);
    const Mesh twice = tag_boundary(once, spec);
    for (int i = 0; i < once.boundary_edge_count(); ++i)
      CHECK(once.boundary_edges[i].in_gamma == twice.boundary_edges[i].in_gamma);
  }
  SECTION("empty selection is an error") {
    CHECK_THROWS_AS(tag_boundary(build_rect_mesh(kDomain, 2), BoundarySpec::parse("y=7")), std::invalid_argument);
  }
  SECTION("tags survive refinement") {
    const Mesh m = tag_boundary(build_rect_mesh(kDomain, 2), BoundarySpec::parse("y=-1"));
    const Mesh r = refine(m);
    int tagged = 0;
    for (const auto& e : r.boundary_edges)
      if (e.in_gamma) {
        ++tagged;
        CHECK(r.nodes[e.a][1] == -1.0);
      }
    CHECK(tagged == 4);
  }
}

TEST_CASE("closest node agrees with a brute-force scan", "[mesh]") {
  const Mesh m = build_rect_mesh(kDomain, 5);
  for (double x : {-0.93, -0.1, 0.0, 0.27, 1.4})
    for (double y : {-1.2, -0.5, 0.33, 0.9}) {
      int best = 0;
      double bd = 1e300;
      for (int i = 0; i < m.node_count(); ++i) {
        const double dx = m.nodes[i][0] - x, dy = m.nodes[i][1] - y;
        if (dx * dx + dy * dy < bd) {
          bd = dx * dx + dy * dy;
          best = i;
        }
      }
      CHECK(closest_node(m, x, y) == best);
    }
}

TEST_CASE("closest node at a node and at ties", "[mesh]") {
  const Mesh m = build_rect_mesh(kDomain, 2);
  CHECK(closest_node(m, 0.0, -1.0) == 1);
  // midpoint between node 3 (-1, 0) and node 4 (0, 0): lowest index wins
  CHECK(closest_node(m, -0.5, 0.0) == 3);
  // equidistant from (0,-1) and (0,0)
  const int p1 = closest_node(m, -0.1, -0.5);
  CHECK(p1 == 1);
}

TEST_CASE("mesh text format round-trips", "[mesh]") {
  const Mesh m = tag_boundary(build_rect_mesh(kDomain, 3), BoundarySpec::parse("y=-1"));
  std::stringstream ss;
  save_mesh(m, ss);
  const Mesh r = load_mesh(ss);
  REQUIRE(r.node_count() == m.node_count());
  REQUIRE(r.triangle_count() == m.triangle_count());
  REQUIRE(r.boundary_edge_count() == m.boundary_edge_count());
  for (int i = 0; i < m.node_count(); ++i) {
    CHECK(r.nodes[i][0] == m.nodes[i][0]);
    CHECK(r.nodes[i][1] == m.nodes[i][1]);
  }
  for (int i = 0; i < m.boundary_edge_count(); ++i)
    CHECK(r.boundary_edges[i].in_gamma == m.boundary_edges[i].in_gamma);
  CHECK(r.h == Catch::Approx(m.h));
}

TEST_CASE("no orphan nodes in generated meshes", "[mesh]") {
  const Mesh m = refine(build_rect_mesh(kDomain, 3));
  std::vector<bool> used(m.node_count(), false);
  for (const auto& tri : m.triangles)
    for (int v : tri) used[v] = true;
  for (bool u : used) CHECK(u);
}
