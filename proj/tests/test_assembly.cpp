#include <catch2/catch_amalgamated.hpp>
#include <parasrc/parasrc.hpp>

#include "support/oracles.hpp"

using namespace parasrc;

namespace {
const RectBounds kDomain{-1.0, -1.0, 1.0, 1.0};

Mesh reference_triangle_mesh() {
  // single triangle (0,0), (1,0), (0,1)
  Mesh m;
  m.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{0, 1, false}, {1, 2, false}, {2, 0, false}};
  m.h = std::sqrt(2.0);
  return m;
}

Mesh two_triangle_square() {
  Mesh m = build_rect_mesh({0.0, 0.0, 1.0, 1.0}, 1);
  return m;
}

double max_asymmetry(const SparseSymMatrix& k) {
  const Eigen::MatrixXd d = Eigen::MatrixXd(k);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}
}  // namespace

TEST_CASE("element mass matrix on the reference triangle", "[assembly]") {
  const Mesh m = reference_triangle_mesh();
  const Eigen::MatrixXd mass = Eigen::MatrixXd(assemble_mass(m));
  Eigen::Matrix3d expect;
  expect << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  expect /= 24.0;
  CHECK((mass - expect).cwiseAbs().maxCoeff() < 1e-15);

  const Eigen::MatrixXd oracle = oracles::dense_mass(m);
  CHECK((mass - oracle).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("element stiffness on the reference triangle", "[assembly]") {
  const Mesh m = reference_triangle_mesh();
  const CoefficientSet c = constant_coefficients(1.0, 0.0, 1.0, 0.0, 0.0);
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_operator(m, c, 0.0));
  Eigen::Matrix3d expect;
  expect << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expect /= 2.0;
  CHECK((k - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mass row sums equal the domain area", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 3);
  const Eigen::MatrixXd mass = Eigen::MatrixXd(assemble_mass(m));
  CHECK(mass.sum() == Catch::Approx(4.0).epsilon(1e-13));

  const Eigen::MatrixXd m2 = Eigen::MatrixXd(assemble_mass(two_triangle_square()));
  CHECK(m2.rows() == 4);
  CHECK(m2.sum() == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constants lie in the kernel of pure diffusion", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 3);
  const CoefficientSet c = constant_coefficients(2.0, 0.5, 1.0, 0.0, 0.0);
  const SparseSymMatrix k = assemble_operator(m, c, 0.3);
  const NodalField ones = NodalField::Constant(m.node_count(), 1.0);
  CHECK((k * ones).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("operator matches the dense quadrature oracle", "[assembly]") {
  const CoefficientSet paper = standard_coefficients(0.4, 0.4);
  for (const Mesh& m : {two_triangle_square(), build_rect_mesh(kDomain, 2)}) {
    const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_operator(m, paper, 1.0));
    const Eigen::MatrixXd oracle = oracles::dense_operator(m, paper, 1.0);
    CHECK((k - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("assembled matrices are symmetric", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 4);
  CoefficientSet c = standard_coefficients(0.0, 0.0);
  // space-varying data keep the matrix symmetric as well
  c.A = [](double x, double y, double) { return std::array<double, 3>{3.0 + x * x, 1.0, 2.0 + y * y}; };
  c.b = [](double x, double, double) { return 1.0 + 0.5 * x * x; };
  c.sigma = [](double, double y, double) { return 1.0 + y * y; };
  c.ellipticity = 1.0;
  const SparseSymMatrix k = assemble_operator(m, c, 0.7);
  const Eigen::MatrixXd dk = Eigen::MatrixXd(k);
  CHECK(max_asymmetry(k) <= 1e-14 * dk.cwiseAbs().maxCoeff());
  CHECK(max_asymmetry(assemble_mass(m)) == 0.0);
}

TEST_CASE("positive definiteness with strictly positive reaction", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 3);
  const CoefficientSet c = standard_coefficients(0.0, 0.0);  // b = 1
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_operator(m, c, 0.5));
  const Eigen::MatrixXd mass = Eigen::MatrixXd(assemble_mass(m));
  // x^T K x >= c x^T M x empirically: smallest generalized eigenvalue positive
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(k, mass);
  CHECK(ges.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("ellipticity violations are detected", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 2);
  CoefficientSet c = standard_coefficients(0.0, 0.0);
  c.A = [](double x, double, double) {
    return std::array<double, 3>{x > 0.0 ? -1.0 : 3.0, 0.0, 1.0};  // indefinite on half the domain
  };
  CHECK_THROWS_AS(assemble_operator(m, c, 0.0), std::runtime_error);
}

TEST_CASE("boundary mass on a single unit edge", "[assembly]") {
  const Mesh m = two_triangle_square();
  const SparseSymMatrix b = assemble_boundary_mass(m, BoundarySpec::parse("y=0"));
  const Eigen::MatrixXd d = Eigen::MatrixXd(b);
  CHECK(d(0, 0) == Catch::Approx(1.0 / 3));
  CHECK(d(1, 1) == Catch::Approx(1.0 / 3));
  CHECK(d(0, 1) == Catch::Approx(1.0 / 6));
  CHECK(d.sum() == Catch::Approx(1.0));
}

TEST_CASE("boundary mass totals the observation length", "[assembly]") {
  const Mesh sq = two_triangle_square();
  CHECK(Eigen::MatrixXd(assemble_boundary_mass(sq, BoundarySpec::all())).sum() == Catch::Approx(4.0));
  const Mesh m = build_rect_mesh(kDomain, 4);
  CHECK(Eigen::MatrixXd(assemble_boundary_mass(m, BoundarySpec::all())).sum() == Catch::Approx(8.0));
  CHECK(Eigen::MatrixXd(assemble_boundary_mass(m, BoundarySpec::parse("y=-1"))).sum() == Catch::Approx(2.0));
  const Eigen::MatrixXd oracle = oracles::dense_boundary_mass(m, BoundarySpec::parse("y=-1"));
  CHECK((Eigen::MatrixXd(assemble_boundary_mass(m, BoundarySpec::parse("y=-1"))) - oracle).cwiseAbs().maxCoeff() <
        1e-13);
  CHECK_THROWS_AS(assemble_boundary_mass(m, BoundarySpec::parse("x=9")), std::invalid_argument);
}

TEST_CASE("interior and boundary loads", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 3);
  const SparseSymMatrix mass = assemble_mass(m);

  CHECK(assemble_load(mass, NodalField::Zero(m.node_count())).norm() == 0.0);
  CHECK(assemble_load(mass, NodalField::Constant(m.node_count(), 1.0)).sum() == Catch::Approx(4.0));

  const auto g = [](double, double, double) { return 0.4; };
  CHECK(assemble_boundary_load(m, g, 0.0).sum() == Catch::Approx(3.2));

  const Mesh sq = two_triangle_square();
  CHECK(assemble_load(assemble_mass(sq), NodalField::Constant(4, 1.0)).sum() == Catch::Approx(1.0));
}

TEST_CASE("nodal interpolation", "[assembly]") {
  const Mesh m = build_rect_mesh({0.0, 0.0, 1.0, 1.0}, 1);
  const NodalField c = interpolate_nodal(m, [](double, double) { return 0.4; });
  CHECK(c.minCoeff() == 0.4);
  CHECK(c.maxCoeff() == 0.4);

  const NodalField sq = interpolate_nodal(m, [](double x, double) { return x * x; });
  CHECK(sq[0] == 0.0);
  CHECK(sq[1] == 1.0);
  CHECK(sq[2] == 0.0);
  CHECK(sq[3] == 1.0);
  // P1 interpolant of x^2 on this mesh differs from x^2 by at most 1/4
  const double mid_interp = 0.5 * (sq[0] + sq[1]);
  CHECK(std::abs(mid_interp - 0.25) <= 0.25);

  CHECK_THROWS_AS(interpolate_nodal(m, [](double x, double) { return 1.0 / x; }), std::runtime_error);
}

TEST_CASE("slab averages", "[assembly]") {
  const Mesh m = build_rect_mesh({0.0, 0.0, 1.0, 1.0}, 1);

  SECTION("time-constant field reduces to nodal interpolation") {
    const TimeGrid grid{1.0, 3};
    const SpaceTimeField f = slab_average([](double x, double y, double) { return x + 2.0 * y; }, grid, m);
    for (int n = 1; n <= 3; ++n) {
      CHECK(f.slab(n)[0] == Catch::Approx(0.0));
      CHECK(f.slab(n)[3] == Catch::Approx(3.0));
    }
  }

  SECTION("linear-in-time field") {
    const TimeGrid grid{1.0, 2};
    const SpaceTimeField f = slab_average([](double, double, double t) { return t; }, grid, m);
    CHECK(f.slab(1)[0] == Catch::Approx(0.25));
    CHECK(f.slab(2)[0] == Catch::Approx(0.75));
  }

  SECTION("step source via exact slab means") {
    const TimeGrid grid{1.0, 4};
    const auto avg = [](double, double, double t0, double t1) {
      return 0.5 * std::max(0.0, t1 - std::max(t0, 0.5)) / (t1 - t0);
    };
    const SpaceTimeField f = slab_average_exact(avg, grid, m);
    CHECK(f.slab(1)[0] == 0.0);
    CHECK(f.slab(2)[0] == 0.0);
    CHECK(f.slab(3)[0] == 0.5);
    CHECK(f.slab(4)[0] == 0.5);
  }

  SECTION("already slab-constant fields are reproduced exactly") {
    const TimeGrid grid{1.0, 4};
    const auto piecewise = [&grid](double x, double, double t) {
      const int n = std::min(grid.M, std::max(1, static_cast<int>(std::ceil(t / grid.tau() - 1e-12))));
      return x + n;
    };
    const SpaceTimeField f = slab_average(piecewise, grid, m);
    for (int n = 1; n <= 4; ++n) CHECK(f.slab(n)[1] == Catch::Approx(1.0 + n));
  }
}

TEST_CASE("space-time inner product", "[assembly]") {
  const Mesh m = build_rect_mesh(kDomain, 2);
  const SparseSymMatrix mass = assemble_mass(m);
  const TimeGrid grid{1.0, 4};
  SpaceTimeField ones = SpaceTimeField::zero(grid, m.node_count());
  for (auto& s : ones.slabs) s.setConstant(1.0);
  CHECK(l2_inner(ones, ones, mass) == Catch::Approx(4.0));  // |Omega| * T
  CHECK(l2_norm(ones, mass) == Catch::Approx(2.0));
}
