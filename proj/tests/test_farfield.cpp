#include <catch2/catch_amalgamated.hpp>

#include "foldylax/farfield.hpp"
#include "foldylax/rng.hpp"

using namespace foldylax;

namespace {

Cluster single_ball(const Vec3& z, double radius_a) {
  Cluster c;
  c.radius_a = radius_a;
  c.centers = {z};
  c.shapes = {BallShape{0.5 * radius_a}};
  return c;
}

FoldySolution moments_only(std::vector<CVec3> r, std::vector<CVec3> q) {
  FoldySolution s;
  s.R = std::move(r);
  s.Q = std::move(q);
  return s;
}

}  // namespace

TEST_CASE("sphere grid quadrature") {
  const SphereGrid g = sphere_grid(16, 32);
  double wsum = 0.0, z2 = 0.0;
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    wsum += g.weights[i];
    z2 += g.weights[i] * g.directions[i].z() * g.directions[i].z();
  }
  CHECK(std::abs(wsum - 4.0 * pi) < 1e-12);
  CHECK(std::abs(z2 - 4.0 * pi / 3.0) < 1e-12);
  CHECK(sphere_grid(2, 4).directions.size() == 8);
  CHECK_THROWS_AS(sphere_grid(1, 8), std::invalid_argument);
  CHECK_THROWS_AS(sphere_grid(4, 3), std::invalid_argument);
  for (const auto& d : g.directions) CHECK(std::abs(d.norm() - 1.0) < 1e-14);
}

TEST_CASE("single-dipole pattern values") {
  const Complex k(1.3, 0.0);
  const Cluster c = single_ball(Vec3::Zero(), 0.1);
  SphereGrid axis_grid;  // hand grid hitting e3 and e1 exactly
  axis_grid.directions = {Vec3(0, 0, 1), Vec3(1, 0, 0)};
  axis_grid.weights = {1.0, 1.0};
  axis_grid.thetas = {0.0, pi / 2};
  axis_grid.phis = {0.0, 0.0};

  SECTION("electric moment along e3") {
    const FoldySolution s = moments_only({CVec3(0, 0, 1)}, {CVec3::Zero()});
    const FarFieldPattern p = foldy_far_field(s, c, k, axis_grid);
    CHECK(p.values[0].norm() < 1e-15);  // axial null
    CHECK((p.values[1] - (k * k / (4.0 * pi)) * CVec3(0, 0, 1)).norm() < 1e-15);
  }
  SECTION("magnetic moment along e3, ik convention") {
    const FoldySolution s = moments_only({CVec3::Zero()}, {CVec3(0, 0, 1)});
    const FarFieldPattern p = foldy_far_field(s, c, k, axis_grid);
    // (ik/4pi) e1 x e3 = -(ik/4pi) e2
    CHECK((p.values[1] + (iu * k / (4.0 * pi)) * CVec3(0, 1, 0)).norm() < 1e-15);
  }
  SECTION("magnetic coefficient under the Maxwell-consistent convention") {
    const FoldySolution s = moments_only({CVec3::Zero()}, {CVec3(0, 0, 1)});
    const FarFieldPattern p =
        foldy_far_field(s, c, k, axis_grid, RadiationConvention::magnetic_k2);
    CHECK((p.values[1] + (iu * k) * (iu * k) / (4.0 * pi) * CVec3(0, 1, 0)).norm() < 1e-15);
  }
}

TEST_CASE("patterns are transverse") {
  Rng rng(51);
  const SphereGrid g = sphere_grid(8, 16);
  Cluster c;
  c.radius_a = 0.1;
  for (int m = 0; m < 4; ++m) {
    c.centers.push_back(rng.unit_vector() * rng.uniform(0.0, 2.0));
    c.shapes.push_back(BallShape{0.05});
  }
  std::vector<CVec3> r(4), q(4);
  for (int m = 0; m < 4; ++m) {
    r[m] = CVec3(Complex(rng.normal(), rng.normal()), Complex(rng.normal(), rng.normal()),
                 Complex(rng.normal(), rng.normal()));
    q[m] = CVec3(Complex(rng.normal(), rng.normal()), Complex(rng.normal(), rng.normal()),
                 Complex(rng.normal(), rng.normal()));
  }
  const FarFieldPattern p = foldy_far_field(moments_only(r, q), c, Complex(2.0, 0.0), g);
  double max_radial = 0.0, max_val = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    max_radial = std::max(max_radial, std::abs(g.directions[i].cast<Complex>().dot(p.values[i])));
    max_val = std::max(max_val, p.values[i].norm());
  }
  CHECK(max_radial < 1e-10 * max_val);
}

TEST_CASE("translation covariance of the synthesis") {
  Rng rng(52);
  const SphereGrid g = sphere_grid(6, 12);
  const Complex k(1.7, 0.0);
  Cluster c;
  c.radius_a = 0.1;
  c.centers = {Vec3(0, 0, 0), Vec3(0.8, 0.1, -0.2)};
  c.shapes = {BallShape{0.05}, BallShape{0.05}};
  std::vector<CVec3> r(2), q(2);
  for (int m = 0; m < 2; ++m) {
    r[m] = CVec3(Complex(rng.normal(), rng.normal()), Complex(rng.normal(), rng.normal()),
                 Complex(rng.normal(), rng.normal()));
    q[m] = r[m].reverse();
  }
  const Vec3 t(0.3, -0.9, 0.4);
  Cluster shifted = c;
  for (auto& z : shifted.centers) z += t;
  const FoldySolution sol = moments_only(r, q);
  const FarFieldPattern p0 = foldy_far_field(sol, c, k, g);
  const FarFieldPattern p1 = foldy_far_field(sol, shifted, k, g);
  for (std::size_t i = 0; i < p0.values.size(); ++i) {
    const Complex phase = std::exp(-iu * k * g.directions[i].dot(t));
    CHECK((p1.values[i] - phase * p0.values[i]).norm() < 1e-10 * p0.values[i].norm());
  }
}

TEST_CASE("electric-only dipole magnitude follows sin(angle)") {
  const SphereGrid g = sphere_grid(12, 24);
  const Cluster c = single_ball(Vec3::Zero(), 0.1);
  const CVec3 moment(0.3, -0.2, 0.9);
  const Vec3 axis = moment.real().normalized();
  const FoldySolution s = moments_only({moment}, {CVec3::Zero()});
  const Complex k(1.0, 0.0);
  const FarFieldPattern p = foldy_far_field(s, c, k, g);
  const double amp = std::abs(k * k) / (4.0 * pi) * moment.real().norm();
  double residual = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double s_ang = axis.cross(g.directions[i]).norm();
    residual = std::max(residual, std::abs(p.values[i].norm() - amp * s_ang));
  }
  CHECK(residual < 1e-10);
}

TEST_CASE("pattern distance") {
  const SphereGrid g = sphere_grid(4, 8);
  FarFieldPattern p1, p2;
  p1.grid = p2.grid = g;
  Rng rng(53);
  p1.values.assign(g.directions.size(), CVec3::Zero());
  for (auto& v : p1.values)
    v = CVec3(Complex(rng.normal(), rng.normal()), Complex(rng.normal(), rng.normal()),
              Complex(rng.normal(), rng.normal()));
  p2.values = p1.values;

  SECTION("identical patterns") {
    const PatternDistance d = pattern_distance(p1, p2);
    CHECK(d.rel_l2 == 0.0);
    CHECK(d.max_abs == 0.0);
  }
  SECTION("zero reference flags infinity") {
    FarFieldPattern zero;
    zero.grid = g;
    zero.values.assign(g.directions.size(), CVec3::Zero());
    CHECK(std::isinf(pattern_distance(p1, zero).rel_l2));
    CHECK(pattern_distance(zero, zero).rel_l2 == 0.0);
  }
  SECTION("agrees with an independently coded norm") {
    FarFieldPattern q = p1;
    for (auto& v : q.values)
      v += CVec3(Complex(0.1 * rng.normal(), 0), Complex(0, 0.1 * rng.normal()), Complex(0, 0));
    const PatternDistance d = pattern_distance(q, p1);
    long double diff2 = 0.0L, ref2 = 0.0L;
    for (std::size_t i = 0; i < q.values.size(); ++i)
      for (int comp = 0; comp < 3; ++comp) {
        diff2 += std::norm(q.values[i][comp] - p1.values[i][comp]);
        ref2 += std::norm(p1.values[i][comp]);
      }
    CHECK(d.rel_l2 == Catch::Approx(std::sqrt(static_cast<double>(diff2 / ref2))).epsilon(1e-13));
  }
  SECTION("grid mismatch rejected") {
    FarFieldPattern other;
    other.grid = sphere_grid(4, 12);
    other.values.assign(other.grid.directions.size(), CVec3::Zero());
    CHECK_THROWS_AS(pattern_distance(p1, other), std::invalid_argument);
  }
}

TEST_CASE("volume synthesis basics") {
  const SphereGrid g = sphere_grid(8, 16);
  SECTION("zero contrast-applied fields give the zero pattern") {
    std::vector<Vec3> y = {Vec3(0, 0, 0), Vec3(0.1, 0, 0)};
    std::vector<CVec3> zeros(2, CVec3::Zero());
    const FarFieldPattern p = volume_far_field(y, zeros, zeros, 1e-3, Complex(1.0, 0.0), g);
    for (const auto& v : p.values) CHECK(v.norm() == 0.0);
  }
  SECTION("conjugate symmetry of the phases under k -> -k on real fields") {
    Rng rng(54);
    std::vector<Vec3> y;
    std::vector<CVec3> je, jm;
    for (int i = 0; i < 5; ++i) {
      y.push_back(rng.unit_vector() * rng.uniform(0.0, 0.3));
      je.push_back(CVec3(rng.normal(), rng.normal(), rng.normal()));
      jm.push_back(CVec3(rng.normal(), rng.normal(), rng.normal()));
    }
    const double dv = 1e-3;
    const FarFieldPattern plus = volume_far_field(y, je, jm, dv, Complex(1.2, 0.0), g);
    const FarFieldPattern minus = volume_far_field(y, je, jm, dv, Complex(-1.2, 0.0), g);
    for (std::size_t i = 0; i < plus.values.size(); ++i)
      CHECK((minus.values[i] - plus.values[i].conjugate()).norm() < 1e-13);
  }
}

TEST_CASE("pattern CSV emission") {
  const SphereGrid g = sphere_grid(2, 4);
  FarFieldPattern p;
  p.grid = g;
  p.values.assign(8, CVec3(Complex(1.0, -2.0), Complex(0.5, 0.25), Complex(0, 0)));
  const std::string path = "/tmp/foldylax_pattern_test.csv";
  write_pattern_csv(p, path);
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.rfind("theta,phi,reEx,imEx,reEy,imEy,reEz,imEz\n", 0) == 0);
  CHECK(std::count(content.begin(), content.end(), '\n') == 9);  // header + 8 rows
  CHECK(content.find("\r") == std::string::npos);
}
