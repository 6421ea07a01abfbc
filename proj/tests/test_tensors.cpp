#include <catch2/catch_amalgamated.hpp>

#include "foldylax/quadrature.hpp"
#include "foldylax/rng.hpp"
#include "foldylax/tensors.hpp"

using namespace foldylax;

namespace {

/// Independent oracle for depolarization factors: the classical integral
/// L_i = (abc/2) int_0^inf ds / ((s + a_i^2) sqrt((s+a^2)(s+b^2)(s+c^2))),
/// mapped to (0,1) and evaluated with Gauss-Legendre.
Vec3 depolarization_by_quadrature(const Vec3& semi) {
  std::vector<double> nodes, weights;
  gauss_legendre(400, nodes, weights);
  Vec3 l = Vec3::Zero();
  const double scale = semi.prod() / 2.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double t = 0.5 * (nodes[q] + 1.0);
    const double w = 0.5 * weights[q];
    const double s = t / (1.0 - t);
    const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    const double root = std::sqrt((s + semi.x() * semi.x()) * (s + semi.y() * semi.y()) *
                                  (s + semi.z() * semi.z()));
    for (int i = 0; i < 3; ++i) l[i] += w * jac * scale / ((s + semi[i] * semi[i]) * root);
  }
  return l;
}

Mat3 random_spd(Rng& rng, double lo = 0.5, double hi = 4.0) {
  Mat3 q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q(i, j) = rng.normal();
  const Eigen::HouseholderQR<Mat3> qr(q);
  const Mat3 rot = qr.householderQ();
  Vec3 eig(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  return rot * eig.asDiagonal() * rot.transpose();
}

}  // namespace

TEST_CASE("ball tensor closed form") {
  SECTION("zero contrast gives the zero tensor") {
    CHECK(aniso_tensor_ball(CMat3::Zero(), 1.0).norm() == 0.0);
  }
  SECTION("eps = 3 reproduces 8 pi / 5") {
    const CMat3 a = aniso_tensor_ball(2.0 * CMat3::Identity(), 1.0);
    CHECK((a - (8.0 * pi / 5.0) * CMat3::Identity()).norm() < 1e-13);
  }
  SECTION("radius 2 versus radius 1 scales by 8") {
    const CMat3 a1 = aniso_tensor_ball(2.0 * CMat3::Identity(), 1.0);
    const CMat3 a2 = aniso_tensor_ball(2.0 * CMat3::Identity(), 2.0);
    CHECK((a2 - 8.0 * a1).norm() < 1e-12 * a2.norm());
  }
  SECTION("Clausius-Mossotti resonance rejected") {
    CHECK_THROWS_AS(aniso_tensor_ball(-3.0 * CMat3::Identity(), 1.0), std::invalid_argument);
  }
  SECTION("general constant contrast: A = 4 pi r^3 C (C+3I)^{-1}") {
    Rng rng(31);
    for (int t = 0; t < 5; ++t) {
      CMat3 c;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = Complex(rng.normal(), 0.3 * rng.normal());
      const CMat3 a = aniso_tensor_ball(c, 1.3);
      const CMat3 expected =
          4.0 * pi * std::pow(1.3, 3) * c * (c + 3.0 * CMat3::Identity()).inverse();
      CHECK((a - expected).norm() < 1e-12 * expected.norm());
    }
  }
}

TEST_CASE("spheroid depolarization factors against quadrature") {
  for (const Vec3& semi : {Vec3(1, 1, 1), Vec3(1, 1, 2.5), Vec3(1, 1, 0.4), Vec3(0.7, 2.0, 2.0)}) {
    const Vec3 closed = spheroid_depolarization(semi);
    const Vec3 quad = depolarization_by_quadrature(semi);
    CHECK((closed - quad).norm() < 1e-8);
    CHECK(closed.sum() == Catch::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(spheroid_depolarization(Vec3(1.0, 1.5, 2.0)), std::invalid_argument);
  // ball reduces to the CM form through the spheroid path
  const CMat3 a_sph = aniso_tensor_spheroid(2.0 * CMat3::Identity(), Vec3(1, 1, 1));
  CHECK((a_sph - (8.0 * pi / 5.0) * CMat3::Identity()).norm() < 1e-12);
}

TEST_CASE("FFT convolution matches the direct kernel sum") {
  const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 4.0);
  const auto idx = mask.indices();
  const auto centers = mask.centers();
  const double cell = mask.h * mask.h * mask.h;
  auto kernel = [cell](const Vec3& d) {
    return CMat3((cell * detail::newton_hessian(d)).cast<Complex>());
  };
  const CMat3 self = (-1.0 / 3.0) * CMat3::Identity();
  GridConvolver conv(mask.dims, mask.h, kernel, self);

  Rng rng(32);
  std::vector<CVec3> w(idx.size());
  for (auto& v : w) v = CVec3(Complex(rng.normal(), rng.normal()), Complex(rng.normal(), 0.0),
                              Complex(0.0, rng.normal()));
  std::vector<CVec3> fast, slow;
  conv.apply(idx, w, fast);
  direct_kernel_apply(centers, w, kernel, self, slow);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += (fast[i] - slow[i]).squaredNorm();
    den += slow[i].squaredNorm();
  }
  CHECK(std::sqrt(num / den) < 1e-12);
}

TEST_CASE("numeric volume tensor") {
  SECTION("zero contrast everywhere") {
    const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, 0.25);
    CHECK(aniso_tensor_numeric(mask, CMat3::Zero()).norm() == 0.0);
  }
  SECTION("ball at h = r/16 within 2 percent of the analytic value") {
    const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 16.0);
    const CMat3 a = aniso_tensor_numeric(mask, 2.0 * CMat3::Identity());
    const double exact = 8.0 * pi / 5.0;
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(a(i, i).real() - exact) / exact < 0.02);
    CHECK((a - a.transpose()).norm() / a.norm() < 1e-6);
  }
  SECTION("symmetric contrast gives a symmetric tensor on coarse grids") {
    Rng rng(33);
    const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 5.0);
    const Mat3 spd = random_spd(rng);
    const CMat3 a = aniso_tensor_numeric(mask, spd.cast<Complex>());
    CHECK((a - a.transpose()).norm() / a.norm() < 1e-6);
  }
}

TEST_CASE("numeric tensor Richardson refinement has order >= 1") {
  const double exact = 8.0 * pi / 5.0;
  auto error_at = [&](double h) {
    const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, h);
    const CMat3 a = aniso_tensor_numeric(mask, 2.0 * CMat3::Identity());
    return std::abs(a.trace().real() / 3.0 - exact) / exact;
  };
  const double e8 = error_at(1.0 / 8.0);
  const double e16 = error_at(1.0 / 16.0);
  const double order = std::log2(e8 / e16);
  INFO("e(h=r/8) = " << e8 << "  e(h=r/16) = " << e16 << "  order = " << order);
  CHECK(order >= 1.0);
  CHECK(e16 < 0.02);
}

TEST_CASE("a^3 scaling of numeric tensors for three shapes") {
  const double a = 0.37;
  auto check_pair = [&](const VoxelMask& unit, const VoxelMask& scaled, const CMat3& contrast) {
    const CMat3 t1 = aniso_tensor_numeric(unit, contrast);
    const CMat3 ta = aniso_tensor_numeric(scaled, contrast);
    CHECK((ta - a * a * a * t1).norm() / ta.norm() < 0.01);
  };
  const CMat3 c = CMat3::Identity() * Complex(1.7, 0.2);
  check_pair(voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 8.0),
             voxelize_ball(Vec3::Zero(), a, a / 8.0), c);
  check_pair(voxelize_ellipsoid(Vec3::Zero(), Vec3(1.0, 1.0, 0.5), 1.0 / 8.0),
             voxelize_ellipsoid(Vec3::Zero(), a * Vec3(1.0, 1.0, 0.5), a / 8.0), c);
  check_pair(voxelize_lblob(Vec3::Zero(), 1.0, 1.0 / 12.0),
             voxelize_lblob(Vec3::Zero(), a, a / 12.0), c);
}

TEST_CASE("definiteness is inherited from the contrast") {
  Rng rng(34);
  for (int t = 0; t < 20; ++t) {
    const Mat3 spd = random_spd(rng);
    const CMat3 a = aniso_tensor_ball(spd.cast<Complex>(), 1.0);
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a.real() + a.real().transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  // a few through the numeric route at coarse resolution
  for (int t = 0; t < 5; ++t) {
    const Mat3 spd = random_spd(rng);
    const VoxelMask mask = voxelize_ball(Vec3::Zero(), 1.0, 1.0 / 6.0);
    const CMat3 a = aniso_tensor_numeric(mask, spd.cast<Complex>());
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a.real() + a.real().transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("PEC sphere tensors converge to the closed forms") {
  // Independent targets: the adjoint double layer on the unit sphere has
  // eigenvalue 1/6 on degree-1 harmonics, so the densities are -3 nu and
  // (3/2) nu and the moments are -4 pi I and 2 pi I.
  std::vector<double> err_p, err_t;
  for (int level : {2, 3, 4}) {
    const PecTensors pt = pec_tensors_numeric(icosphere(1.0, level));
    err_p.push_back((pt.P + 4.0 * pi * Mat3::Identity()).norm() / (4.0 * pi * std::sqrt(3.0)));
    err_t.push_back((pt.T - 2.0 * pi * Mat3::Identity()).norm() / (2.0 * pi * std::sqrt(3.0)));
  }
  INFO("P errors: " << err_p[0] << " " << err_p[1] << " " << err_p[2]);
  INFO("T errors: " << err_t[0] << " " << err_t[1] << " " << err_t[2]);
  CHECK(err_p.back() < 0.02);
  CHECK(err_t.back() < 0.02);
  CHECK(std::log2(err_p[0] / err_p[2]) / 2.0 >= 1.0);  // order across two refinements
  CHECK(std::log2(err_t[0] / err_t[2]) / 2.0 >= 1.0);
}

TEST_CASE("PEC tensors scale by a^3 and stay SPD on general meshes") {
  const PecTensors t1 = pec_tensors_numeric(icosphere(1.0, 3));
  const PecTensors t2 = pec_tensors_numeric(icosphere(2.0, 3));
  CHECK((t2.P - 8.0 * t1.P).norm() < 1e-10 * t2.P.norm());
  CHECK((t2.T - 8.0 * t1.T).norm() < 1e-10 * t2.T.norm());

  const TriMesh stretched = scale_mesh(icosphere(1.0, 3), Vec3(1.0, 0.6, 1.4), Vec3::Zero());
  const PecTensors ts = pec_tensors_numeric(stretched);
  Eigen::SelfAdjointEigenSolver<Mat3> ep(0.5 * (-(ts.P) - ts.P.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat3> et(0.5 * (ts.T + ts.T.transpose()));
  CHECK(ep.eigenvalues().minCoeff() > 0.0);
  CHECK(et.eigenvalues().minCoeff() > 0.0);
  CHECK((ts.P - ts.P.transpose()).norm() / ts.P.norm() < 1e-3);
  CHECK((ts.T - ts.T.transpose()).norm() / ts.T.norm() < 1e-3);
}

TEST_CASE("PEC route rejects broken meshes") {
  TriMesh open_mesh = icosphere(1.0, 1);
  open_mesh.triangles.pop_back();
  CHECK_THROWS_AS(pec_tensors_numeric(open_mesh), std::invalid_argument);

  TriMesh inverted = icosphere(1.0, 1);
  for (auto& t : inverted.triangles) std::swap(t[1], t[2]);
  CHECK_THROWS_AS(pec_tensors_numeric(inverted), std::invalid_argument);
}

TEST_CASE("recentring: moments about the centroid are shift-invariant") {
  // Off-origin sphere: the tensors must match the centered ones, and the
  // density integrals reported for the recentring question must be ~ 0.
  const PecTensors centered = pec_tensors_numeric(icosphere(1.0, 3));
  const PecTensors shifted = pec_tensors_numeric(icosphere(1.0, 3, Vec3(0.7, -0.4, 1.1)));
  CHECK((centered.P - shifted.P).norm() < 1e-8 * centered.P.norm());
  CHECK((centered.T - shifted.T).norm() < 1e-8 * centered.T.norm());
  CHECK(shifted.density_integral_P.norm() < 1e-8);
  CHECK(shifted.density_integral_T.norm() < 1e-8);
}

TEST_CASE("spectral bounds") {
  SECTION("unit PEC sphere") {
    ParticleTensors t;
    t.pec = true;
    const auto [p, tt] = pec_tensors_ball(1.0);
    t.electric = p.cast<Complex>();
    t.magnetic = tt.cast<Complex>();
    const SpectralBounds b = tensor_spectral_bounds({t}, 1.0);
    CHECK(b.mu_plus == Catch::Approx(4.0 * pi).epsilon(1e-12));
    CHECK(b.mu_minus == Catch::Approx(2.0 * pi).epsilon(1e-12));
  }
  SECTION("isotropic dielectric ball: both bounds coincide") {
    ParticleTensors t;
    t.electric = aniso_tensor_ball(2.0 * CMat3::Identity(), 1.0);
    t.magnetic = t.electric;
    const SpectralBounds b = tensor_spectral_bounds({t, t}, 1.0);
    CHECK(b.mu_plus == Catch::Approx(8.0 * pi / 5.0).epsilon(1e-12));
    CHECK(b.mu_minus == Catch::Approx(8.0 * pi / 5.0).epsilon(1e-12));
  }
  SECTION("non-SPD PEC tensor is diagnosed") {
    ParticleTensors t;
    t.pec = true;
    t.electric = CMat3::Identity();  // P must have -P SPD; +I violates it
    t.magnetic = CMat3::Identity();
    CHECK_THROWS_AS(tensor_spectral_bounds({t}, 1.0), std::runtime_error);
  }
}

TEST_CASE("non-symmetric modified tensor") {
  SECTION("commuting cases collapse to the identity conjugation") {
    const CMat3 qc = 2.0 * CMat3::Identity();
    const CMat3 a = aniso_tensor_ball(qc, 1.0);
    CHECK((nonsym_modified_tensor(a, qc) - a).norm() < 1e-13 * a.norm());

    CMat3 diag = CMat3::Zero();
    diag.diagonal() << Complex(1.0), Complex(2.0), Complex(3.0);
    const CMat3 ad = aniso_tensor_ball(diag, 1.0);
    CHECK((nonsym_modified_tensor(ad, diag) - ad).norm() < 1e-13 * ad.norm());
  }
  SECTION("random contrast against the explicit triple product") {
    Rng rng(35);
    for (int t = 0; t < 10; ++t) {
      CMat3 qc, a;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          qc(i, j) = Complex(rng.normal(), 0.2 * rng.normal());
          a(i, j) = Complex(rng.normal(), rng.normal());
        }
      qc += 4.0 * CMat3::Identity();  // keep it comfortably invertible
      const CMat3 expected = qc * a * qc.transpose().inverse();
      CHECK((nonsym_modified_tensor(a, qc) - expected).norm() < 1e-11 * expected.norm());
    }
  }
  SECTION("singular mean contrast rejected") {
    CHECK_THROWS_AS(nonsym_modified_tensor(CMat3::Identity(), CMat3::Zero()),
                    std::invalid_argument);
  }
}

TEST_CASE("material coercivity gate") {
  Material ok = Material::isotropic(Complex(3.0, 0.5), 2.0);
  CHECK_NOTHROW(ok.validate());
  Material zero_contrast = Material::isotropic(1.0, 1.0);
  CHECK_NOTHROW(zero_contrast.validate());  // exactly zero slots are allowed
  Material bad = Material::isotropic(0.5, 1.0);  // negative electric contrast
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Material lossy = Material::isotropic(Complex(1.2, 5.0), 1.0);  // Im dominates Re
  CHECK_THROWS_AS(lossy.validate(), std::invalid_argument);
}
