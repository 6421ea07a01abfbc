#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "foldylax/fft_conv.hpp"
#include "foldylax/geometry.hpp"
#include "foldylax/gmres.hpp"
#include "foldylax/kernels.hpp"
#include "foldylax/mesh.hpp"
#include "foldylax/types.hpp"
#include "foldylax/voxel.hpp"

namespace foldylax {

enum class MaterialKind { penetrable, pec };

/// Relative material tensors of one particle. Conductivity is assumed to be
/// absorbed into Im(eps_r). A contrast slot may be exactly zero (eps_r = I or
/// mu_r = I); the corresponding moments carry no response and are eliminated
/// downstream instead of tripping the coercivity gate.
struct Material {
  MaterialKind kind = MaterialKind::penetrable;
  CMat3 eps_r = CMat3::Identity();
  Mat3 mu_r = Mat3::Identity();

  static Material pec() {
    Material m;
    m.kind = MaterialKind::pec;
    return m;
  }
  static Material isotropic(Complex eps, double mu = 1.0) {
    Material m;
    m.eps_r = eps * CMat3::Identity();
    m.mu_r = mu * Mat3::Identity();
    return m;
  }

  CMat3 eps_contrast() const { return eps_r - CMat3::Identity(); }
  Mat3 mu_contrast() const { return mu_r - Mat3::Identity(); }

  /// Coercivity of the nonzero contrasts: smallest eigenvalue of the
  /// symmetric part of Re(Q) must exceed the spectral radius of Im(Q) for
  /// the electric slot, and sym(mu_r - I) must be positive definite.
  void validate() const {
    if (kind == MaterialKind::pec) return;
    const CMat3 qe = eps_contrast();
    if (qe.norm() > 0.0) {
      const Mat3 re_sym = 0.5 * (qe.real() + qe.real().transpose());
      Eigen::SelfAdjointEigenSolver<Mat3> es(re_sym);
      double rho_im = 0.0;
      if (qe.imag().norm() > 0.0) {
        Eigen::EigenSolver<Mat3> ei(qe.imag());
        rho_im = ei.eigenvalues().cwiseAbs().maxCoeff();
      }
      if (es.eigenvalues().minCoeff() - rho_im <= 0.0)
        throw std::invalid_argument("Material: electric contrast fails coercivity");
    }
    const Mat3 qm = mu_contrast();
    if (qm.norm() > 0.0) {
      Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (qm + qm.transpose()));
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("Material: magnetic contrast fails coercivity");
    }
  }
};

struct TensorProvenance {
  bool analytic = true;
  double resolution = 0.0;  // voxel size or mesh spacing when numeric
};

/// Per-particle 3x3 tensor pair. Penetrable: (A_eps, A_mu). PEC: electric
/// slot holds P, magnetic slot holds T (both real, stored complex).
struct ParticleTensors {
  CMat3 electric = CMat3::Zero();
  CMat3 magnetic = CMat3::Zero();
  bool pec = false;
  TensorProvenance provenance;

  bool electric_zero() const { return electric.norm() == 0.0; }
  bool magnetic_zero() const { return magnetic.norm() == 0.0; }
};

using TensorSet = std::vector<ParticleTensors>;

// ---------------------------------------------------------------------------
// Analytic shapes

/// Ball of the given radius with constant contrast C = B - I:
///   A = 4 pi r^3 C (C + 3I)^{-1}
/// (isotropic C = (eps-1) I reduces to the Clausius-Mossotti form).
inline CMat3 aniso_tensor_ball(const CMat3& contrast, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("aniso_tensor_ball: radius must be positive");
  const CMat3 denom = contrast + 3.0 * CMat3::Identity();
  Eigen::FullPivLU<CMat3> lu(denom);
  if (!lu.isInvertible())
    throw std::invalid_argument("aniso_tensor_ball: resonance, contrast + 3I singular");
  return 4.0 * pi * radius * radius * radius * contrast * lu.inverse();
}

/// Depolarization factors of an axis-aligned spheroid (two equal semi-axes).
/// General triaxial ellipsoids take the numeric route.
inline Vec3 spheroid_depolarization(const Vec3& semi_axes) {
  const double ax = semi_axes.x(), ay = semi_axes.y(), az = semi_axes.z();
  if (ax <= 0.0 || ay <= 0.0 || az <= 0.0)
    throw std::invalid_argument("spheroid_depolarization: semi-axes must be positive");
  auto close = [](double p, double q) { return std::abs(p - q) <= 1e-12 * std::max(p, q); };
  // Identify the distinct axis; Lx+Ly+Lz = 1 and the equal axes share a value.
  int odd = -1;
  if (close(ax, ay) && close(ay, az)) return Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  if (close(ax, ay)) odd = 2;
  else if (close(ax, az)) odd = 1;
  else if (close(ay, az)) odd = 0;
  else
    throw std::invalid_argument("spheroid_depolarization: triaxial ellipsoid, use the numeric route");
  const double c = semi_axes[odd];
  const double a = semi_axes[(odd + 1) % 3];
  double l_odd;
  if (c > a) {  // prolate about the odd axis
    const double e = std::sqrt(1.0 - (a * a) / (c * c));
    l_odd = (1.0 - e * e) / (e * e) * (std::atanh(e) / e - 1.0);
  } else {  // oblate
    const double e = std::sqrt(1.0 - (c * c) / (a * a));
    l_odd = (1.0 - std::sqrt(1.0 - e * e) * std::asin(e) / e) / (e * e);
  }
  Vec3 l;
  for (int d = 0; d < 3; ++d) l[d] = (d == odd) ? l_odd : 0.5 * (1.0 - l_odd);
  return l;
}

/// Spheroid with constant contrast: A = V C (I + L C)^{-1}, V = 4/3 pi abc.
inline CMat3 aniso_tensor_spheroid(const CMat3& contrast, const Vec3& semi_axes) {
  const Vec3 l = spheroid_depolarization(semi_axes);
  const double vol = 4.0 / 3.0 * pi * semi_axes.prod();
  const CMat3 denom = CMat3::Identity() + l.asDiagonal().toDenseMatrix().cast<Complex>() * contrast;
  Eigen::FullPivLU<CMat3> lu(denom);
  if (!lu.isInvertible())
    throw std::invalid_argument("aniso_tensor_spheroid: resonance, I + L C singular");
  return vol * contrast * lu.inverse();
}

/// PEC sphere closed forms: P = -4 pi r^3 I, T = 2 pi r^3 I.
inline std::pair<Mat3, Mat3> pec_tensors_ball(double radius) {
  const double r3 = radius * radius * radius;
  return {-4.0 * pi * r3 * Mat3::Identity(), 2.0 * pi * r3 * Mat3::Identity()};
}

// ---------------------------------------------------------------------------
// Numeric volume route (static Lippmann-Schwinger collocation)

struct VolumeTensorOptions {
  double tolerance = 1e-8;   // relative residual of the iterative solve
  int max_iterations = 2000;
  std::size_t dense_threshold = 3000;  // unknown count below which the dense
                                       // fallback may engage on failure
};

namespace detail {

/// Static Hessian of the Newton kernel, grad grad (1/4pi|d|) = (3uu^T - I)/(4pi|d|^3).
inline Mat3 newton_hessian(const Vec3& d) {
  const double r = d.norm();
  const Vec3 u = d / r;
  return (3.0 * (u * u.transpose()) - Mat3::Identity()) / (4.0 * pi * r * r * r);
}

}  // namespace detail

/// Solves G - grad div S^0(C G) = e_l on the occupied voxels by collocation,
/// with the singular self-cell replaced by its equal-volume-ball closed form
/// (-I/3 for the static Hessian), then returns A with columns
/// A e_l = sum_i h^3 C_i G_i^(l). `contrast` is per occupied voxel (x-fastest
/// order, matching VoxelMask::centers) or a single shared matrix.
inline CMat3 aniso_tensor_numeric(const VoxelMask& mask,
                                  const std::vector<CMat3>& contrast_field,
                                  const VolumeTensorOptions& opt = {}) {
  const auto idx = mask.indices();
  const std::size_t n = idx.size();
  if (n == 0) throw std::invalid_argument("aniso_tensor_numeric: empty mask");
  if (contrast_field.size() != n && contrast_field.size() != 1)
    throw std::invalid_argument("aniso_tensor_numeric: contrast field size mismatch");
  auto contrast = [&](std::size_t i) -> const CMat3& {
    return contrast_field.size() == 1 ? contrast_field[0] : contrast_field[i];
  };
  bool all_zero = true;
  for (std::size_t i = 0; i < n && all_zero; ++i) all_zero = contrast(i).norm() == 0.0;
  if (all_zero) return CMat3::Zero();

  const double h = mask.h;
  const double cell = h * h * h;
  GridConvolver conv(mask.dims, h,
                     [cell](const Vec3& d) { return (cell * detail::newton_hessian(d)).cast<Complex>().eval(); },
                     (-1.0 / 3.0) * CMat3::Identity());

  std::vector<CVec3> w(n), cw(n);
  auto apply = [&](const CVecX& x, CVecX& y) {
    for (std::size_t i = 0; i < n; ++i)
      cw[i] = contrast(i) * CVec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
    conv.apply(idx, cw, w);
    y.resize(static_cast<Eigen::Index>(3 * n));
    for (std::size_t i = 0; i < n; ++i) {
      const CVec3 v = CVec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]) - w[i];
      y[3 * i] = v[0];
      y[3 * i + 1] = v[1];
      y[3 * i + 2] = v[2];
    }
  };

  CMat3 a = CMat3::Zero();
  GmresOptions gopt;
  gopt.tolerance = opt.tolerance;
  gopt.max_iterations = opt.max_iterations;
  for (int l = 0; l < 3; ++l) {
    CVecX rhs = CVecX::Zero(static_cast<Eigen::Index>(3 * n));
    for (std::size_t i = 0; i < n; ++i) rhs[3 * i + l] = 1.0;
    CVecX g = rhs;  // identity-dominant operator; rhs is a good start
    const GmresResult res = gmres(apply, rhs, g, gopt);
    if (!res.converged) {
      if (3 * n < opt.dense_threshold) {
        // Dense fallback: assemble I - K explicitly.
        const auto centers = mask.centers();
        CMatX m = CMatX::Identity(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(3 * n));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const CMat3 k = (i == j) ? CMat3((-1.0 / 3.0) * CMat3::Identity())
                                     : CMat3((cell * detail::newton_hessian(centers[i] - centers[j]))
                                                 .cast<Complex>());
            m.block<3, 3>(3 * static_cast<Eigen::Index>(i), 3 * static_cast<Eigen::Index>(j)) -=
                k * contrast(j);
          }
        g = m.partialPivLu().solve(rhs);
      } else {
        throw std::runtime_error(
            "aniso_tensor_numeric: iterative solve stalled, relative residual " +
            std::to_string(res.relative_residual));
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      a.col(l) += cell * (contrast(i) * CVec3(g[3 * i], g[3 * i + 1], g[3 * i + 2]));
  }
  return a;
}

inline CMat3 aniso_tensor_numeric(const VoxelMask& mask, const CMat3& contrast,
                                  const VolumeTensorOptions& opt = {}) {
  return aniso_tensor_numeric(mask, std::vector<CMat3>{contrast}, opt);
}

// ---------------------------------------------------------------------------
// PEC boundary route (static adjoint double layer, centroid Nystrom)

struct PecTensors {
  Mat3 P = Mat3::Zero();           // polarization tensor, -P SPD
  Mat3 T = Mat3::Zero();           // virtual-mass tensor, T SPD
  Vec3 density_integral_P = Vec3::Zero();  // component-wise int psi ds, recentring report
  Vec3 density_integral_T = Vec3::Zero();
};

/// Boundary tensors from [-I/2 + K*]^{-1}(nu) and [I/2 + K*]^{-1}(nu) moments
/// about the volume centroid. K is the static double layer in the convention
/// whose sphere eigenvalue on degree-1 harmonics is +1/6 (the one matching
/// P = -4 pi r^3 I, T = 2 pi r^3 I and the classical PEC polarizabilities;
/// the Phi_0-based kernel has the opposite sign). The matrix receives the
/// exact row-sum correction K 1 = 1/2 before transposition, which restores
/// first-order convergence of the centroid rule on the weakly singular
/// diagonal. [-I/2 + K*] annihilates the equilibrium density, so that system
/// is deflated with an area-mean projector; the right-hand side nu has zero
/// mean and the inverse is taken on the zero-mean class, as in the theory.
inline PecTensors pec_tensors_numeric(const TriMesh& mesh) {
  validate_mesh(mesh);
  const std::size_t nf = mesh.face_count();
  std::vector<Vec3> cent(nf), nrm(nf);
  std::vector<double> area(nf);
  double total_area = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    cent[f] = mesh.face_centroid(f);
    const Vec3 an = mesh.face_area_normal(f);
    area[f] = an.norm();
    nrm[f] = an / area[f];
    total_area += area[f];
  }
  const Vec3 z = mesh.centroid();

  MatX kd(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf));
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(nf); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double rowsum = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      if (j == i) continue;
      const Vec3 d = cent[i] - cent[j];
      const double r = d.norm();
      const double v = -d.dot(nrm[j]) / (4.0 * pi * r * r * r) * area[j];
      kd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      rowsum += v;
    }
    kd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.5 - rowsum;
  }

  // Adjoint by L^2(ds) duality: K*_{ij} = K_{ji} A_j / A_i.
  MatX kadj(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf));
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = 0; j < nf; ++j)
      kadj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          kd(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * area[j] / area[i];

  MatX sys_p = kadj;
  MatX sys_t = kadj;
  sys_p.diagonal().array() -= 0.5;
  sys_t.diagonal().array() += 0.5;
  for (std::size_t i = 0; i < nf; ++i)  // deflation of the equilibrium null space
    for (std::size_t j = 0; j < nf; ++j)
      sys_p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += area[j] / total_area;

  MatX rhs(static_cast<Eigen::Index>(nf), 3);
  for (std::size_t f = 0; f < nf; ++f) rhs.row(static_cast<Eigen::Index>(f)) = nrm[f].transpose();

  auto solve = [&](const MatX& sys) -> MatX {
    if (nf <= 3000) return sys.partialPivLu().solve(rhs);
    MatX out(static_cast<Eigen::Index>(nf), 3);
    GmresOptions gopt;
    gopt.tolerance = 1e-10;
    for (int c = 0; c < 3; ++c) {
      CVecX b = rhs.col(c).cast<Complex>();
      CVecX x = CVecX::Zero(b.size());
      auto apply = [&](const CVecX& v, CVecX& y) {
        y = (sys * v.real()).cast<Complex>();
        y += iu * (sys * v.imag()).cast<Complex>();
      };
      const GmresResult res = gmres(apply, b, x, gopt);
      if (!res.converged)
        throw std::runtime_error("pec_tensors_numeric: boundary solve stalled, residual " +
                                 std::to_string(res.relative_residual));
      out.col(c) = x.real();
    }
    return out;
  };

  const MatX psi_p = solve(sys_p);
  const MatX psi_t = solve(sys_t);

  PecTensors out;
  for (int a = 0; a < 3; ++a) {
    for (std::size_t f = 0; f < nf; ++f) {
      const double wp = psi_p(static_cast<Eigen::Index>(f), a) * area[f];
      const double wt = psi_t(static_cast<Eigen::Index>(f), a) * area[f];
      out.P.row(a) += wp * (cent[f] - z).transpose();
      out.T.row(a) += wt * (cent[f] - z).transpose();
      out.density_integral_P[a] += wp;
      out.density_integral_T[a] += wt;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral bounds and the non-symmetric modification

struct SpectralBounds {
  double mu_plus = 0.0;
  double mu_minus = std::numeric_limits<double>::infinity();
};

/// mu+ / mu- over the a^3-rescaled tensors. PEC uses eigenvalues of T and -P
/// (diagnosing any non-SPD pair); penetrable tensors use singular values.
/// Zero slots (no contrast) do not participate.
inline SpectralBounds tensor_spectral_bounds(const TensorSet& ts, double radius_a) {
  if (ts.empty()) throw std::invalid_argument("tensor_spectral_bounds: empty tensor set");
  const double a3 = radius_a * radius_a * radius_a;
  SpectralBounds out;
  bool any = false;
  auto feed_spd = [&](const Mat3& m, const char* label) {
    const Mat3 s = 0.5 * (m + m.transpose()) / a3;
    Eigen::SelfAdjointEigenSolver<Mat3> es(s);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::runtime_error(std::string("tensor_spectral_bounds: ") + label +
                               " not positive definite after rescaling");
    out.mu_plus = std::max(out.mu_plus, es.eigenvalues().maxCoeff());
    out.mu_minus = std::min(out.mu_minus, es.eigenvalues().minCoeff());
    any = true;
  };
  auto feed_sv = [&](const CMat3& m) {
    Eigen::JacobiSVD<CMat3> svd(m / a3);
    out.mu_plus = std::max(out.mu_plus, svd.singularValues().maxCoeff());
    out.mu_minus = std::min(out.mu_minus, svd.singularValues().minCoeff());
    any = true;
  };
  for (const auto& t : ts) {
    if (t.pec) {
      feed_spd(-t.electric.real(), "-P");
      feed_spd(t.magnetic.real(), "T");
    } else {
      if (!t.electric_zero()) feed_sv(t.electric);
      if (!t.magnetic_zero()) feed_sv(t.magnetic);
    }
  }
  if (!any) throw std::runtime_error("tensor_spectral_bounds: all tensors are zero");
  return out;
}

/// Non-symmetric-case diagonal tensor: A~ = <Qc> A <Qc^T>^{-1}, the inverse of
/// the displayed A~^{-1} = <Qc^T> A^{-1} <Qc>^{-1}.
inline CMat3 nonsym_modified_tensor(const CMat3& a, const CMat3& mean_contrast) {
  Eigen::FullPivLU<CMat3> lu(mean_contrast.transpose().eval());
  if (!lu.isInvertible())
    throw std::invalid_argument("nonsym_modified_tensor: singular mean contrast");
  return mean_contrast * a * lu.inverse();
}

}  // namespace foldylax
