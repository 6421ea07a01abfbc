#pragma once

#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "foldylax/farfield.hpp"
#include "foldylax/fft_conv.hpp"
#include "foldylax/geometry.hpp"
#include "foldylax/gmres.hpp"
#include "foldylax/kernels.hpp"
#include "foldylax/tensors.hpp"
#include "foldylax/types.hpp"
#include "foldylax/voxel.hpp"

namespace foldylax {

/// Voxelized cluster on one shared grid: occupied cells, owning particle,
/// and per-cell contrast tensors.
struct VolumeDiscretization {
  VoxelMask mask;
  std::vector<std::array<int, 3>> idx;
  std::vector<Vec3> centers;
  std::vector<int> particle;   // owning particle per occupied voxel
  std::vector<CMat3> qeps;
  std::vector<Mat3> qmu;
  double h = 0.0;
  std::size_t n_particles = 0;
};

/// Total interior fields at the voxel centers.
struct VolumeFields {
  VolumeDiscretization disc;
  std::vector<CVec3> E;
  std::vector<CVec3> H;
  GmresResult solve_info;
};

namespace detail {

inline bool point_in_shape(const Shape& s, const Vec3& local) {
  struct Visitor {
    const Vec3& p;
    bool operator()(const BallShape& b) const { return p.norm() <= b.radius; }
    bool operator()(const EllipsoidShape& e) const {
      return p.cwiseQuotient(e.semi_axes).squaredNorm() <= 1.0;
    }
    bool operator()(const VoxelShape& v) const {
      const VoxelMask& m = *v.mask;
      const Vec3 rel = (p - m.origin) / m.h;
      const int i = static_cast<int>(std::floor(rel.x()));
      const int j = static_cast<int>(std::floor(rel.y()));
      const int l = static_cast<int>(std::floor(rel.z()));
      if (i < 0 || j < 0 || l < 0 || i >= m.dims[0] || j >= m.dims[1] || l >= m.dims[2])
        return false;
      return m.at(i, j, l);
    }
    bool operator()(const MeshShape&) const {
      throw std::invalid_argument("volume oracle: mesh shapes not supported (penetrable only)");
    }
  };
  return std::visit(Visitor{local}, s);
}

/// Closed-form (k^2 + grad div) S over the equal-volume ball: isotropic,
/// [(2/3)(e^{ikR}(1 - ikR) - 1) - 1/3] I with (4/3) pi R^3 = h^3.
inline CMat3 pi_self_weight(Complex k, double h) {
  const double req = h * std::cbrt(3.0 / (4.0 * pi));
  const Complex e = std::exp(iu * k * req) * (1.0 - iu * k * req) - 1.0;
  return (2.0 / 3.0 * e - 1.0 / 3.0) * CMat3::Identity();
}

}  // namespace detail

inline VolumeDiscretization discretize(const Cluster& cluster,
                                       const std::vector<Material>& materials, double h) {
  cluster.validate();
  if (materials.size() != cluster.count())
    throw std::invalid_argument("discretize: material list size mismatch");
  if (h > cluster.radius_a / 8.0 + 1e-12)
    throw std::invalid_argument("discretize: need h <= a/8");
  for (const auto& m : materials) {
    if (m.kind == MaterialKind::pec)
      throw std::invalid_argument("discretize: the volume oracle handles penetrable clusters only");
    m.validate();
  }

  Vec3 lo = cluster.centers[0], hi = cluster.centers[0];
  for (std::size_t m = 0; m < cluster.count(); ++m) {
    const double ext = shape_extent(cluster.shapes[m]) + h;
    lo = lo.cwiseMin(cluster.centers[m] - Vec3::Constant(ext));
    hi = hi.cwiseMax(cluster.centers[m] + Vec3::Constant(ext));
  }

  VolumeDiscretization d;
  d.h = h;
  d.n_particles = cluster.count();
  d.mask.h = h;
  d.mask.origin = lo;
  for (int c = 0; c < 3; ++c)
    d.mask.dims[c] = std::max(1, static_cast<int>(std::ceil((hi[c] - lo[c]) / h - 1e-12)));
  d.mask.occupied.assign(
      static_cast<std::size_t>(d.mask.dims[0]) * d.mask.dims[1] * d.mask.dims[2], 0);

  for (int l = 0; l < d.mask.dims[2]; ++l)
    for (int j = 0; j < d.mask.dims[1]; ++j)
      for (int i = 0; i < d.mask.dims[0]; ++i) {
        const Vec3 p = d.mask.center(i, j, l);
        for (std::size_t m = 0; m < cluster.count(); ++m) {
          if (detail::point_in_shape(cluster.shapes[m], p - cluster.centers[m])) {
            d.mask.occupied[d.mask.linear(i, j, l)] = 1;
            d.idx.push_back({i, j, l});
            d.centers.push_back(p);
            d.particle.push_back(static_cast<int>(m));
            d.qeps.push_back(materials[m].eps_contrast());
            d.qmu.push_back(materials[m].mu_contrast());
            break;
          }
        }
      }
  if (d.idx.empty()) throw std::runtime_error("discretize: no voxels generated");
  return d;
}

struct LsSolveOptions {
  double tolerance = 1e-7;
  int max_iterations = 2000;
  int restart = 60;
};

/// Coupled-field Lippmann-Schwinger collocation solve:
///   E - (k^2 + grad div) S^{k,Qeps}(E) - ik curl S^{k,Qmu}(H) = E^in
///   H - (k^2 + grad div) S^{k,Qmu}(H) + ik curl S^{k,Qeps}(E) = H^in
/// Midpoint quadrature off the diagonal, equal-volume-ball closed form on it.
inline VolumeFields ls_solve(const Cluster& cluster, const std::vector<Material>& materials,
                             const PlaneWave& wave, double h, const LsSolveOptions& opt = {}) {
  VolumeFields out;
  out.disc = discretize(cluster, materials, h);
  const auto& d = out.disc;
  const std::size_t n = d.idx.size();
  const Complex k = wave.wavenumber.k;
  const double cell = h * h * h;

  GridConvolver conv_pi(
      d.mask.dims, h,
      [&](const Vec3& dd) { return CMat3(cell * dyadic_pi(k, dd, Vec3::Zero())); },
      detail::pi_self_weight(k, h));
  GridConvolver conv_cross(
      d.mask.dims, h,
      [&](const Vec3& dd) { return CMat3(cell * cross_matrix(CVec3(grad_phi(k, dd, Vec3::Zero())))); },
      CMat3::Zero());

  std::vector<CVec3> we(n), wh(n), pe(n), ph(n), ce(n), ch(n);
  auto apply = [&](const CVecX& x, CVecX& y) {
    for (std::size_t i = 0; i < n; ++i) {
      const CVec3 e(x[6 * i], x[6 * i + 1], x[6 * i + 2]);
      const CVec3 hfield(x[6 * i + 3], x[6 * i + 4], x[6 * i + 5]);
      we[i] = d.qeps[i] * e;
      wh[i] = d.qmu[i].cast<Complex>() * hfield;
    }
    conv_pi.apply(d.idx, we, pe);
    conv_pi.apply(d.idx, wh, ph);
    conv_cross.apply(d.idx, wh, ch);
    conv_cross.apply(d.idx, we, ce);
    y.resize(static_cast<Eigen::Index>(6 * n));
    for (std::size_t i = 0; i < n; ++i) {
      const CVec3 e(x[6 * i], x[6 * i + 1], x[6 * i + 2]);
      const CVec3 hfield(x[6 * i + 3], x[6 * i + 4], x[6 * i + 5]);
      const CVec3 re = e - pe[i] - iu * k * ch[i];
      const CVec3 rh = hfield - ph[i] + iu * k * ce[i];
      for (int c = 0; c < 3; ++c) {
        y[6 * i + c] = re[c];
        y[6 * i + 3 + c] = rh[c];
      }
    }
  };

  CVecX rhs(static_cast<Eigen::Index>(6 * n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto [e_in, h_in] = incident_fields(wave, d.centers[i]);
    for (int c = 0; c < 3; ++c) {
      rhs[6 * i + c] = e_in[c];
      rhs[6 * i + 3 + c] = h_in[c];
    }
  }

  GmresOptions gopt;
  gopt.tolerance = opt.tolerance;
  gopt.max_iterations = opt.max_iterations;
  gopt.restart = opt.restart;
  CVecX x = rhs;  // identity-dominant start
  out.solve_info = gmres(apply, rhs, x, gopt);
  if (!out.solve_info.converged) {
    std::ostringstream msg;
    msg << "ls_solve: iteration cap exceeded, relative residual "
        << out.solve_info.relative_residual << "; history tail:";
    const auto& hist = out.solve_info.residual_history;
    for (std::size_t i = hist.size() > 8 ? hist.size() - 8 : 0; i < hist.size(); ++i)
      msg << ' ' << hist[i];
    throw std::runtime_error(msg.str());
  }

  out.E.resize(n);
  out.H.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.E[i] = CVec3(x[6 * i], x[6 * i + 1], x[6 * i + 2]);
    out.H[i] = CVec3(x[6 * i + 3], x[6 * i + 4], x[6 * i + 5]);
  }
  return out;
}

/// Local mask of the voxels owned by one particle, in body coordinates.
/// Lets tensor computations share the oracle's discretization exactly.
inline VoxelMask particle_mask(const VolumeDiscretization& d, int particle, const Vec3& center) {
  std::array<int, 3> lo{INT32_MAX, INT32_MAX, INT32_MAX}, hi{INT32_MIN, INT32_MIN, INT32_MIN};
  for (std::size_t v = 0; v < d.idx.size(); ++v) {
    if (d.particle[v] != particle) continue;
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], d.idx[v][c]);
      hi[c] = std::max(hi[c], d.idx[v][c]);
    }
  }
  if (lo[0] == INT32_MAX) throw std::runtime_error("particle_mask: particle has no voxels");
  VoxelMask m;
  m.h = d.h;
  m.origin = d.mask.origin - center + d.h * Vec3(lo[0], lo[1], lo[2]);
  for (int c = 0; c < 3; ++c) m.dims[c] = hi[c] - lo[c] + 1;
  m.occupied.assign(static_cast<std::size_t>(m.dims[0]) * m.dims[1] * m.dims[2], 0);
  for (std::size_t v = 0; v < d.idx.size(); ++v)
    if (d.particle[v] == particle)
      m.occupied[m.linear(d.idx[v][0] - lo[0], d.idx[v][1] - lo[1], d.idx[v][2] - lo[2])] = 1;
  return m;
}

/// Far field synthesized from oracle fields. The cluster argument guards
/// against mixing fields with a different configuration.
inline FarFieldPattern oracle_far_field(const VolumeFields& fields, const Cluster& cluster,
                                        Complex k, const SphereGrid& grid,
                                        RadiationConvention conv = RadiationConvention::magnetic_ik) {
  if (fields.disc.n_particles != cluster.count())
    throw std::invalid_argument("oracle_far_field: fields/cluster mismatch");
  const std::size_t n = fields.disc.centers.size();
  std::vector<CVec3> je(n), jm(n);
  for (std::size_t i = 0; i < n; ++i) {
    je[i] = fields.disc.qeps[i] * fields.E[i];
    jm[i] = fields.disc.qmu[i].cast<Complex>() * fields.H[i];
  }
  const double cell = fields.disc.h * fields.disc.h * fields.disc.h;
  return volume_far_field(fields.disc.centers, je, jm, cell, k, grid, conv);
}

/// Raw field dump payload: for every grid cell (x-fastest), 12 doubles
/// Ex.re Ex.im Ey.re Ey.im Ez.re Ez.im Hx... ; zeros outside the mask.
inline void write_fields_bytes(const VolumeFields& fields, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw std::runtime_error("write_fields_bytes: cannot open " + path);
  const auto& m = fields.disc.mask;
  const std::size_t total =
      static_cast<std::size_t>(m.dims[0]) * m.dims[1] * m.dims[2];
  std::vector<double> row(12, 0.0);
  std::size_t occ = 0;
  for (std::size_t cell = 0; cell < total; ++cell) {
    std::fill(row.begin(), row.end(), 0.0);
    if (m.occupied[cell]) {
      const CVec3& e = fields.E[occ];
      const CVec3& hf = fields.H[occ];
      for (int c = 0; c < 3; ++c) {
        row[2 * c] = e[c].real();
        row[2 * c + 1] = e[c].imag();
        row[6 + 2 * c] = hf[c].real();
        row[6 + 2 * c + 1] = hf[c].imag();
      }
      ++occ;
    }
    outf.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * 12);
  }
}

}  // namespace foldylax
