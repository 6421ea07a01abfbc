#pragma once

// Independent assembly oracle for the coupled point-interaction system.
// Self-contained on purpose: own kernel algebra, own unknown ordering
// (all Q blocks first, then all R blocks), no helpers shared with the
// library. Built and run before the main solver is trusted.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "foldylax/kernels.hpp"

namespace indep {

using cd = std::complex<double>;

inline void oracle_pi(cd out[3][3], const double zm[3], const double zj[3], cd k) {
  double d[3] = {zm[0] - zj[0], zm[1] - zj[1], zm[2] - zj[2]};
  const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  const cd ph = std::exp(cd(0, 1) * k * r) / (4.0 * 3.14159265358979323846 * r);
  const cd c1 = ph * (k * k + cd(0, 1) * k / r - 1.0 / (r * r));
  const cd c2 = ph * (-k * k - 3.0 * cd(0, 1) * k / r + 3.0 / (r * r));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) out[a][b] = c2 * (d[a] / r) * (d[b] / r) + (a == b ? c1 : cd(0));
}

inline void oracle_gradphi(cd out[3], const double zm[3], const double zj[3], cd k) {
  double d[3] = {zm[0] - zj[0], zm[1] - zj[1], zm[2] - zj[2]};
  const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  const cd ph = std::exp(cd(0, 1) * k * r) / (4.0 * 3.14159265358979323846 * r);
  const cd f = (cd(0, 1) * k - 1.0 / r) * ph / r;
  for (int a = 0; a < 3; ++a) out[a] = f * d[a];
}

/// Solves the coupled system for n particles with per-particle 3x3 tensors
/// tq (Q row) and tr (R row); returns (Q_1..Q_n, R_1..R_n).
inline std::vector<foldylax::CVec3> oracle_solve(const std::vector<foldylax::Vec3>& centers,
                                                 const std::vector<foldylax::CMat3>& tq,
                                                 const std::vector<foldylax::CMat3>& tr,
                                                 const foldylax::PlaneWave& wave) {
  using namespace foldylax;
  const int n = static_cast<int>(centers.size());
  const cd k = wave.wavenumber.k;
  CMatX A = CMatX::Zero(6 * n, 6 * n);
  CVecX rhs = CVecX::Zero(6 * n);
  for (int m = 0; m < n; ++m) {
    const CMat3 itq = tq[static_cast<std::size_t>(m)].inverse();
    const CMat3 itr = tr[static_cast<std::size_t>(m)].inverse();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        A(3 * m + a, 3 * m + b) = itq(a, b);
        A(3 * (n + m) + a, 3 * (n + m) + b) = itr(a, b);
      }
    double zm[3] = {centers[static_cast<std::size_t>(m)].x(),
                    centers[static_cast<std::size_t>(m)].y(),
                    centers[static_cast<std::size_t>(m)].z()};
    const cd phase = std::exp(cd(0, 1) * k *
                              (wave.direction.x() * zm[0] + wave.direction.y() * zm[1] +
                               wave.direction.z() * zm[2]));
    const cd px = wave.polarization[0], py = wave.polarization[1], pz = wave.polarization[2];
    const double tx = wave.direction.x(), ty = wave.direction.y(), tz = wave.direction.z();
    // H^in = theta x P, E^in = P (times the phase)
    rhs[3 * m + 0] = (ty * pz - tz * py) * phase;
    rhs[3 * m + 1] = (tz * px - tx * pz) * phase;
    rhs[3 * m + 2] = (tx * py - ty * px) * phase;
    rhs[3 * (n + m) + 0] = px * phase;
    rhs[3 * (n + m) + 1] = py * phase;
    rhs[3 * (n + m) + 2] = pz * phase;
    for (int j = 0; j < n; ++j) {
      if (j == m) continue;
      double zj[3] = {centers[static_cast<std::size_t>(j)].x(),
                      centers[static_cast<std::size_t>(j)].y(),
                      centers[static_cast<std::size_t>(j)].z()};
      cd pim[3][3], g[3];
      oracle_pi(pim, zm, zj, k);
      oracle_gradphi(g, zm, zj, k);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          A(3 * m + a, 3 * j + b) -= pim[a][b];
          A(3 * (n + m) + a, 3 * (n + j) + b) -= pim[a][b];
        }
      // Q_m row gets +ik [g]_x R_j; R_m row gets -ik [g]_x Q_j
      cd gx[3][3] = {{cd(0), -g[2], g[1]}, {g[2], cd(0), -g[0]}, {-g[1], g[0], cd(0)}};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          A(3 * m + a, 3 * (n + j) + b) += cd(0, 1) * k * gx[a][b];
          A(3 * (n + m) + a, 3 * j + b) -= cd(0, 1) * k * gx[a][b];
        }
    }
  }
  const CVecX x = A.partialPivLu().solve(rhs);
  std::vector<CVec3> out;
  for (int m = 0; m < 2 * n; ++m) out.push_back(x.segment<3>(3 * m));
  return out;
}

}  // namespace indep
