#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldylax/foldy.hpp"
#include "foldylax/quadrature.hpp"
#include "foldylax/types.hpp"

namespace foldylax {

/// Coefficient of the magnetic-moment term in far-field synthesis.
///  - magnetic_ik: (ik/4pi) x_hat x Q.
///  - magnetic_k2: ((ik)^2/4pi) x_hat x Q, the far-field limit of the volume
///    representation; required when comparing against the classical series
///    oracle. Identical whenever the magnetic moments vanish.
enum class RadiationConvention { magnetic_ik, magnetic_k2 };

struct FarFieldPattern {
  SphereGrid grid;
  std::vector<CVec3> values;  // E_inf per direction
  Complex k{0.0, 0.0};
  std::string source;  // "foldy" | "oracle" | "analytic"
};

namespace detail {

inline Complex magnetic_coefficient(Complex k, RadiationConvention conv) {
  const Complex ik = iu * k;
  return conv == RadiationConvention::magnetic_ik ? ik / (4.0 * pi) : ik * ik / (4.0 * pi);
}

}  // namespace detail

/// E_inf(x) = sum_m e^{-ik x.z_m} [ (k^2/4pi) x cross (R_m cross x) + c_mag x cross Q_m ].
/// The pec_alt variant radiates through its own synthesis
/// (ik/4pi) x cross (R_m - ik x cross Q_m).
inline FarFieldPattern foldy_far_field(const FoldySolution& sol, const Cluster& cluster,
                                       Complex k, const SphereGrid& grid,
                                       RadiationConvention conv = RadiationConvention::magnetic_ik) {
  if (sol.R.size() != cluster.count())
    throw std::invalid_argument("foldy_far_field: solution/cluster size mismatch");
  FarFieldPattern p;
  p.grid = grid;
  p.k = k;
  p.source = "foldy";
  p.values.assign(grid.directions.size(), CVec3::Zero());
  const Complex ce = k * k / (4.0 * pi);
  const Complex cm = detail::magnetic_coefficient(k, conv);
  const bool prop = sol.variant == FoldyVariant::pec_alt;

#pragma omp parallel for schedule(static)
  for (long long di = 0; di < static_cast<long long>(grid.directions.size()); ++di) {
    const Vec3& xh = grid.directions[static_cast<std::size_t>(di)];
    const CVec3 xc = xh.cast<Complex>();
    CVec3 acc = CVec3::Zero();
    for (std::size_t m = 0; m < cluster.count(); ++m) {
      const Complex phase = std::exp(-iu * k * xh.dot(cluster.centers[m]));
      if (prop) {
        const CVec3 inner = sol.R[m] - iu * k * xc.cross(sol.Q[m]);
        acc += phase * (iu * k / (4.0 * pi)) * xc.cross(inner);
      } else {
        acc += phase * (ce * xc.cross(sol.R[m].cross(xc)) + cm * xc.cross(sol.Q[m]));
      }
    }
    p.values[static_cast<std::size_t>(di)] = acc;
  }
  return p;
}

/// Volume synthesis from interior fields:
///   E_inf(x) = (k^2/4pi) x cross ( int e^{-ik x.y} Qc(eps) E dy cross x )
///            + c_mag     x cross   int e^{-ik x.y} Qc(mu) H dy.
/// `je` and `jm` are the contrast-applied fields Qc(eps)E and Qc(mu)H at the
/// voxel centers; midpoint quadrature with cell volume `dv`.
inline FarFieldPattern volume_far_field(const std::vector<Vec3>& centers,
                                        const std::vector<CVec3>& je,
                                        const std::vector<CVec3>& jm, double dv, Complex k,
                                        const SphereGrid& grid,
                                        RadiationConvention conv = RadiationConvention::magnetic_ik) {
  if (centers.size() != je.size() || centers.size() != jm.size())
    throw std::invalid_argument("volume_far_field: field/center size mismatch");
  FarFieldPattern p;
  p.grid = grid;
  p.k = k;
  p.source = "oracle";
  p.values.assign(grid.directions.size(), CVec3::Zero());
  const Complex ce = k * k / (4.0 * pi);
  const Complex cm = detail::magnetic_coefficient(k, conv);

#pragma omp parallel for schedule(static)
  for (long long di = 0; di < static_cast<long long>(grid.directions.size()); ++di) {
    const Vec3& xh = grid.directions[static_cast<std::size_t>(di)];
    const CVec3 xc = xh.cast<Complex>();
    CVec3 se = CVec3::Zero(), sm = CVec3::Zero();
    for (std::size_t j = 0; j < centers.size(); ++j) {
      const Complex phase = std::exp(-iu * k * xh.dot(centers[j]));
      se += phase * je[j];
      sm += phase * jm[j];
    }
    p.values[static_cast<std::size_t>(di)] =
        dv * (ce * xc.cross(se.cross(xc)) + cm * xc.cross(sm));
  }
  return p;
}

struct PatternDistance {
  double rel_l2 = 0.0;
  double max_abs = 0.0;
};

inline PatternDistance pattern_distance(const FarFieldPattern& p1, const FarFieldPattern& p2) {
  if (p1.values.size() != p2.values.size())
    throw std::invalid_argument("pattern_distance: grid size mismatch");
  for (std::size_t i = 0; i < p1.grid.directions.size(); ++i)
    if ((p1.grid.directions[i] - p2.grid.directions[i]).norm() > 1e-12)
      throw std::invalid_argument("pattern_distance: direction grids differ");
  double diff2 = 0.0, ref2 = 0.0;
  PatternDistance out;
  for (std::size_t i = 0; i < p1.values.size(); ++i) {
    const double d = (p1.values[i] - p2.values[i]).norm();
    diff2 += d * d;
    ref2 += p2.values[i].squaredNorm();
    out.max_abs = std::max(out.max_abs, d);
  }
  out.rel_l2 = ref2 > 0.0 ? std::sqrt(diff2 / ref2)
                          : (diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return out;
}

/// CSV: header row, one line per node, LF endings:
///   theta,phi,reEx,imEx,reEy,imEy,reEz,imEz
inline void write_pattern_csv(const FarFieldPattern& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
  if (!out) throw std::runtime_error("write_pattern_csv: cannot open " + path);
  out.precision(17);
  out << "theta,phi,reEx,imEx,reEy,imEy,reEz,imEz\n";
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const CVec3& v = p.values[i];
    out << p.grid.thetas[i] << ',' << p.grid.phis[i];
    for (int c = 0; c < 3; ++c) out << ',' << v[c].real() << ',' << v[c].imag();
    out << '\n';
  }
}

}  // namespace foldylax
