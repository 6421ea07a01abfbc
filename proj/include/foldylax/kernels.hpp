#pragma once

#include <cmath>
#include <stdexcept>
#include <tuple>

#include "foldylax/types.hpp"

namespace foldylax {

/// Admissible wavenumber: Re(k) >= 0 and Im(k) >= 0.
struct WaveNumber {
  Complex k{1.0, 0.0};

  WaveNumber() = default;
  explicit WaveNumber(Complex value) : k(value) {
    if (k.real() < 0.0 || k.imag() < 0.0)
      throw std::invalid_argument("WaveNumber: need Re(k) >= 0 and Im(k) >= 0");
  }
  WaveNumber(double re, double im) : WaveNumber(Complex(re, im)) {}
};

/// Plane wave E = P exp(ik theta.x) with |theta| = 1 and P.theta = 0.
struct PlaneWave {
  Vec3 direction{0.0, 0.0, 1.0};
  CVec3 polarization{CVec3(1.0, 0.0, 0.0)};
  WaveNumber wavenumber{};

  PlaneWave() = default;
  PlaneWave(const Vec3& theta, const CVec3& pol, WaveNumber wn)
      : direction(theta), polarization(pol), wavenumber(wn) {
    if (std::abs(direction.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("PlaneWave: |theta| != 1");
    const Complex dot = polarization.dot(direction.cast<Complex>());
    // .dot conjugates the left factor; transversality means P.theta = 0 in the
    // bilinear sense, which for real theta is the same up to conjugation.
    if (std::abs(dot) > 1e-12 * std::max(1.0, polarization.norm()))
      throw std::invalid_argument("PlaneWave: P not transverse to theta");
  }
};

/// Helmholtz fundamental solution Phi_k(x,y) = exp(ik|x-y|) / (4 pi |x-y|).
inline Complex phi(Complex k, const Vec3& x, const Vec3& y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw std::domain_error("phi: evaluation at the singularity x = y");
  return std::exp(iu * k * r) / (4.0 * pi * r);
}

/// grad_x Phi_k(x,y) = (ik - 1/r) Phi_k (x-y)/r.
inline CVec3 grad_phi(Complex k, const Vec3& x, const Vec3& y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw std::domain_error("grad_phi: evaluation at the singularity x = y");
  const Complex p = std::exp(iu * k * r) / (4.0 * pi * r);
  return ((iu * k - 1.0 / r) * p / r) * d.cast<Complex>();
}

/// Hessian grad_x grad_x Phi_k(x,y); symmetric, equal to grad_y grad_y Phi_k.
inline CMat3 hessian_phi(Complex k, const Vec3& x, const Vec3& y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw std::domain_error("hessian_phi: evaluation at the singularity x = y");
  const Complex p = std::exp(iu * k * r) / (4.0 * pi * r);
  const Vec3 u = d / r;
  // Phi'' u u^T + (Phi'/r)(I - u u^T) with Phi' = (ik - 1/r) Phi.
  const Complex radial = (-k * k - 2.0 * iu * k / r + 2.0 / (r * r)) * p;
  const Complex lateral = (iu * k / r - 1.0 / (r * r)) * p;
  CMat3 m = lateral * CMat3::Identity();
  m += (radial - lateral) * (u * u.transpose()).cast<Complex>();
  return m;
}

/// Electromagnetic dyadic kernel Pi_k = k^2 Phi_k I + grad_x grad_x Phi_k.
/// Closed form: Phi_k [ (k^2 + ik/r - 1/r^2) I + (-k^2 - 3ik/r + 3/r^2) u u^T ].
inline CMat3 dyadic_pi(Complex k, const Vec3& x, const Vec3& y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw std::domain_error("dyadic_pi: evaluation at the singularity x = y");
  const Complex p = std::exp(iu * k * r) / (4.0 * pi * r);
  const Vec3 u = d / r;
  const Complex diag = (k * k + iu * k / r - 1.0 / (r * r)) * p;
  const Complex dyad = (-k * k - 3.0 * iu * k / r + 3.0 / (r * r)) * p;
  CMat3 m = diag * CMat3::Identity();
  m += dyad * (u * u.transpose()).cast<Complex>();
  return m;
}

/// Incident fields at x. Enforces the Maxwell pair curl E = ik H,
/// curl H = -ik E exactly, which fixes H = (theta x P) exp(ik theta.x).
/// `h_over_ik_form` instead returns the display-form normalization
/// H = (P x theta) exp(ik theta.x) / (ik), kept for comparison runs only.
inline std::pair<CVec3, CVec3> incident_fields(const PlaneWave& wave, const Vec3& x,
                                               bool h_over_ik_form = false) {
  const Complex k = wave.wavenumber.k;
  const Complex phase = std::exp(iu * k * wave.direction.dot(x));
  const CVec3 e = phase * wave.polarization;
  CVec3 h;
  const CVec3 theta_c = wave.direction.cast<Complex>();
  if (h_over_ik_form) {
    h = phase / (iu * k) * wave.polarization.cross(theta_c);
  } else {
    h = phase * theta_c.cross(wave.polarization);
  }
  return {e, h};
}

/// Magnitudes of the first-order Taylor remainders of Phi_k about z_m:
///   r0 = |Phi_k(x,y) - Phi_k(z,y)|
///   r1 = |grad_y (Phi_k(x,y) - Phi_k(z,y))|
///   r2 = ||hess_y (Phi_k(x,y) - Phi_k(z,y))||_F
/// Requires y to be well separated: |y - z| >= 2 |x - z|.
inline std::tuple<double, double, double> expansion_remainders(Complex k, const Vec3& z,
                                                               const Vec3& x, const Vec3& y) {
  const double ax = (x - z).norm();
  const double ay = (y - z).norm();
  if (ay < 2.0 * ax)
    throw std::invalid_argument("expansion_remainders: y too close to the segment (need |y-z| >= 2|x-z|)");
  if (ax == 0.0) return {0.0, 0.0, 0.0};
  const double r0 = std::abs(phi(k, x, y) - phi(k, z, y));
  // grad_y Phi(x,y) = -grad_x evaluated with roles swapped; the difference of
  // two smooth gradients, both evaluated away from their singularities.
  const CVec3 g = grad_phi(k, y, x) - grad_phi(k, y, z);
  const double r1 = g.norm();
  const CMat3 h = hessian_phi(k, y, x) - hessian_phi(k, y, z);
  const double r2 = h.norm();
  return {r0, r1, r2};
}

}  // namespace foldylax
