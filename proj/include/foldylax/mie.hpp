#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "foldylax/farfield.hpp"
#include "foldylax/kernels.hpp"
#include "foldylax/quadrature.hpp"
#include "foldylax/tensors.hpp"
#include "foldylax/types.hpp"

namespace foldylax {

struct MieCoefficients {
  std::vector<Complex> a;  // electric multipoles, a[0] is n=1
  std::vector<Complex> b;  // magnetic multipoles
  double size_parameter = 0.0;

  double q_sca() const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      s += (2.0 * n + 1.0) * (std::norm(a[i]) + std::norm(b[i]));
    }
    return 2.0 / (size_parameter * size_parameter) * s;
  }
  double q_ext() const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      s += (2.0 * n + 1.0) * (a[i] + b[i]).real();
    }
    return 2.0 / (size_parameter * size_parameter) * s;
  }
};

namespace detail {

/// Logarithmic derivative D_n(y) = psi_n'(y)/psi_n(y) by downward recurrence.
inline std::vector<Complex> log_derivative(Complex y, int n_max) {
  const int n_down = n_max + 15 + static_cast<int>(std::ceil(std::abs(y)));
  std::vector<Complex> d(static_cast<std::size_t>(n_down) + 1, Complex(0));
  for (int n = n_down; n >= 1; --n) {
    const Complex nn = static_cast<double>(n) / y;
    d[static_cast<std::size_t>(n) - 1] = nn - 1.0 / (d[static_cast<std::size_t>(n)] + nn);
  }
  d.resize(static_cast<std::size_t>(n_max) + 1);
  return d;
}

}  // namespace detail

/// Mie coefficients of an isotropic (eps, mu) sphere in vacuum, size
/// parameter x = k * radius (k real). Series cut when terms drop below
/// 1e-12 of the running total.
inline MieCoefficients mie_coefficients(double x, Complex eps, Complex mu, bool pec) {
  if (x <= 0.0) throw std::invalid_argument("mie_coefficients: size parameter must be positive");
  MieCoefficients out;
  out.size_parameter = x;
  const int n_stop =
      std::max(4, static_cast<int>(std::ceil(x + 4.0 * std::cbrt(x) + 2.0)) + 10);

  Complex m(0), z(0);
  std::vector<Complex> dlog;
  if (!pec) {
    m = std::sqrt(eps * mu);
    z = std::sqrt(mu / eps);
    dlog = detail::log_derivative(m * x, n_stop);
  }

  // Riccati-Bessel psi_n = x j_n, chi_n = -x y_n, upward.
  double psi_nm1 = std::cos(x), psi_n = std::sin(x);          // psi_{0-1}, psi_0
  double chi_nm1 = -std::sin(x), chi_n = std::cos(x);         // chi_{-1}, chi_0
  double running = 0.0;
  for (int n = 1; n <= n_stop; ++n) {
    const double psi = (2.0 * n - 1.0) / x * psi_n - psi_nm1;
    const double chi = (2.0 * n - 1.0) / x * chi_n - chi_nm1;
    psi_nm1 = psi_n;
    psi_n = psi;
    chi_nm1 = chi_n;
    chi_n = chi;
    const double psi_prime = psi_nm1 - n / x * psi;  // psi_n' = psi_{n-1} - (n/x) psi_n
    const double chi_prime = chi_nm1 - n / x * chi;
    const Complex xi = Complex(psi, -chi);
    const Complex xi_prime = Complex(psi_prime, -chi_prime);

    Complex an, bn;
    if (pec) {
      an = psi_prime / xi_prime;
      bn = psi / xi;
    } else {
      const Complex d = dlog[static_cast<std::size_t>(n)];
      const Complex za = z * d;         // electric: impedance-weighted slope
      const Complex zb = d / z;         // magnetic: dual
      an = (psi_prime - za * psi) / (xi_prime - za * xi);
      bn = (psi_prime - zb * psi) / (xi_prime - zb * xi);
    }
    out.a.push_back(an);
    out.b.push_back(bn);
    const double term = std::abs(an) + std::abs(bn);
    running = std::max(running, term);
    if (term < 1e-12 * running && n > 2) break;
  }
  return out;
}

/// Far-field pattern of the classical vector spherical-wave series for an
/// isotropic penetrable or PEC sphere of the given radius centered at
/// `center`. Conventions: incident E = P exp(ik theta.x), scattered
/// E ~ (e^{ik|x|}/|x|) E_inf; pinned by the small-sphere dipole limits.
inline FarFieldPattern sphere_series_far_field(double radius, const Material& material,
                                               const PlaneWave& wave, const SphereGrid& grid,
                                               const Vec3& center = Vec3::Zero()) {
  if (radius <= 0.0) throw std::invalid_argument("sphere_series_far_field: radius <= 0");
  if (std::abs(wave.wavenumber.k.imag()) > 0.0)
    throw std::invalid_argument("sphere_series_far_field: real wavenumber required");
  const double k = wave.wavenumber.k.real();

  bool pec = material.kind == MaterialKind::pec;
  Complex eps(1.0), mu(1.0);
  if (!pec) {
    eps = material.eps_r(0, 0);
    mu = material.mu_r(0, 0);
    if ((material.eps_r - eps * CMat3::Identity()).norm() > 1e-12 * material.eps_r.norm() ||
        (material.mu_r - mu.real() * Mat3::Identity()).norm() > 1e-12 * material.mu_r.norm())
      throw std::invalid_argument("sphere_series_far_field: anisotropic material rejected");
  }
  const MieCoefficients mc = mie_coefficients(k * radius, eps, mu, pec);

  // Frame with the incidence along e3; complex polarization decomposed onto
  // two linear states and recombined by linearity.
  const Vec3 theta = wave.direction;
  Vec3 e1 = std::abs(theta.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  e1 = (e1 - e1.dot(theta) * theta).normalized();
  const Vec3 e2 = theta.cross(e1);
  const Complex p1 = wave.polarization.transpose() * e1.cast<Complex>();
  const Complex p2 = wave.polarization.transpose() * e2.cast<Complex>();

  FarFieldPattern out;
  out.grid = grid;
  out.k = k;
  out.source = "analytic";
  out.values.assign(grid.directions.size(), CVec3::Zero());

  auto amplitudes = [&](double mu_s) {
    // S1, S2 via pi_n / tau_n recurrences.
    Complex s1(0), s2(0);
    double pi_nm1 = 0.0, pi_n = 1.0;
    for (std::size_t i = 0; i < mc.a.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      const double tau = n * mu_s * pi_n - (n + 1.0) * pi_nm1;
      const double f = (2.0 * n + 1.0) / (n * (n + 1.0));
      s1 += f * (mc.a[i] * pi_n + mc.b[i] * tau);
      s2 += f * (mc.a[i] * tau + mc.b[i] * pi_n);
      const double pi_next = ((2.0 * n + 1.0) * mu_s * pi_n - (n + 1.0) * pi_nm1) / n;
      pi_nm1 = pi_n;
      pi_n = pi_next;
    }
    return std::make_pair(s1, s2);
  };

  for (std::size_t d = 0; d < grid.directions.size(); ++d) {
    const Vec3& xh = grid.directions[d];
    const double cos_sc = xh.dot(theta);
    const auto [s1, s2] = amplitudes(cos_sc);
    Vec3 perp = theta.cross(xh);
    const double sin_sc = perp.norm();
    if (sin_sc < 1e-14) perp = e2; else perp /= sin_sc;
    const Vec3 par_in = perp.cross(theta);    // in-plane, incident side
    const Vec3 par_out = perp.cross(xh);      // in-plane, scattered side
    const Complex pol_par = p1 * par_in.dot(e1) + p2 * par_in.dot(e2);
    const Complex pol_perp = p1 * perp.dot(e1) + p2 * perp.dot(e2);
    CVec3 e_inf = (iu / k) * (s2 * pol_par * par_out.cast<Complex>() +
                              s1 * pol_perp * perp.cast<Complex>());
    // Off-origin sphere: translation phase of both incident drive and pattern.
    e_inf *= std::exp(iu * k * (theta - xh).dot(center));
    out.values[d] = e_inf;
  }
  return out;
}

}  // namespace foldylax
