#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "foldylax/types.hpp"

namespace foldylax {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

/// Unit-sphere quadrature grid: Gauss-Legendre in cos(theta) x uniform in phi.
/// Nodes are theta-major (all phi for the first theta, then the next theta).
struct SphereGrid {
  std::vector<Vec3> directions;
  std::vector<double> weights;   // sum to 4*pi
  std::vector<double> thetas;    // per node
  std::vector<double> phis;      // per node
  int n_theta = 0;
  int n_phi = 0;
};

inline SphereGrid sphere_grid(int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 4)
    throw std::invalid_argument("sphere_grid: need n_theta >= 2 and n_phi >= 4");
  std::vector<double> ct, wt;
  gauss_legendre(n_theta, ct, wt);
  SphereGrid g;
  g.n_theta = n_theta;
  g.n_phi = n_phi;
  const double wphi = 2.0 * pi / n_phi;
  g.directions.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  for (int it = 0; it < n_theta; ++it) {
    const double c = ct[it];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double theta = std::acos(c);
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi_ = (ip + 0.5) * wphi;
      g.directions.emplace_back(s * std::cos(phi_), s * std::sin(phi_), c);
      g.weights.push_back(wt[it] * wphi);
      g.thetas.push_back(theta);
      g.phis.push_back(phi_);
    }
  }
  return g;
}

}  // namespace foldylax
