#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "foldylax/types.hpp"

namespace foldylax {

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;
};

struct GmresOptions {
  int restart = 60;       // fixed restart length; determinism matters downstream
  int max_iterations = 2000;
  double tolerance = 1e-8;  // relative to |b|
};

/// Restarted GMRES(m) for complex systems, matrix-free: `apply(x, y)` writes
/// y = A x. Modified Gram-Schmidt, Givens rotations, no preconditioner.
template <class Apply>
GmresResult gmres(Apply&& apply, const CVecX& b, CVecX& x, const GmresOptions& opt = {}) {
  const Eigen::Index n = b.size();
  if (x.size() != n) x = CVecX::Zero(n);
  const double bnorm = b.norm();
  GmresResult result;
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }

  const int m = std::min<int>(opt.restart, static_cast<int>(n));
  std::vector<CVecX> basis(static_cast<std::size_t>(m) + 1);
  CMatX hess = CMatX::Zero(m + 1, m);
  CVecX work(n);

  int total_it = 0;
  while (total_it < opt.max_iterations) {
    apply(x, work);
    CVecX r = b - work;
    double beta = r.norm();
    result.relative_residual = beta / bnorm;
    result.residual_history.push_back(result.relative_residual);
    if (result.relative_residual <= opt.tolerance) {
      result.converged = true;
      result.iterations = total_it;
      return result;
    }

    basis[0] = r / beta;
    CVecX g = CVecX::Zero(m + 1);
    g[0] = beta;
    std::vector<Complex> cs(m), sn(m);
    int k = 0;
    for (; k < m && total_it < opt.max_iterations; ++k, ++total_it) {
      apply(basis[static_cast<std::size_t>(k)], work);
      for (int i = 0; i <= k; ++i) {
        hess(i, k) = basis[static_cast<std::size_t>(i)].dot(work);  // conjugated dot
        work -= hess(i, k) * basis[static_cast<std::size_t>(i)];
      }
      hess(k + 1, k) = work.norm();
      if (std::abs(hess(k + 1, k)) > 1e-300)
        basis[static_cast<std::size_t>(k) + 1] = work / hess(k + 1, k);
      else
        basis[static_cast<std::size_t>(k) + 1] = CVecX::Zero(n);

      for (int i = 0; i < k; ++i) {
        const Complex t = std::conj(cs[static_cast<std::size_t>(i)]) * hess(i, k) +
                          std::conj(sn[static_cast<std::size_t>(i)]) * hess(i + 1, k);
        hess(i + 1, k) = -sn[static_cast<std::size_t>(i)] * hess(i, k) +
                         cs[static_cast<std::size_t>(i)] * hess(i + 1, k);
        hess(i, k) = t;
      }
      const double denom = std::sqrt(std::norm(hess(k, k)) + std::norm(hess(k + 1, k)));
      if (denom > 1e-300) {
        cs[static_cast<std::size_t>(k)] = hess(k, k) / denom;
        sn[static_cast<std::size_t>(k)] = hess(k + 1, k) / denom;
      } else {
        cs[static_cast<std::size_t>(k)] = 1.0;
        sn[static_cast<std::size_t>(k)] = 0.0;
      }
      hess(k, k) = std::conj(cs[static_cast<std::size_t>(k)]) * hess(k, k) +
                   std::conj(sn[static_cast<std::size_t>(k)]) * hess(k + 1, k);
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[static_cast<std::size_t>(k)] * g[k];
      g[k] = std::conj(cs[static_cast<std::size_t>(k)]) * g[k];

      result.relative_residual = std::abs(g[k + 1]) / bnorm;
      result.residual_history.push_back(result.relative_residual);
      if (result.relative_residual <= opt.tolerance) {
        ++k;
        break;
      }
    }

    // Back-substitute and update x.
    CVecX y = CVecX::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      Complex s = g[i];
      for (int j = i + 1; j < k; ++j) s -= hess(i, j) * y[j];
      y[i] = s / hess(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * basis[static_cast<std::size_t>(i)];

    if (result.relative_residual <= opt.tolerance) {
      result.converged = true;
      result.iterations = total_it;
      return result;
    }
  }
  result.iterations = total_it;
  return result;
}

}  // namespace foldylax
