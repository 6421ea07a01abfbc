#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "foldylax/geometry.hpp"
#include "foldylax/gmres.hpp"
#include "foldylax/kernels.hpp"
#include "foldylax/tensors.hpp"
#include "foldylax/types.hpp"

namespace foldylax {

/// Coupled-system flavours.
///  - aniso_symmetric:    system for symmetric contrasts, diagonals A^-1.
///  - aniso_nonsymmetric: averaged-contrast system; the tensor set must hold
///    the conjugated tensors A~ = <Qc> A^{<Qc^T>} <Qc^T>^{-1}.
///  - pec:                conducting-particle system with diagonals T^-1, P^-1
///    and forcings H^in, E^in; single-particle moments are exactly
///    Q = T H^in, R = P E^in.
///  - pec_alt:            alternatively signed conducting system (-P diagonal,
///    k^2 grad-Phi coupling, curl E^in and -E^in forcings); kept for
///    comparison runs, with its own far-field synthesis.
///  - pec_maxwell:        diagonals (-T)^-1, (-P)^-1, the high-contrast limit
///    of the anisotropic system; the variant that agrees with the classical
///    series oracle in the dipole regime.
enum class FoldyVariant { aniso_symmetric, aniso_nonsymmetric, pec, pec_alt, pec_maxwell };

inline const char* to_string(FoldyVariant v) {
  switch (v) {
    case FoldyVariant::aniso_symmetric: return "aniso_symmetric";
    case FoldyVariant::aniso_nonsymmetric: return "aniso_nonsymmetric";
    case FoldyVariant::pec: return "pec";
    case FoldyVariant::pec_alt: return "pec_alt";
    case FoldyVariant::pec_maxwell: return "pec_maxwell";
  }
  return "?";
}

struct InvertibilityCheck {
  double c_r = 0.0;
  double threshold = 0.0;  // 3 |k| mu+
  bool satisfied = false;
  bool c_r_infinite = false;
};

struct FoldyProblem {
  Cluster cluster;
  TensorSet tensors;
  PlaneWave wave;
  FoldyVariant variant = FoldyVariant::aniso_symmetric;
  bool h_over_ik_normalization = false;  // comparison runs only

  InvertibilityCheck invertibility() const {
    InvertibilityCheck c;
    const ClusterMetrics met = metrics(cluster);
    c.c_r = met.c_r;
    c.c_r_infinite = met.c_r_infinite;
    const SpectralBounds b = tensor_spectral_bounds(tensors, cluster.radius_a);
    c.threshold = 3.0 * std::abs(wave.wavenumber.k) * b.mu_plus;
    c.satisfied = c.c_r_infinite || c.c_r >= c.threshold;
    return c;
  }
};

struct FoldySolution {
  std::vector<CVec3> R;  // electric moments
  std::vector<CVec3> Q;  // magnetic moments
  double residual = 0.0;
  double condition_estimate = 0.0;
  FoldyVariant variant = FoldyVariant::aniso_symmetric;
  Complex k{0.0, 0.0};
  InvertibilityCheck invertibility;
};

namespace detail {

/// Diagonal blocks (to invert) for the Q and R rows of each variant.
inline std::pair<CMat3, CMat3> diagonal_tensors(const ParticleTensors& t, FoldyVariant v) {
  switch (v) {
    case FoldyVariant::aniso_symmetric:
    case FoldyVariant::aniso_nonsymmetric:
      return {t.magnetic, t.electric};  // Q-slot, R-slot
    case FoldyVariant::pec:
      return {t.magnetic, t.electric};  // T, P
    case FoldyVariant::pec_maxwell:
      return {CMat3(-t.magnetic), CMat3(-t.electric)};  // -T, -P
    case FoldyVariant::pec_alt:
      return {CMat3(-t.electric), t.magnetic};  // Q-slot holds Q^2 with -P, R-slot Q^1 with T
  }
  throw std::logic_error("diagonal_tensors: bad variant");
}

inline CMat3 invert_named(const CMat3& m, std::size_t particle, const char* what) {
  Eigen::FullPivLU<CMat3> lu(m);
  if (!lu.isInvertible())
    throw std::runtime_error(std::string("foldy: singular ") + what + " tensor on particle " +
                             std::to_string(particle));
  return lu.inverse();
}

struct ActiveSlots {
  std::vector<int> q_index;  // position in the reduced unknown vector, -1 if eliminated
  std::vector<int> r_index;
  int active = 0;  // number of active 3-blocks
};

inline ActiveSlots active_slots(const FoldyProblem& p) {
  ActiveSlots s;
  const std::size_t n = p.cluster.count();
  s.q_index.assign(n, -1);
  s.r_index.assign(n, -1);
  for (std::size_t m = 0; m < n; ++m) {
    const bool is_pec = p.tensors[m].pec;
    const bool q_active = is_pec || !p.tensors[m].magnetic_zero();
    const bool r_active = is_pec || !p.tensors[m].electric_zero();
    if (q_active) s.q_index[m] = s.active++;
    if (r_active) s.r_index[m] = s.active++;
  }
  return s;
}

/// Builds the reduced system over the active moment blocks. Row/rhs layout:
/// per particle, Q block then R block, skipping eliminated slots.
inline void build_system(const FoldyProblem& p, const ActiveSlots& s, CMatX& a, CVecX& b) {
  const std::size_t n = p.cluster.count();
  const Complex k = p.wave.wavenumber.k;
  const Eigen::Index dim = 3 * static_cast<Eigen::Index>(s.active);
  a = CMatX::Zero(dim, dim);
  b = CVecX::Zero(dim);

  const bool prop = p.variant == FoldyVariant::pec_alt;
  const Complex cross_q = prop ? k * k : iu * k;   // coefficient of [grad Phi]_x in the Q row
  const Complex cross_r = prop ? Complex(1.0) : -iu * k;  // and in the R row

  for (std::size_t m = 0; m < n; ++m) {
    const auto [tq, tr] = diagonal_tensors(p.tensors[m], p.variant);
    const auto [e_in, h_in] =
        incident_fields(p.wave, p.cluster.centers[m], p.h_over_ik_normalization);
    if (s.q_index[m] >= 0) {
      const Eigen::Index row = 3 * s.q_index[m];
      a.block<3, 3>(row, row) = invert_named(tq, m, "Q-slot");
      const CVec3 fq = prop ? CVec3(iu * k * h_in) : h_in;  // curl E^in = ik H^in
      b.segment<3>(row) = fq;
    }
    if (s.r_index[m] >= 0) {
      const Eigen::Index row = 3 * s.r_index[m];
      a.block<3, 3>(row, row) = invert_named(tr, m, "R-slot");
      b.segment<3>(row) = prop ? CVec3(-e_in) : e_in;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == m) continue;
      const CMat3 pi = dyadic_pi(k, p.cluster.centers[m], p.cluster.centers[j]);
      const CMat3 gx = cross_matrix(CVec3(grad_phi(k, p.cluster.centers[m], p.cluster.centers[j])));
      if (s.q_index[m] >= 0) {
        const Eigen::Index row = 3 * s.q_index[m];
        if (s.q_index[j] >= 0) a.block<3, 3>(row, 3 * s.q_index[j]) = -pi;
        if (s.r_index[j] >= 0) a.block<3, 3>(row, 3 * s.r_index[j]) = cross_q * gx;
      }
      if (s.r_index[m] >= 0) {
        const Eigen::Index row = 3 * s.r_index[m];
        if (s.r_index[j] >= 0) a.block<3, 3>(row, 3 * s.r_index[j]) = -pi;
        if (s.q_index[j] >= 0) a.block<3, 3>(row, 3 * s.q_index[j]) = cross_r * gx;
      }
    }
  }
}

/// Hager-style 1-norm condition estimate from an LU factorization.
inline double condition_estimate_1(const CMatX& a, const Eigen::PartialPivLU<CMatX>& lu) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  const double anorm = a.cwiseAbs().colwise().sum().maxCoeff();
  CVecX x = CVecX::Constant(n, Complex(1.0 / static_cast<double>(n)));
  double est = 0.0;
  for (int it = 0; it < 6; ++it) {
    const CVecX y = lu.solve(x);
    est = y.cwiseAbs().sum();
    CVecX xi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = std::abs(y[i]);
      xi[i] = m > 0.0 ? y[i] / m : Complex(1.0);
    }
    const CVecX z = lu.adjoint().solve(xi);
    Eigen::Index jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    if (std::abs(z[jmax]) <= std::real(z.dot(x)) + 1e-16) break;
    x.setZero();
    x[jmax] = 1.0;
  }
  return anorm * est;
}

}  // namespace detail

/// Full 6N x 6N system exactly as displayed (Q rows then R rows per particle).
/// Requires every tensor slot invertible; reduced solves with eliminated
/// zero-contrast slots go through solve() instead.
inline std::pair<CMatX, CVecX> assemble(const FoldyProblem& p) {
  p.cluster.validate();
  if (p.tensors.size() != p.cluster.count())
    throw std::invalid_argument("assemble: tensor set size mismatch");
  detail::ActiveSlots all;
  const std::size_t n = p.cluster.count();
  all.q_index.resize(n);
  all.r_index.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    all.q_index[m] = static_cast<int>(2 * m);
    all.r_index[m] = static_cast<int>(2 * m + 1);
  }
  all.active = static_cast<int>(2 * n);
  CMatX a;
  CVecX b;
  detail::build_system(p, all, a, b);
  return {std::move(a), std::move(b)};
}

struct FoldySolveOptions {
  Eigen::Index dense_limit = 6000;  // beyond this, preconditioned GMRES
  double iterative_tolerance = 1e-12;
};

inline FoldySolution solve(const FoldyProblem& p, const FoldySolveOptions& opt = {}) {
  p.cluster.validate();
  if (p.tensors.size() != p.cluster.count())
    throw std::invalid_argument("solve: tensor set size mismatch");
  const bool want_pec = p.variant == FoldyVariant::pec ||
                        p.variant == FoldyVariant::pec_alt ||
                        p.variant == FoldyVariant::pec_maxwell;
  for (std::size_t m = 0; m < p.tensors.size(); ++m)
    if (p.tensors[m].pec != want_pec)
      throw std::invalid_argument("solve: tensor kind incompatible with variant on particle " +
                                  std::to_string(m));

  const detail::ActiveSlots slots = detail::active_slots(p);
  const std::size_t n = p.cluster.count();
  FoldySolution sol;
  sol.variant = p.variant;
  sol.k = p.wave.wavenumber.k;
  sol.invertibility = p.invertibility();
  sol.R.assign(n, CVec3::Zero());
  sol.Q.assign(n, CVec3::Zero());
  if (slots.active == 0) return sol;

  CMatX a;
  CVecX b;
  detail::build_system(p, slots, a, b);

  CVecX x;
  if (a.rows() <= opt.dense_limit) {
    Eigen::PartialPivLU<CMatX> lu(a);
    x = lu.solve(b);
    sol.condition_estimate = detail::condition_estimate_1(a, lu);
    const double bnorm = b.norm();
    sol.residual = bnorm > 0.0 ? (a * x - b).norm() / bnorm : 0.0;
    if (!x.allFinite())
      throw std::runtime_error("solve: numerically singular system, condition estimate " +
                               std::to_string(sol.condition_estimate));
  } else {
    // Block-diagonal preconditioner: multiply through by the diagonal tensors.
    CMatX pa = a;
    CVecX pb = b;
    for (std::size_t m = 0; m < n; ++m) {
      const auto [tq, tr] = detail::diagonal_tensors(p.tensors[m], p.variant);
      if (slots.q_index[m] >= 0) {
        const Eigen::Index row = 3 * slots.q_index[m];
        pa.middleRows<3>(row) = tq * a.middleRows<3>(row);
        pb.segment<3>(row) = tq * b.segment<3>(row);
      }
      if (slots.r_index[m] >= 0) {
        const Eigen::Index row = 3 * slots.r_index[m];
        pa.middleRows<3>(row) = tr * a.middleRows<3>(row);
        pb.segment<3>(row) = tr * b.segment<3>(row);
      }
    }
    GmresOptions gopt;
    gopt.tolerance = opt.iterative_tolerance;
    x = CVecX::Zero(a.rows());
    auto apply = [&](const CVecX& v, CVecX& y) { y = pa * v; };
    const GmresResult res = gmres(apply, pb, x, gopt);
    if (!res.converged)
      throw std::runtime_error("solve: iterative solve stalled, residual " +
                               std::to_string(res.relative_residual));
    const double bnorm = b.norm();
    sol.residual = bnorm > 0.0 ? (a * x - b).norm() / bnorm : 0.0;
    sol.condition_estimate = 0.0;  // not estimated on the iterative path
  }

  for (std::size_t m = 0; m < n; ++m) {
    if (slots.q_index[m] >= 0) sol.Q[m] = x.segment<3>(3 * slots.q_index[m]);
    if (slots.r_index[m] >= 0) sol.R[m] = x.segment<3>(3 * slots.r_index[m]);
  }
  return sol;
}

struct NormCheck {
  bool applicable = false;
  std::string reason;
  double lhs_q = 0.0, rhs_q = 0.0;
  double lhs_r = 0.0, rhs_r = 0.0;
  bool holds_q = false, holds_r = false;
};

/// A-priori solution-norm estimate (valid for |k| > 1, c_r >= 3|k|mu+):
///   ||Q||_l2 <= (9 mu+ a^3 / 8) ( ||H^in||_l2 + ||E^in||_l2 / 3 )
/// and symmetrically for R.
inline NormCheck solution_norm_check(const FoldyProblem& p, const FoldySolution& sol) {
  NormCheck out;
  const double kabs = std::abs(p.wave.wavenumber.k);
  const InvertibilityCheck inv = p.invertibility();
  if (kabs <= 1.0) {
    out.reason = "|k| <= 1";
    return out;
  }
  if (!inv.satisfied) {
    out.reason = "c_r below 3|k|mu+";
    return out;
  }
  out.applicable = true;
  const SpectralBounds bounds = tensor_spectral_bounds(p.tensors, p.cluster.radius_a);
  const double a3 = std::pow(p.cluster.radius_a, 3);
  double h2 = 0.0, e2 = 0.0;
  for (const auto& z : p.cluster.centers) {
    const auto [e_in, h_in] = incident_fields(p.wave, z, p.h_over_ik_normalization);
    h2 += h_in.squaredNorm();
    e2 += e_in.squaredNorm();
  }
  const double hn = std::sqrt(h2), en = std::sqrt(e2);
  for (const auto& q : sol.Q) out.lhs_q += q.squaredNorm();
  for (const auto& r : sol.R) out.lhs_r += r.squaredNorm();
  out.lhs_q = std::sqrt(out.lhs_q);
  out.lhs_r = std::sqrt(out.lhs_r);
  const double factor = 9.0 * bounds.mu_plus * a3 / 8.0;
  out.rhs_q = factor * (hn + en / 3.0);
  out.rhs_r = factor * (hn / 3.0 + en);
  out.holds_q = out.lhs_q <= out.rhs_q;
  out.holds_r = out.lhs_r <= out.rhs_r;
  return out;
}

}  // namespace foldylax
