#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "foldylax/mesh.hpp"
#include "foldylax/rng.hpp"
#include "foldylax/types.hpp"
#include "foldylax/voxel.hpp"

namespace foldylax {

// Particle shapes, in body coordinates relative to the particle center.
struct BallShape {
  double radius = 0.0;
};
struct EllipsoidShape {
  Vec3 semi_axes = Vec3::Zero();  // axis-aligned
};
struct VoxelShape {
  std::shared_ptr<const VoxelMask> mask;  // coordinates relative to the center
};
struct MeshShape {
  std::shared_ptr<const TriMesh> mesh;  // coordinates relative to the center
};

using Shape = std::variant<BallShape, EllipsoidShape, VoxelShape, MeshShape>;

/// Radius of the smallest origin-centered ball containing the shape
/// (voxel shapes measured by cell centers).
inline double shape_extent(const Shape& shape) {
  struct Visitor {
    double operator()(const BallShape& b) const { return b.radius; }
    double operator()(const EllipsoidShape& e) const { return e.semi_axes.maxCoeff(); }
    double operator()(const VoxelShape& v) const {
      double r = 0.0;
      for (const auto& c : v.mask->centers()) r = std::max(r, c.norm());
      return r;
    }
    double operator()(const MeshShape& m) const {
      double r = 0.0;
      for (const auto& p : m.mesh->vertices) r = std::max(r, p.norm());
      return r;
    }
  };
  return std::visit(Visitor{}, shape);
}

/// Boundary sample points (body coordinates) for set-distance evaluation.
inline std::vector<Vec3> boundary_samples(const Shape& shape) {
  struct Visitor {
    std::vector<Vec3> operator()(const BallShape& b) const {
      TriMesh s = icosphere(b.radius, 2);
      return s.vertices;
    }
    std::vector<Vec3> operator()(const EllipsoidShape& e) const {
      TriMesh s = icosphere(1.0, 2);
      std::vector<Vec3> out;
      out.reserve(s.vertices.size());
      for (const auto& p : s.vertices) out.push_back(p.cwiseProduct(e.semi_axes));
      return out;
    }
    std::vector<Vec3> operator()(const VoxelShape& v) const { return v.mask->surface_centers(); }
    std::vector<Vec3> operator()(const MeshShape& m) const {
      std::vector<Vec3> out = m.mesh->vertices;
      for (std::size_t f = 0; f < m.mesh->face_count(); ++f)
        out.push_back(m.mesh->face_centroid(f));
      return out;
    }
  };
  return std::visit(Visitor{}, shape);
}

/// Distance between two particle bodies. Ball-ball is analytic; any other
/// pairing is the minimum over sampled boundary point sets.
inline double body_distance(const Shape& sa, const Vec3& za, const Shape& sb, const Vec3& zb) {
  const auto* ball_a = std::get_if<BallShape>(&sa);
  const auto* ball_b = std::get_if<BallShape>(&sb);
  if (ball_a && ball_b) return (za - zb).norm() - ball_a->radius - ball_b->radius;
  if (ball_a || ball_b) {
    const auto& ball = ball_a ? *ball_a : *ball_b;
    const Vec3& zball = ball_a ? za : zb;
    const Shape& other = ball_a ? sb : sa;
    const Vec3& zother = ball_a ? zb : za;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : boundary_samples(other))
      d = std::min(d, (p + zother - zball).norm() - ball.radius);
    return d;
  }
  double d = std::numeric_limits<double>::infinity();
  const auto pa = boundary_samples(sa);
  const auto pb = boundary_samples(sb);
  for (const auto& p : pa)
    for (const auto& q : pb) d = std::min(d, (p + za - q - zb).norm());
  return d;
}

/// Cluster of small particles: centers z_m, maximum relative radius a (every
/// body fits in the ball of diameter a about its center), one shape each.
struct Cluster {
  std::vector<Vec3> centers;
  double radius_a = 0.0;
  std::vector<Shape> shapes;

  std::size_t count() const { return centers.size(); }

  void validate() const {
    if (radius_a <= 0.0) throw std::invalid_argument("Cluster: radius_a must be positive");
    if (centers.size() != shapes.size())
      throw std::invalid_argument("Cluster: centers/shapes size mismatch");
    if (centers.empty()) throw std::invalid_argument("Cluster: empty");
    for (std::size_t m = 0; m < shapes.size(); ++m) {
      const double ext = shape_extent(shapes[m]);
      double slack = 1e-9 * radius_a;
      if (std::holds_alternative<VoxelShape>(shapes[m]))
        slack += std::get<VoxelShape>(shapes[m]).mask->h;  // cell-center granularity
      if (ext > 0.5 * radius_a + slack)
        throw std::invalid_argument("Cluster: particle " + std::to_string(m) +
                                    " does not fit in the ball of diameter radius_a");
    }
    for (std::size_t m = 0; m < centers.size(); ++m)
      for (std::size_t j = m + 1; j < centers.size(); ++j)
        if (body_distance(shapes[m], centers[m], shapes[j], centers[j]) <= 0.0)
          throw std::invalid_argument("Cluster: bodies " + std::to_string(m) + " and " +
                                      std::to_string(j) + " overlap");
  }
};

struct ClusterMetrics {
  double d_min = std::numeric_limits<double>::infinity();
  double c_r = std::numeric_limits<double>::infinity();
  bool c_r_infinite = false;  // single-particle sentinel
  MatX distance_matrix;       // symmetric, zero diagonal
};

inline ClusterMetrics metrics(const Cluster& cluster) {
  const std::size_t n = cluster.count();
  ClusterMetrics out;
  out.distance_matrix = MatX::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (n < 2) {
    out.c_r_infinite = true;
    return out;
  }
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t j = m + 1; j < n; ++j) {
      const double d = body_distance(cluster.shapes[m], cluster.centers[m],
                                     cluster.shapes[j], cluster.centers[j]);
      out.distance_matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = d;
      out.distance_matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = d;
      out.d_min = std::min(out.d_min, d);
    }
  out.c_r = out.d_min / cluster.radius_a;
  return out;
}

/// Axis-aligned lattice of ball particles of radius a/2.
inline Cluster build_grid_cluster(double spacing, const std::array<int, 3>& counts,
                                  double radius_a, const Vec3& origin = Vec3::Zero()) {
  if (spacing <= radius_a)
    throw std::invalid_argument("build_grid_cluster: spacing <= radius_a would overlap bodies");
  if (counts[0] < 1 || counts[1] < 1 || counts[2] < 1)
    throw std::invalid_argument("build_grid_cluster: counts must be >= 1");
  Cluster c;
  c.radius_a = radius_a;
  for (int l = 0; l < counts[2]; ++l)
    for (int j = 0; j < counts[1]; ++j)
      for (int i = 0; i < counts[0]; ++i) {
        c.centers.push_back(origin + spacing * Vec3(i, j, l));
        c.shapes.push_back(BallShape{0.5 * radius_a});
      }
  c.validate();
  return c;
}

/// Random ball cluster in a box by rejection sampling; throws after
/// `max_attempts` total draws rather than looping forever.
inline Cluster build_random_cluster(std::size_t n, double radius_a, double min_center_gap,
                                    const Vec3& box_lo, const Vec3& box_hi, Rng& rng,
                                    std::size_t max_attempts = 100000) {
  Cluster c;
  c.radius_a = radius_a;
  std::size_t attempts = 0;
  while (c.centers.size() < n) {
    if (++attempts > max_attempts)
      throw std::runtime_error("build_random_cluster: attempt cap exceeded (box too tight)");
    Vec3 p(rng.uniform(box_lo.x(), box_hi.x()), rng.uniform(box_lo.y(), box_hi.y()),
           rng.uniform(box_lo.z(), box_hi.z()));
    bool ok = true;
    for (const auto& q : c.centers)
      if ((p - q).norm() < min_center_gap) {
        ok = false;
        break;
      }
    if (ok) {
      c.centers.push_back(p);
      c.shapes.push_back(BallShape{0.5 * radius_a});
    }
  }
  c.validate();
  return c;
}

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Occlusion counting bound:
///   max_m sum_{j != m} g(d_mj)
///     <= 48 sum_{1<=l<=N} sum_{0<=i<=k<=l} g([sqrt(l^2+k^2+i^2)(c_r+1) - 1] a).
/// g must be nonnegative at every evaluated point.
template <class G>
BoundCheck counting_bound_check(const Cluster& cluster, G&& g) {
  const std::size_t n = cluster.count();
  if (n < 2) throw std::invalid_argument("counting_bound_check: need at least 2 particles");
  const ClusterMetrics met = metrics(cluster);
  auto eval = [&](double d) {
    const double v = g(d);
    if (v < 0.0) throw std::invalid_argument("counting_bound_check: g negative at d=" + std::to_string(d));
    return v;
  };

  BoundCheck out;
  for (std::size_t m = 0; m < n; ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != m)
        s += eval(met.distance_matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)));
    out.lhs = std::max(out.lhs, s);
  }

  const double cr1 = met.c_r + 1.0;
  const double a = cluster.radius_a;
  double rhs = 0.0;
  const long nn = static_cast<long>(n);
  for (long l = 1; l <= nn; ++l)
    for (long k = 0; k <= l; ++k)
      for (long i = 0; i <= k; ++i) {
        const double rad = std::sqrt(static_cast<double>(l * l + k * k + i * i));
        rhs += eval((rad * cr1 - 1.0) * a);
      }
  out.rhs = 48.0 * rhs;
  out.holds = out.lhs <= out.rhs;
  return out;
}

/// Square-sum counting bound with caller-supplied constant c0 (default 48):
///   sum_m (sum_{j != m} alpha_j / d_mj^q)^2
///     <= (c0/delta^q sum_{l=1}^{N^(1/3)} l^(2-q))^2 sum_m alpha_m^2.
inline BoundCheck double_sum_bound_check(const Cluster& cluster, const VecX& alpha, double q,
                                         double c0 = 48.0) {
  if (q <= 0.0) throw std::invalid_argument("double_sum_bound_check: q must be positive");
  const std::size_t n = cluster.count();
  if (alpha.size() != static_cast<Eigen::Index>(n))
    throw std::invalid_argument("double_sum_bound_check: alpha length mismatch");
  if ((alpha.array() < 0.0).any())
    throw std::invalid_argument("double_sum_bound_check: alpha must be nonnegative");
  const ClusterMetrics met = metrics(cluster);

  BoundCheck out;
  for (std::size_t m = 0; m < n; ++m) {
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != m)
        inner += alpha[static_cast<Eigen::Index>(j)] /
                 std::pow(met.distance_matrix(static_cast<Eigen::Index>(m),
                                              static_cast<Eigen::Index>(j)), q);
    out.lhs += inner * inner;
  }

  const long side = std::max<long>(1, std::llround(std::cbrt(static_cast<double>(n))));
  double lat = 0.0;
  for (long l = 1; l <= side; ++l) lat += std::pow(static_cast<double>(l), 2.0 - q);
  const double factor = (n >= 2) ? c0 / std::pow(met.d_min, q) * lat : 0.0;
  out.rhs = factor * factor * alpha.squaredNorm();
  out.holds = out.lhs <= out.rhs;
  return out;
}

}  // namespace foldylax
