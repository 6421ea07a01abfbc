#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldylax/types.hpp"

namespace foldylax {

/// Closed oriented triangle surface. Triangles are index triples into
/// `vertices`, counter-clockwise seen from outside.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  std::size_t face_count() const { return triangles.size(); }

  Vec3 face_centroid(std::size_t f) const {
    const auto& t = triangles[f];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
  }

  /// Area-weighted outward normal (cross product of edge vectors, halved).
  Vec3 face_area_normal(std::size_t f) const {
    const auto& t = triangles[f];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  }

  double area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < triangles.size(); ++f) a += face_area_normal(f).norm();
    return a;
  }

  /// Signed enclosed volume (positive for outward orientation).
  double signed_volume() const {
    double v = 0.0;
    for (const auto& t : triangles)
      v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]])) / 6.0;
    return v;
  }

  Vec3 centroid() const {
    // Volume centroid via the divergence theorem.
    Vec3 c = Vec3::Zero();
    double v = 0.0;
    for (const auto& t : triangles) {
      const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &d = vertices[t[2]];
      const double dv = a.dot(b.cross(d)) / 6.0;
      v += dv;
      c += dv * (a + b + d) / 4.0;
    }
    if (std::abs(v) < 1e-300) throw std::runtime_error("TriMesh: degenerate volume");
    return c / v;
  }
};

/// Checks closedness (every directed edge matched by its reverse exactly
/// once), consistent outward orientation (positive volume), and panel
/// non-degeneracy. Throws with a diagnostic on failure.
inline void validate_mesh(const TriMesh& mesh) {
  if (mesh.triangles.empty()) throw std::invalid_argument("mesh: no triangles");
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      if (a == b) throw std::invalid_argument("mesh: degenerate triangle (repeated vertex)");
      edge_count[{a, b}] += 1;
    }
  }
  for (const auto& [edge, n] : edge_count) {
    if (n != 1)
      throw std::invalid_argument("mesh: directed edge repeated; inconsistent orientation");
    auto rev = edge_count.find({edge.second, edge.first});
    if (rev == edge_count.end())
      throw std::invalid_argument("mesh: open surface (unmatched edge)");
  }
  if (mesh.signed_volume() <= 0.0)
    throw std::invalid_argument("mesh: inward orientation (negative volume)");
  double mean_area = mesh.area() / static_cast<double>(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (mesh.face_area_normal(f).norm() < 1e-10 * mean_area)
      throw std::invalid_argument("mesh: near-degenerate panel " + std::to_string(f));
  }
}

/// Icosphere: subdivided icosahedron projected to the sphere of given radius.
/// `subdivisions` = 0 gives 20 faces; each level quadruples the count.
inline TriMesh icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
  if (radius <= 0.0) throw std::invalid_argument("icosphere: radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      Vec3 m = (v[a] + v[b]).normalized();
      v.push_back(m);
      int idx = static_cast<int>(v.size()) - 1;
      midpoint[{key.first, key.second}] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
      nf.push_back({tri[0], a, c});
      nf.push_back({tri[1], b, a});
      nf.push_back({tri[2], c, b});
      nf.push_back({a, b, c});
    }
    f = std::move(nf);
  }

  TriMesh mesh;
  mesh.vertices.reserve(v.size());
  for (const auto& p : v) mesh.vertices.push_back(center + radius * p);
  mesh.triangles = std::move(f);
  return mesh;
}

/// Axis-aligned affine stretch of a mesh about a center point.
inline TriMesh scale_mesh(const TriMesh& mesh, const Vec3& factors, const Vec3& about) {
  TriMesh out = mesh;
  for (auto& p : out.vertices) p = about + (p - about).cwiseProduct(factors);
  return out;
}

/// ASCII triangle-list format:
///   line 1: <nv> <nt>
///   nv lines: x y z
///   nt lines: i j k   (0-based vertex indices)
inline void write_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mesh: cannot open " + path);
  out.precision(17);
  out << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
  for (const auto& p : mesh.vertices) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline TriMesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_mesh: cannot open " + path);
  std::size_t nv = 0, nt = 0;
  if (!(in >> nv >> nt)) throw std::runtime_error("read_mesh: bad header in " + path);
  TriMesh mesh;
  mesh.vertices.resize(nv);
  mesh.triangles.resize(nt);
  for (auto& p : mesh.vertices)
    if (!(in >> p.x() >> p.y() >> p.z())) throw std::runtime_error("read_mesh: bad vertex");
  for (auto& t : mesh.triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: bad triangle");
  return mesh;
}

}  // namespace foldylax
