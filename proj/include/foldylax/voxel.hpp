#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldylax/types.hpp"

namespace foldylax {

/// Boolean occupancy mask on a regular grid. Voxel (i,j,l) is the cube of side
/// h with center origin + h * (i+1/2, j+1/2, l+1/2). Storage is x-fastest.
struct VoxelMask {
  std::array<int, 3> dims{0, 0, 0};
  double h = 0.0;
  Vec3 origin = Vec3::Zero();
  std::vector<std::uint8_t> occupied;  // dims[0]*dims[1]*dims[2], x-fastest

  std::size_t linear(int i, int j, int l) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) +
           static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(l));
  }
  bool at(int i, int j, int l) const { return occupied[linear(i, j, l)] != 0; }

  Vec3 center(int i, int j, int l) const {
    return origin + h * Vec3(i + 0.5, j + 0.5, l + 0.5);
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : occupied) n += (v != 0);
    return n;
  }

  /// Centers of all occupied voxels, x-fastest order.
  std::vector<Vec3> centers() const {
    std::vector<Vec3> out;
    out.reserve(count());
    for (int l = 0; l < dims[2]; ++l)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i)
          if (at(i, j, l)) out.push_back(center(i, j, l));
    return out;
  }

  /// Grid indices of occupied voxels, same order as centers().
  std::vector<std::array<int, 3>> indices() const {
    std::vector<std::array<int, 3>> out;
    out.reserve(count());
    for (int l = 0; l < dims[2]; ++l)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i)
          if (at(i, j, l)) out.push_back({i, j, l});
    return out;
  }

  /// Centers of voxels with at least one unoccupied 6-neighbour (or on the
  /// grid boundary); used for body-distance sampling.
  std::vector<Vec3> surface_centers() const {
    std::vector<Vec3> out;
    auto occ = [&](int i, int j, int l) {
      if (i < 0 || j < 0 || l < 0 || i >= dims[0] || j >= dims[1] || l >= dims[2]) return false;
      return at(i, j, l);
    };
    for (int l = 0; l < dims[2]; ++l)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          if (!at(i, j, l)) continue;
          if (!occ(i - 1, j, l) || !occ(i + 1, j, l) || !occ(i, j - 1, l) ||
              !occ(i, j + 1, l) || !occ(i, j, l - 1) || !occ(i, j, l + 1))
            out.push_back(center(i, j, l));
        }
    return out;
  }
};

/// Predicate voxelizer: marks voxels whose center satisfies `inside`.
template <class Inside>
VoxelMask voxelize(const Vec3& lo, const Vec3& hi, double h, Inside&& inside) {
  if (h <= 0.0) throw std::invalid_argument("voxelize: h must be positive");
  VoxelMask m;
  m.h = h;
  m.origin = lo;
  for (int d = 0; d < 3; ++d) {
    m.dims[d] = std::max(1, static_cast<int>(std::ceil((hi[d] - lo[d]) / h - 1e-12)));
  }
  m.occupied.assign(static_cast<std::size_t>(m.dims[0]) * m.dims[1] * m.dims[2], 0);
  for (int l = 0; l < m.dims[2]; ++l)
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i)
        if (inside(m.center(i, j, l))) m.occupied[m.linear(i, j, l)] = 1;
  return m;
}

inline VoxelMask voxelize_ball(const Vec3& center, double radius, double h) {
  const Vec3 r(radius, radius, radius);
  return voxelize(center - r, center + r, h, [&](const Vec3& p) {
    return (p - center).norm() <= radius;
  });
}

inline VoxelMask voxelize_ellipsoid(const Vec3& center, const Vec3& semi_axes, double h) {
  return voxelize(center - semi_axes, center + semi_axes, h, [&](const Vec3& p) {
    const Vec3 q = (p - center).cwiseQuotient(semi_axes);
    return q.squaredNorm() <= 1.0;
  });
}

/// L-shaped blob: unit box [0,1]^3 minus the quadrant x>1/2, y>1/2, scaled
/// by `scale` and centered so its bounding-box midpoint sits at `center`.
inline VoxelMask voxelize_lblob(const Vec3& center, double scale, double h) {
  const Vec3 half(0.5 * scale, 0.5 * scale, 0.5 * scale);
  return voxelize(center - half, center + half, h, [&](const Vec3& p) {
    const Vec3 q = (p - center) / scale + Vec3(0.5, 0.5, 0.5);
    if (q.minCoeff() < 0.0 || q.maxCoeff() > 1.0) return false;
    return !(q.x() > 0.5 && q.y() > 0.5);
  });
}

/// Raw mask I/O: <stem>.json header {dims, h, origin, order:"x-fastest"}
/// plus <stem>.bin with one byte (0/1) per voxel. Header writing lives in
/// serialization.hpp; the byte payload here.
inline void write_mask_bytes(const VoxelMask& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_mask_bytes: cannot open " + path);
  out.write(reinterpret_cast<const char*>(m.occupied.data()),
            static_cast<std::streamsize>(m.occupied.size()));
}

inline std::vector<std::uint8_t> read_mask_bytes(const std::string& path, std::size_t expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_mask_bytes: cannot open " + path);
  std::vector<std::uint8_t> bytes(expect);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expect));
  if (static_cast<std::size_t>(in.gcount()) != expect)
    throw std::runtime_error("read_mask_bytes: short read from " + path);
  return bytes;
}

}  // namespace foldylax
