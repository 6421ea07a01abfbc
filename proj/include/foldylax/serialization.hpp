#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "foldylax/farfield.hpp"
#include "foldylax/foldy.hpp"
#include "foldylax/geometry.hpp"
#include "foldylax/lippmann.hpp"
#include "foldylax/tensors.hpp"

namespace foldylax {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Json complex_pair(Complex c) { return Json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) return Complex(j[0].get<double>(), j[1].get<double>());
  throw std::invalid_argument("expected number or [re, im] pair");
}

/// 3x3 complex matrix as a 3x3 array of [re, im] pairs.
inline Json to_json(const CMat3& m) {
  Json rows = Json::array();
  for (int i = 0; i < 3; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 3; ++j) row.push_back(complex_pair(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline CMat3 cmat3_from_json(const Json& j) {
  CMat3 m;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = complex_from_json(j.at(i).at(c));
  return m;
}

inline Json to_json(const Mat3& m) {
  Json rows = Json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(Json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

inline Mat3 mat3_from_json(const Json& j) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

// ---------------------------------------------------------------------------
// Voxel masks: <stem>.json header + <stem>.bin payload.

inline void write_voxel_mask(const VoxelMask& m, const std::string& stem) {
  Json header;
  header["dims"] = Json::array({m.dims[0], m.dims[1], m.dims[2]});
  header["h"] = m.h;
  header["origin"] = to_json(m.origin);
  header["order"] = "x-fastest";
  header["data"] = stem.substr(stem.find_last_of('/') + 1) + ".bin";
  std::ofstream out(stem + ".json");
  if (!out) throw std::runtime_error("write_voxel_mask: cannot open " + stem + ".json");
  out << header.dump(2) << '\n';
  write_mask_bytes(m, stem + ".bin");
}

inline VoxelMask read_voxel_mask(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) throw std::runtime_error("read_voxel_mask: cannot open " + stem + ".json");
  Json header = Json::parse(in);
  VoxelMask m;
  m.dims = {header.at("dims").at(0).get<int>(), header.at("dims").at(1).get<int>(),
            header.at("dims").at(2).get<int>()};
  m.h = header.at("h").get<double>();
  m.origin = vec3_from_json(header.at("origin"));
  const std::size_t total =
      static_cast<std::size_t>(m.dims[0]) * m.dims[1] * m.dims[2];
  m.occupied = read_mask_bytes(stem + ".bin", total);
  return m;
}

// ---------------------------------------------------------------------------
// Clusters

inline Json to_json(const Shape& s, const std::string& asset_dir, const std::string& tag);

inline Json cluster_to_json(const Cluster& c, const std::string& asset_dir = "") {
  Json j;
  Json centers = Json::array();
  for (const auto& z : c.centers) centers.push_back(to_json(z));
  j["centers"] = centers;
  j["radius_a"] = c.radius_a;
  Json shapes = Json::array();
  for (std::size_t m = 0; m < c.shapes.size(); ++m)
    shapes.push_back(to_json(c.shapes[m], asset_dir, std::to_string(m)));
  j["shapes"] = shapes;
  return j;
}

inline Json to_json(const Shape& s, const std::string& asset_dir, const std::string& tag) {
  struct Visitor {
    const std::string& dir;
    const std::string& tag;
    Json operator()(const BallShape& b) const {
      return Json{{"type", "ball"}, {"radius", b.radius}};
    }
    Json operator()(const EllipsoidShape& e) const {
      return Json{{"type", "ellipsoid"}, {"semi_axes", to_json(e.semi_axes)}};
    }
    Json operator()(const VoxelShape& v) const {
      if (dir.empty())
        throw std::invalid_argument("cluster_to_json: voxel shape needs an asset directory");
      const std::string stem = dir + "/mask_" + tag;
      write_voxel_mask(*v.mask, stem);
      return Json{{"type", "voxels"}, {"path", stem}};
    }
    Json operator()(const MeshShape& m) const {
      if (dir.empty())
        throw std::invalid_argument("cluster_to_json: mesh shape needs an asset directory");
      const std::string path = dir + "/mesh_" + tag + ".txt";
      write_mesh(*m.mesh, path);
      return Json{{"type", "mesh"}, {"path", path}};
    }
  };
  return std::visit(Visitor{asset_dir, tag}, s);
}

inline Shape shape_from_json(const Json& j, const std::string& base_dir = "") {
  const std::string type = j.at("type").get<std::string>();
  auto resolve = [&](const std::string& p) {
    return (!base_dir.empty() && !p.empty() && p[0] != '/') ? base_dir + "/" + p : p;
  };
  if (type == "ball") return BallShape{j.at("radius").get<double>()};
  if (type == "ellipsoid") return EllipsoidShape{vec3_from_json(j.at("semi_axes"))};
  if (type == "voxels")
    return VoxelShape{std::make_shared<VoxelMask>(read_voxel_mask(resolve(j.at("path").get<std::string>())))};
  if (type == "mesh") {
    auto mesh = std::make_shared<TriMesh>(read_mesh(resolve(j.at("path").get<std::string>())));
    validate_mesh(*mesh);
    return MeshShape{mesh};
  }
  throw std::invalid_argument("shape_from_json: unknown type " + type);
}

inline Cluster cluster_from_json(const Json& j, const std::string& base_dir = "") {
  Cluster c;
  for (const auto& z : j.at("centers")) c.centers.push_back(vec3_from_json(z));
  c.radius_a = j.at("radius_a").get<double>();
  if (j.contains("shapes")) {
    for (const auto& s : j.at("shapes")) c.shapes.push_back(shape_from_json(s, base_dir));
  } else {
    for (std::size_t m = 0; m < c.centers.size(); ++m)
      c.shapes.push_back(BallShape{0.5 * c.radius_a});
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Materials

inline Json material_to_json(const Material& m) {
  if (m.kind == MaterialKind::pec) return Json{{"kind", "pec"}};
  Json j;
  j["kind"] = "penetrable";
  j["eps_r"] = to_json(m.eps_r);
  j["mu_r"] = to_json(m.mu_r);
  return j;
}

inline Material material_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pec") return Material::pec();
  if (kind != "penetrable") throw std::invalid_argument("material: unknown kind " + kind);
  Material m;
  if (j.contains("eps")) {
    m.eps_r = complex_from_json(j.at("eps")) * CMat3::Identity();
  } else {
    m.eps_r = cmat3_from_json(j.at("eps_r"));
  }
  if (j.contains("mu")) {
    m.mu_r = j.at("mu").get<double>() * Mat3::Identity();
  } else if (j.contains("mu_r")) {
    m.mu_r = mat3_from_json(j.at("mu_r"));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tensor sets and solutions

inline Json tensor_set_to_json(const TensorSet& ts) {
  Json arr = Json::array();
  for (const auto& t : ts) {
    Json j;
    j["kind"] = t.pec ? "pec" : "penetrable";
    j[t.pec ? "P" : "A_eps"] = to_json(t.electric);
    j[t.pec ? "T" : "A_mu"] = to_json(t.magnetic);
    j["provenance"] = t.provenance.analytic
                          ? Json("analytic")
                          : Json{{"numeric", {{"resolution", t.provenance.resolution}}}};
    arr.push_back(j);
  }
  return arr;
}

inline Json solution_to_json(const FoldySolution& sol) {
  Json j;
  j["variant"] = to_string(sol.variant);
  j["k"] = complex_pair(sol.k);
  auto vecs = [](const std::vector<CVec3>& v) {
    Json arr = Json::array();
    for (const auto& x : v)
      arr.push_back(Json::array({complex_pair(x[0]), complex_pair(x[1]), complex_pair(x[2])}));
    return arr;
  };
  j["R"] = vecs(sol.R);
  j["Q"] = vecs(sol.Q);
  j["residual"] = sol.residual;
  j["condition_estimate"] = sol.condition_estimate;
  j["invertibility"] = Json{{"c_r", sol.invertibility.c_r_infinite ? Json("infinite")
                                                                   : Json(sol.invertibility.c_r)},
                            {"threshold", sol.invertibility.threshold},
                            {"satisfied", sol.invertibility.satisfied}};
  return j;
}

/// Header for the oracle's raw field dump (payload via write_fields_bytes).
inline void write_fields_dump(const VolumeFields& f, const std::string& stem) {
  Json header;
  header["dims"] = Json::array({f.disc.mask.dims[0], f.disc.mask.dims[1], f.disc.mask.dims[2]});
  header["h"] = f.disc.h;
  header["origin"] = to_json(f.disc.mask.origin);
  header["ordering"] = "x-fastest";
  header["record"] = "Ex.re Ex.im Ey.re Ey.im Ez.re Ez.im Hx.re Hx.im Hy.re Hy.im Hz.re Hz.im";
  header["data"] = stem.substr(stem.find_last_of('/') + 1) + ".bin";
  std::ofstream out(stem + ".json");
  if (!out) throw std::runtime_error("write_fields_dump: cannot open " + stem + ".json");
  out << header.dump(2) << '\n';
  write_fields_bytes(f, stem + ".bin");
}

}  // namespace foldylax
