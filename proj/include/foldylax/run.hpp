#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldylax/farfield.hpp"
#include "foldylax/foldy.hpp"
#include "foldylax/lippmann.hpp"
#include "foldylax/mie.hpp"
#include "foldylax/serialization.hpp"
#include "foldylax/tensors.hpp"

namespace foldylax {

struct TensorOptions {
  enum class Mode { analytic, numeric } mode = Mode::analytic;
  double divisor = 16.0;      // numeric voxel size h = radius_a / divisor
  int pec_subdivisions = 4;   // icosphere level when meshing ball PEC particles
};

namespace detail {

inline bool is_symmetric(const CMat3& m) {
  return (m - m.transpose()).norm() <= 1e-12 * std::max(1.0, m.norm());
}

inline CMat3 aniso_tensor_for_shape(const Shape& shape, const CMat3& contrast, double radius_a,
                                    const TensorOptions& opt, TensorProvenance& prov) {
  if (contrast.norm() == 0.0) return CMat3::Zero();
  const double h = radius_a / opt.divisor;
  struct Visitor {
    const CMat3& c;
    double h;
    TensorOptions::Mode mode;
    TensorProvenance& prov;
    CMat3 operator()(const BallShape& b) const {
      if (mode == TensorOptions::Mode::analytic) {
        prov = {true, 0.0};
        return aniso_tensor_ball(c, b.radius);
      }
      prov = {false, h};
      return aniso_tensor_numeric(voxelize_ball(Vec3::Zero(), b.radius, h), c);
    }
    CMat3 operator()(const EllipsoidShape& e) const {
      if (mode == TensorOptions::Mode::analytic) {
        prov = {true, 0.0};
        return aniso_tensor_spheroid(c, e.semi_axes);
      }
      prov = {false, h};
      return aniso_tensor_numeric(voxelize_ellipsoid(Vec3::Zero(), e.semi_axes, h), c);
    }
    CMat3 operator()(const VoxelShape& v) const {
      prov = {false, v.mask->h};
      return aniso_tensor_numeric(*v.mask, c);
    }
    CMat3 operator()(const MeshShape&) const {
      throw std::invalid_argument("tensor build: mesh shapes are PEC-only");
    }
  };
  return std::visit(Visitor{contrast, h, opt.mode, prov}, shape);
}

}  // namespace detail

/// Per-particle tensor set for the given variant. The non-symmetric variant
/// stores the conjugated tensors A~ built from the transposed contrasts.
inline TensorSet build_tensor_set(const Cluster& cluster, const std::vector<Material>& materials,
                                  FoldyVariant variant, const TensorOptions& opt = {}) {
  if (materials.size() != cluster.count())
    throw std::invalid_argument("build_tensor_set: material list size mismatch");
  const bool pec_variant = variant == FoldyVariant::pec ||
                           variant == FoldyVariant::pec_alt ||
                           variant == FoldyVariant::pec_maxwell;
  TensorSet ts(cluster.count());
  for (std::size_t m = 0; m < cluster.count(); ++m) {
    const Material& mat = materials[m];
    ParticleTensors& t = ts[m];
    if (pec_variant) {
      if (mat.kind != MaterialKind::pec)
        throw std::invalid_argument("build_tensor_set: PEC variant with penetrable material on particle " +
                                    std::to_string(m));
      t.pec = true;
      if (const auto* ball = std::get_if<BallShape>(&cluster.shapes[m])) {
        if (opt.mode == TensorOptions::Mode::analytic) {
          const auto [p, tt] = pec_tensors_ball(ball->radius);
          t.electric = p.cast<Complex>();
          t.magnetic = tt.cast<Complex>();
          t.provenance = {true, 0.0};
        } else {
          const TriMesh mesh = icosphere(ball->radius, opt.pec_subdivisions);
          const PecTensors pt = pec_tensors_numeric(mesh);
          t.electric = pt.P.cast<Complex>();
          t.magnetic = pt.T.cast<Complex>();
          t.provenance = {false, ball->radius / (1 << opt.pec_subdivisions)};
        }
      } else if (const auto* ms = std::get_if<MeshShape>(&cluster.shapes[m])) {
        const PecTensors pt = pec_tensors_numeric(*ms->mesh);
        t.electric = pt.P.cast<Complex>();
        t.magnetic = pt.T.cast<Complex>();
        t.provenance = {false, std::sqrt(ms->mesh->area() / static_cast<double>(ms->mesh->face_count()))};
      } else {
        throw std::invalid_argument("build_tensor_set: PEC particles need ball or mesh shapes");
      }
      continue;
    }

    if (mat.kind != MaterialKind::penetrable)
      throw std::invalid_argument("build_tensor_set: anisotropic variant with PEC material on particle " +
                                  std::to_string(m));
    mat.validate();
    const CMat3 qe = mat.eps_contrast();
    const CMat3 qm = mat.mu_contrast().cast<Complex>();
    if (variant == FoldyVariant::aniso_symmetric) {
      if (!detail::is_symmetric(qe) || !detail::is_symmetric(qm))
        throw std::invalid_argument(
            "build_tensor_set: aniso_symmetric needs symmetric contrasts (particle " +
            std::to_string(m) + "); use aniso_nonsymmetric");
      t.electric = detail::aniso_tensor_for_shape(cluster.shapes[m], qe, cluster.radius_a, opt,
                                                  t.provenance);
      t.magnetic = detail::aniso_tensor_for_shape(cluster.shapes[m], qm, cluster.radius_a, opt,
                                                  t.provenance);
    } else {
      // A~ = <Qc> A^{<Qc^T>} <Qc^T>^{-1}; constant materials make <Qc> = Qc.
      auto modified = [&](const CMat3& qc) -> CMat3 {
        if (qc.norm() == 0.0) return CMat3::Zero();
        const CMat3 raw = detail::aniso_tensor_for_shape(cluster.shapes[m], qc.transpose().eval(),
                                                         cluster.radius_a, opt, t.provenance);
        return nonsym_modified_tensor(raw, qc);
      };
      t.electric = modified(qe);
      t.magnetic = modified(qm);
    }
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Run configuration

struct StudySweep {
  std::string parameter;  // "a" | "c_r" | "h"
  std::vector<double> values;
};

struct RunConfig {
  Cluster cluster;
  std::vector<Material> materials;
  PlaneWave wave;
  FoldyVariant variant = FoldyVariant::aniso_symmetric;
  int n_theta = 16;
  int n_phi = 32;
  TensorOptions tensors;
  double oracle_divisor = 12.0;  // oracle h = radius_a / oracle_divisor
  double oracle_tolerance = 1e-7;
  RadiationConvention convention = RadiationConvention::magnetic_ik;
  std::optional<StudySweep> study;
  std::uint64_t seed = 0;
  Json echo;
};

inline FoldyVariant variant_from_string(const std::string& s) {
  if (s == "aniso_symmetric") return FoldyVariant::aniso_symmetric;
  if (s == "aniso_nonsymmetric") return FoldyVariant::aniso_nonsymmetric;
  if (s == "pec") return FoldyVariant::pec;
  if (s == "pec_alt") return FoldyVariant::pec_alt;
  if (s == "pec_maxwell") return FoldyVariant::pec_maxwell;
  throw std::invalid_argument("unknown variant: " + s);
}

inline RunConfig parse_config(const Json& j, const std::string& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
  RunConfig cfg;
  cfg.echo = j;
  cfg.seed = seed_override.value_or(j.value("seed", 0ull));

  const Json& cj = j.at("cluster");
  if (cj.contains("file")) {
    const std::string path = cj.at("file").get<std::string>();
    const std::string full = (!path.empty() && path[0] != '/') ? base_dir + "/" + path : path;
    std::ifstream in(full);
    if (!in) throw std::invalid_argument("config: cluster file not found: " + full);
    cfg.cluster = cluster_from_json(Json::parse(in),
                                    std::filesystem::path(full).parent_path().string());
  } else if (cj.contains("grid")) {
    const Json& g = cj.at("grid");
    cfg.cluster = build_grid_cluster(
        g.at("spacing").get<double>(),
        {g.at("counts").at(0).get<int>(), g.at("counts").at(1).get<int>(),
         g.at("counts").at(2).get<int>()},
        g.at("radius_a").get<double>(),
        g.contains("origin") ? vec3_from_json(g.at("origin")) : Vec3::Zero());
  } else if (cj.contains("random")) {
    const Json& r = cj.at("random");
    Rng rng(cfg.seed);
    cfg.cluster = build_random_cluster(
        r.at("count").get<std::size_t>(), r.at("radius_a").get<double>(),
        r.at("min_center_gap").get<double>(), vec3_from_json(r.at("box_lo")),
        vec3_from_json(r.at("box_hi")), rng);
  } else {
    cfg.cluster = cluster_from_json(cj, base_dir);
  }

  const Json& mj = j.at("material");
  if (mj.is_array()) {
    for (const auto& one : mj) cfg.materials.push_back(material_from_json(one));
    if (cfg.materials.size() != cfg.cluster.count())
      throw std::invalid_argument("config: per-particle material list size mismatch");
  } else {
    cfg.materials.assign(cfg.cluster.count(), material_from_json(mj));
  }

  const Json& wj = j.at("wave");
  const Complex k = complex_from_json(wj.at("k"));
  Vec3 theta = vec3_from_json(wj.at("theta"));
  theta.normalize();
  CVec3 pol;
  const Json& pj = wj.at("polarization");
  for (int c = 0; c < 3; ++c) pol[c] = complex_from_json(pj.at(c));
  cfg.wave = PlaneWave(theta, pol, WaveNumber(k));

  cfg.variant = variant_from_string(j.value("variant", std::string("aniso_symmetric")));
  if (j.contains("grid")) {
    cfg.n_theta = j.at("grid").value("n_theta", 16);
    cfg.n_phi = j.at("grid").value("n_phi", 32);
  }
  if (j.contains("tensors")) {
    const Json& t = j.at("tensors");
    const std::string mode = t.value("mode", std::string("analytic"));
    if (mode == "numeric") cfg.tensors.mode = TensorOptions::Mode::numeric;
    else if (mode != "analytic") throw std::invalid_argument("config: tensors.mode must be analytic|numeric");
    cfg.tensors.divisor = t.value("divisor", 16.0);
    cfg.tensors.pec_subdivisions = t.value("pec_subdivisions", 4);
  }
  if (j.contains("oracle")) {
    cfg.oracle_divisor = j.at("oracle").value("divisor", 12.0);
    cfg.oracle_tolerance = j.at("oracle").value("tolerance", 1e-7);
  }
  if (j.contains("radiation_convention")) {
    const std::string c = j.at("radiation_convention").get<std::string>();
    if (c == "magnetic_ik") cfg.convention = RadiationConvention::magnetic_ik;
    else if (c == "magnetic_k2") cfg.convention = RadiationConvention::magnetic_k2;
    else throw std::invalid_argument("config: unknown radiation_convention " + c);
  }
  if (j.contains("study")) {
    StudySweep s;
    s.parameter = j.at("study").at("parameter").get<std::string>();
    for (const auto& v : j.at("study").at("values")) s.values.push_back(v.get<double>());
    if (s.parameter != "a" && s.parameter != "c_r" && s.parameter != "h")
      throw std::invalid_argument("config: study.parameter must be a|c_r|h");
    for (const double v : s.values)
      if (v <= 0.0) throw std::invalid_argument("config: sweep values must be positive");
    if (s.values.size() >= 2) {
      const bool increasing = s.values[1] > s.values[0];
      for (std::size_t i = 1; i < s.values.size(); ++i)
        if (increasing ? s.values[i] <= s.values[i - 1] : s.values[i] >= s.values[i - 1])
          throw std::invalid_argument("config: sweep values must be strictly monotone");
    }
    cfg.study = s;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Scatter runs

namespace detail {

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }
 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline Json invertibility_json(const InvertibilityCheck& c) {
  return Json{{"c_r", c.c_r_infinite ? Json("infinite") : Json(c.c_r)},
              {"threshold_3k_mu_plus", c.threshold},
              {"satisfied", c.satisfied}};
}

}  // namespace detail

/// Single scatter run: solve the Foldy system, write solution.json,
/// pattern.csv, report.json into out_dir. Returns the report.
inline Json run_scatter(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  detail::Stopwatch total;
  Json report;
  report["config"] = cfg.echo;
  report["seed"] = cfg.seed;

  detail::Stopwatch t_tensors;
  const TensorSet ts = build_tensor_set(cfg.cluster, cfg.materials, cfg.variant, cfg.tensors);
  const double ms_tensors = t_tensors.ms();

  FoldyProblem prob{cfg.cluster, ts, cfg.wave, cfg.variant};
  const ClusterMetrics met = metrics(cfg.cluster);
  const SpectralBounds bounds = tensor_spectral_bounds(ts, cfg.cluster.radius_a);

  detail::Stopwatch t_solve;
  const FoldySolution sol = solve(prob);
  const double ms_solve = t_solve.ms();

  detail::Stopwatch t_pattern;
  const SphereGrid grid = sphere_grid(cfg.n_theta, cfg.n_phi);
  const FarFieldPattern pattern =
      foldy_far_field(sol, cfg.cluster, cfg.wave.wavenumber.k, grid, cfg.convention);
  const double ms_pattern = t_pattern.ms();

  const std::string sol_path = out_dir + "/solution.json";
  const std::string csv_path = out_dir + "/pattern.csv";
  {
    std::ofstream out(sol_path);
    out << solution_to_json(sol).dump(2) << '\n';
  }
  write_pattern_csv(pattern, csv_path);

  report["cluster"] = Json{{"count", cfg.cluster.count()},
                           {"radius_a", cfg.cluster.radius_a},
                           {"d_min", met.c_r_infinite ? Json("infinite") : Json(met.d_min)},
                           {"c_r", met.c_r_infinite ? Json("infinite") : Json(met.c_r)}};
  report["tensors"] = Json{{"mu_plus", bounds.mu_plus}, {"mu_minus", bounds.mu_minus}};
  report["invertibility"] = detail::invertibility_json(sol.invertibility);
  report["solve"] = Json{{"residual", sol.residual},
                         {"condition_estimate", sol.condition_estimate},
                         {"variant", to_string(sol.variant)}};
  report["outputs"] = Json{{"solution", "solution.json"}, {"pattern", "pattern.csv"}};
  report["timings"] = Json{{"tensors_ms", ms_tensors},
                           {"solve_ms", ms_solve},
                           {"pattern_ms", ms_pattern},
                           {"total_ms", total.ms()}};

  std::ofstream out(out_dir + "/report.json");
  out << report.dump(2) << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// Convergence studies

namespace detail {

inline Cluster scale_cluster_to_a(const Cluster& base, double new_a) {
  const double s = new_a / base.radius_a;
  Vec3 centroid = Vec3::Zero();
  for (const auto& z : base.centers) centroid += z;
  centroid /= static_cast<double>(base.count());
  Cluster out = base;
  out.radius_a = new_a;
  for (auto& z : out.centers) z = centroid + s * (z - centroid);
  for (auto& shape : out.shapes) {
    if (auto* b = std::get_if<BallShape>(&shape)) b->radius *= s;
    else if (auto* e = std::get_if<EllipsoidShape>(&shape)) e->semi_axes *= s;
    else throw std::invalid_argument("study: a-sweep supports ball/ellipsoid shapes only");
  }
  out.validate();
  return out;
}

/// Dilates the particle centers about the centroid until d_min = target_cr * a.
/// Body shapes are untouched; the dilation factor is found by bisection on the
/// (monotone) minimum body distance.
inline Cluster scale_cluster_to_cr(const Cluster& base, double target_cr) {
  if (base.count() < 2)
    throw std::invalid_argument("study: c_r-sweep needs at least two particles");
  Vec3 centroid = Vec3::Zero();
  for (const auto& z : base.centers) centroid += z;
  centroid /= static_cast<double>(base.count());
  const double target_d = target_cr * base.radius_a;

  auto with_factor = [&](double f) {
    Cluster out = base;
    for (auto& z : out.centers) z = centroid + f * (z - centroid);
    return out;
  };
  auto dmin_at = [&](double f) { return metrics(with_factor(f)).d_min; };

  double lo = 1e-3, hi = 1.0;
  while (dmin_at(hi) < target_d) {
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("study: c_r rescale failed to bracket");
  }
  for (int it = 0; it < 80 && (hi - lo) > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dmin_at(mid) < target_d ? lo : hi) = mid;
  }
  Cluster out = with_factor(hi);
  out.validate();
  return out;
}

}  // namespace detail

struct StudyPoint {
  double value = 0.0;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
  double oracle_h = 0.0;
  std::size_t oracle_voxels = 0;
};

struct StudyResult {
  std::string parameter;
  std::vector<StudyPoint> points;
  double slope = 0.0;  // d log(err) / d log(value)
  bool strictly_decreasing = false;
};

/// Sweep a | c_r | h: for each value solve the Foldy system and the volume
/// oracle on the same configuration and record the pattern distance. With
/// tensors.mode == numeric, the Foldy tensors are computed on the oracle's
/// own per-particle voxelization, which removes the shared discretization
/// bias from the comparison.
inline StudyResult run_study_points(const RunConfig& cfg) {
  if (!cfg.study) throw std::invalid_argument("run_study_points: no study spec");
  const StudySweep& spec = *cfg.study;
  if (spec.values.size() < 3)
    throw std::invalid_argument("study: need at least 3 sweep values for a slope");
  if (cfg.variant != FoldyVariant::aniso_symmetric && cfg.variant != FoldyVariant::aniso_nonsymmetric)
    throw std::invalid_argument("study: the volume oracle covers penetrable variants only");

  const SphereGrid grid = sphere_grid(cfg.n_theta, cfg.n_phi);
  StudyResult out;
  out.parameter = spec.parameter;

  for (const double value : spec.values) {
    Cluster cluster = cfg.cluster;
    double oracle_h = cfg.cluster.radius_a / cfg.oracle_divisor;
    if (spec.parameter == "a") {
      cluster = detail::scale_cluster_to_a(cfg.cluster, value);
      oracle_h = value / cfg.oracle_divisor;
    } else if (spec.parameter == "c_r") {
      cluster = detail::scale_cluster_to_cr(cfg.cluster, value);
    } else {
      oracle_h = value;
    }

    LsSolveOptions lopt;
    lopt.tolerance = cfg.oracle_tolerance;
    const VolumeFields fields = ls_solve(cluster, cfg.materials, cfg.wave, oracle_h, lopt);

    TensorSet ts;
    if (cfg.tensors.mode == TensorOptions::Mode::numeric) {
      ts.resize(cluster.count());
      for (std::size_t m = 0; m < cluster.count(); ++m) {
        const VoxelMask pm = particle_mask(fields.disc, static_cast<int>(m),
                                                   cluster.centers[m]);
        ts[m].pec = false;
        ts[m].provenance = {false, oracle_h};
        const CMat3 qe = cfg.materials[m].eps_contrast();
        const CMat3 qm = cfg.materials[m].mu_contrast().cast<Complex>();
        if (cfg.variant == FoldyVariant::aniso_symmetric) {
          ts[m].electric = qe.norm() > 0.0 ? aniso_tensor_numeric(pm, qe) : CMat3::Zero();
          ts[m].magnetic = qm.norm() > 0.0 ? aniso_tensor_numeric(pm, qm) : CMat3::Zero();
        } else {
          ts[m].electric = qe.norm() > 0.0
              ? nonsym_modified_tensor(aniso_tensor_numeric(pm, qe.transpose().eval()), qe)
              : CMat3::Zero();
          ts[m].magnetic = qm.norm() > 0.0
              ? nonsym_modified_tensor(aniso_tensor_numeric(pm, qm.transpose().eval()), qm)
              : CMat3::Zero();
        }
      }
    } else {
      ts = build_tensor_set(cluster, cfg.materials, cfg.variant, cfg.tensors);
    }

    const FoldySolution sol = solve(FoldyProblem{cluster, ts, cfg.wave, cfg.variant});
    const FarFieldPattern foldy_p =
        foldy_far_field(sol, cluster, cfg.wave.wavenumber.k, grid, cfg.convention);
    const FarFieldPattern oracle_p =
        oracle_far_field(fields, cluster, cfg.wave.wavenumber.k, grid, cfg.convention);
    const PatternDistance dist = pattern_distance(foldy_p, oracle_p);

    StudyPoint pt;
    pt.value = value;
    pt.rel_l2 = dist.rel_l2;
    pt.max_abs = dist.max_abs;
    pt.oracle_h = oracle_h;
    pt.oracle_voxels = fields.disc.centers.size();
    out.points.push_back(pt);
  }

  // Least-squares slope of log(err) against log(value).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.points.size());
  for (const auto& pt : out.points) {
    const double x = std::log(pt.value), y = std::log(pt.rel_l2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  // "decreasing" means: the error shrinks as the parameter moves toward the
  // asymptotic regime (smaller a or h, larger c_r).
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const bool toward = (out.parameter == "c_r")
                            ? out.points[i].value > out.points[i - 1].value
                            : out.points[i].value < out.points[i - 1].value;
    const bool err_shrank = out.points[i].rel_l2 < out.points[i - 1].rel_l2;
    if (toward != err_shrank) out.strictly_decreasing = false;
  }
  return out;
}

inline Json run_convergence_study(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  detail::Stopwatch total;
  const StudyResult res = run_study_points(cfg);

  Json report;
  report["config"] = cfg.echo;
  report["parameter"] = res.parameter;
  Json pts = Json::array();
  for (const auto& p : res.points)
    pts.push_back(Json{{"value", p.value},
                       {"rel_l2", p.rel_l2},
                       {"max_abs", p.max_abs},
                       {"oracle_h", p.oracle_h},
                       {"oracle_voxels", p.oracle_voxels}});
  report["points"] = pts;
  report["slope_loglog"] = res.slope;
  report["strictly_decreasing"] = res.strictly_decreasing;
  {
    const ClusterMetrics met = metrics(cfg.cluster);
    const TensorSet ts = build_tensor_set(cfg.cluster, cfg.materials, cfg.variant, cfg.tensors);
    const SpectralBounds bounds = tensor_spectral_bounds(ts, cfg.cluster.radius_a);
    InvertibilityCheck inv;
    inv.c_r = met.c_r;
    inv.c_r_infinite = met.c_r_infinite;
    inv.threshold = 3.0 * std::abs(cfg.wave.wavenumber.k) * bounds.mu_plus;
    inv.satisfied = inv.c_r_infinite || inv.c_r >= inv.threshold;
    report["invertibility"] = detail::invertibility_json(inv);
  }
  report["timings"] = Json{{"total_ms", total.ms()}};

  std::ofstream out(out_dir + "/study.json");
  out << report.dump(2) << '\n';
  std::ofstream txt(out_dir + "/summary.txt");
  txt << "convergence study in " << res.parameter << "\n";
  for (const auto& p : res.points)
    txt << "  " << res.parameter << " = " << p.value << "  rel_l2 = " << p.rel_l2
        << "  (oracle voxels " << p.oracle_voxels << ")\n";
  txt << "log-log slope: " << res.slope << "\n";
  txt << "strictly decreasing toward the asymptotic regime: "
      << (res.strictly_decreasing ? "yes" : "no") << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Tensor export and invariant checks

inline Json run_tensors(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const TensorSet ts = build_tensor_set(cfg.cluster, cfg.materials, cfg.variant, cfg.tensors);
  Json j;
  j["config"] = cfg.echo;
  j["tensors"] = tensor_set_to_json(ts);
  const SpectralBounds bounds = tensor_spectral_bounds(ts, cfg.cluster.radius_a);
  j["mu_plus"] = bounds.mu_plus;
  j["mu_minus"] = bounds.mu_minus;
  std::ofstream out(out_dir + "/tensors.json");
  out << j.dump(2) << '\n';
  return j;
}

inline Json run_check(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  Json j;
  j["config"] = cfg.echo;
  bool all_ok = true;
  auto record = [&](const std::string& name, bool ok, Json detail = Json()) {
    Json entry;
    entry["pass"] = ok;
    if (!detail.is_null()) entry["detail"] = detail;
    j["checks"][name] = entry;
    all_ok = all_ok && ok;
  };

  try {
    cfg.cluster.validate();
    record("cluster_valid", true);
  } catch (const std::exception& e) {
    record("cluster_valid", false, e.what());
  }

  const ClusterMetrics met = metrics(cfg.cluster);
  j["metrics"] = Json{{"d_min", met.c_r_infinite ? Json("infinite") : Json(met.d_min)},
                      {"c_r", met.c_r_infinite ? Json("infinite") : Json(met.c_r)}};

  if (cfg.cluster.count() >= 2) {
    const BoundCheck cb = counting_bound_check(cfg.cluster, [](double d) { return 1.0 / (d * d); });
    record("counting_bound_1_over_d2", cb.holds, Json{{"lhs", cb.lhs}, {"rhs", cb.rhs}});
    const BoundCheck db = double_sum_bound_check(
        cfg.cluster, VecX::Ones(static_cast<Eigen::Index>(cfg.cluster.count())), 2.0);
    record("double_sum_bound_q2", db.holds, Json{{"lhs", db.lhs}, {"rhs", db.rhs}});
  }

  try {
    for (const auto& m : cfg.materials) m.validate();
    record("materials_coercive", true);
  } catch (const std::exception& e) {
    record("materials_coercive", false, e.what());
  }

  try {
    const TensorSet ts = build_tensor_set(cfg.cluster, cfg.materials, cfg.variant, cfg.tensors);
    const SpectralBounds bounds = tensor_spectral_bounds(ts, cfg.cluster.radius_a);
    record("tensor_bounds", true, Json{{"mu_plus", bounds.mu_plus}, {"mu_minus", bounds.mu_minus}});

    FoldyProblem prob{cfg.cluster, ts, cfg.wave, cfg.variant};
    const FoldySolution sol = solve(prob);
    record("solve_residual", sol.residual <= 1e-10, Json{{"residual", sol.residual}});
    j["invertibility"] = detail::invertibility_json(sol.invertibility);

    const NormCheck nc = solution_norm_check(prob, sol);
    if (nc.applicable)
      record("solution_norm_bound", nc.holds_q && nc.holds_r,
             Json{{"lhs_q", nc.lhs_q}, {"rhs_q", nc.rhs_q}, {"lhs_r", nc.lhs_r}, {"rhs_r", nc.rhs_r}});
    else
      j["checks"]["solution_norm_bound"] = Json{{"skipped", nc.reason}};

    const SphereGrid grid = sphere_grid(cfg.n_theta, cfg.n_phi);
    const FarFieldPattern p = foldy_far_field(sol, cfg.cluster, cfg.wave.wavenumber.k, grid, cfg.convention);
    double max_radial = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i)
      max_radial = std::max(max_radial,
                            std::abs(grid.directions[i].cast<Complex>().dot(p.values[i])));
    record("pattern_transversality", max_radial <= 1e-10, Json{{"max_radial", max_radial}});
  } catch (const std::exception& e) {
    record("pipeline", false, e.what());
  }

  j["pass"] = all_ok;
  std::ofstream out(out_dir + "/check.json");
  out << j.dump(2) << '\n';
  return j;
}

}  // namespace foldylax
