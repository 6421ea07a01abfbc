#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "foldylax/run.hpp"

using namespace foldylax;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
  const std::string d = "/tmp/foldylax_test_" + tag;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return Json::parse(in);
}

Json base_config() {
  Json j;
  j["cluster"] = Json{{"centers", Json::array({Json::array({0.0, 0.0, 0.0})})},
                      {"radius_a", 0.1},
                      {"shapes", Json::array({Json{{"type", "ball"}, {"radius", 0.05}}})}};
  j["material"] = Json{{"kind", "pec"}};
  j["wave"] = Json{{"k", 1.0},
                   {"theta", Json::array({0.0, 0.0, 1.0})},
                   {"polarization", Json::array({1.0, 0.0, 0.0})}};
  j["variant"] = "pec";
  return j;
}

}  // namespace

TEST_CASE("cluster JSON round trip, all shape kinds") {
  const std::string dir = fresh_dir("cluster_rt");
  Cluster c;
  c.radius_a = 0.4;
  c.centers = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1.5, 0), Vec3(0, 0, 2)};
  c.shapes = {BallShape{0.2}, EllipsoidShape{Vec3(0.2, 0.1, 0.15)},
              VoxelShape{std::make_shared<VoxelMask>(voxelize_ball(Vec3::Zero(), 0.18, 0.02))},
              MeshShape{std::make_shared<TriMesh>(icosphere(0.2, 2))}};
  c.validate();

  const Json j = cluster_to_json(c, dir);
  {
    std::ofstream out(dir + "/cluster.json");
    out << j.dump(2);
  }
  const Cluster back = cluster_from_json(read_json(dir + "/cluster.json"));
  REQUIRE(back.count() == c.count());
  CHECK(back.radius_a == c.radius_a);
  for (std::size_t m = 0; m < c.count(); ++m)
    CHECK((back.centers[m] - c.centers[m]).norm() == 0.0);
  CHECK(std::get<BallShape>(back.shapes[0]).radius == 0.2);
  CHECK((std::get<EllipsoidShape>(back.shapes[1]).semi_axes - Vec3(0.2, 0.1, 0.15)).norm() == 0.0);
  CHECK(std::get<VoxelShape>(back.shapes[2]).mask->count() ==
        std::get<VoxelShape>(c.shapes[2]).mask->count());
  CHECK(std::get<MeshShape>(back.shapes[3]).mesh->face_count() == 320);
  // identical metrics after the round trip
  CHECK(metrics(back).d_min == Catch::Approx(metrics(c).d_min).epsilon(1e-14));
}

TEST_CASE("material and tensor JSON forms") {
  Material m;
  m.eps_r = CMat3::Identity() * Complex(3.0, 0.5);
  m.eps_r(0, 1) = Complex(0.2, -0.1);
  m.eps_r(1, 0) = Complex(0.2, -0.1);
  m.mu_r = 2.0 * Mat3::Identity();
  const Material back = material_from_json(material_to_json(m));
  CHECK((back.eps_r - m.eps_r).norm() == 0.0);
  CHECK((back.mu_r - m.mu_r).norm() == 0.0);

  const Material pec = material_from_json(Json{{"kind", "pec"}});
  CHECK(pec.kind == MaterialKind::pec);
  const Material scalar = material_from_json(
      Json{{"kind", "penetrable"}, {"eps", Json::array({3.0, 0.1})}, {"mu", 1.5}});
  CHECK(scalar.eps_r(1, 1) == Complex(3.0, 0.1));
  CHECK(scalar.mu_r(2, 2) == 1.5);

  Cluster c;
  c.radius_a = 0.1;
  c.centers = {Vec3::Zero()};
  c.shapes = {BallShape{0.05}};
  const TensorSet ts = build_tensor_set(c, {Material::isotropic(3.0, 2.0)},
                                        FoldyVariant::aniso_symmetric);
  const Json tj = tensor_set_to_json(ts);
  CHECK(tj.at(0).at("kind") == "penetrable");
  CHECK(cmat3_from_json(tj.at(0).at("A_eps")).isApprox(ts[0].electric));
}

TEST_CASE("voxel mask and mesh file round trips") {
  const std::string dir = fresh_dir("mask_rt");
  const VoxelMask m = voxelize_lblob(Vec3(0.1, -0.2, 0.3), 0.8, 0.05);
  write_voxel_mask(m, dir + "/blob");
  const VoxelMask back = read_voxel_mask(dir + "/blob");
  CHECK(back.dims == m.dims);
  CHECK(back.h == m.h);
  CHECK((back.origin - m.origin).norm() == 0.0);
  CHECK(back.occupied == m.occupied);

  const TriMesh mesh = icosphere(1.0, 2);
  write_mesh(mesh, dir + "/sphere.txt");
  const TriMesh mback = read_mesh(dir + "/sphere.txt");
  REQUIRE(mback.vertices.size() == mesh.vertices.size());
  CHECK(mback.triangles == mesh.triangles);
  CHECK(std::abs(mback.area() - mesh.area()) < 1e-12);
}

TEST_CASE("run_scatter emits the documented artifacts") {
  const std::string dir = fresh_dir("scatter");
  const RunConfig cfg = parse_config(base_config(), dir);
  const Json report = run_scatter(cfg, dir);

  // 16 x 32 grid -> 512 data rows in the CSV
  std::ifstream csv(dir + "/pattern.csv");
  REQUIRE(csv.good());
  std::string line;
  int rows = -1;  // discount the header
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 512);

  CHECK(report.contains("invertibility"));
  CHECK(report.at("invertibility").contains("satisfied"));
  CHECK(report.at("tensors").contains("mu_plus"));
  CHECK(report.at("solve").at("residual").get<double>() < 1e-10);
  CHECK(report.contains("timings"));

  const Json sol = read_json(dir + "/solution.json");
  CHECK(sol.at("R").size() == 1);
  CHECK(sol.at("Q").size() == 1);

  // emitted solution parses back through the schema (round-trip property)
  CHECK(complex_from_json(sol.at("R").at(0).at(0)) != Complex(0.0));
}

TEST_CASE("zero polarization produces an all-zero pattern file") {
  const std::string dir = fresh_dir("zero_pol");
  Json j = base_config();
  j["wave"]["polarization"] = Json::array({0.0, 0.0, 0.0});
  const RunConfig cfg = parse_config(j, dir);
  run_scatter(cfg, dir);
  std::ifstream csv(dir + "/pattern.csv");
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // theta
    std::getline(ss, cell, ',');  // phi
    while (std::getline(ss, cell, ',')) CHECK(std::stod(cell) == 0.0);
  }
}

TEST_CASE("repeated runs with the same seed are byte-identical up to timings") {
  Json j = base_config();
  j["cluster"] = Json{{"random", Json{{"count", 3},
                                      {"radius_a", 0.05},
                                      {"min_center_gap", 0.4},
                                      {"box_lo", Json::array({0.0, 0.0, 0.0})},
                                      {"box_hi", Json::array({1.0, 1.0, 1.0})}}}};
  j["material"] = Json{{"kind", "penetrable"}, {"eps", 3.0}, {"mu", 1.0}};
  j["variant"] = "aniso_symmetric";
  j["seed"] = 1234;

  const std::string d1 = fresh_dir("det1");
  const std::string d2 = fresh_dir("det2");
  Json r1 = run_scatter(parse_config(j, d1), d1);
  Json r2 = run_scatter(parse_config(j, d2), d2);
  r1.erase("timings");
  r2.erase("timings");
  CHECK(r1.dump() == r2.dump());

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(d1 + "/solution.json") == slurp(d2 + "/solution.json"));
  CHECK(slurp(d1 + "/pattern.csv") == slurp(d2 + "/pattern.csv"));

  // a different seed moves the particles
  Json r3 = run_scatter(parse_config(j, d2, 999), d2);
  r3.erase("timings");
  CHECK(r1.dump() != r3.dump());
}

TEST_CASE("config validation") {
  Json j = base_config();
  j["study"] = Json{{"parameter", "a"}, {"values", Json::array({0.05})}};
  const std::string dir = fresh_dir("cfg");
  const RunConfig cfg = parse_config(j, dir);
  CHECK_THROWS_AS(run_study_points(cfg), std::invalid_argument);  // < 3 sweep values

  Json bad = base_config();
  bad["study"] = Json{{"parameter", "a"}, {"values", Json::array({0.05, 0.08, 0.06})}};
  CHECK_THROWS_AS(parse_config(bad, dir), std::invalid_argument);  // not monotone

  Json badv = base_config();
  badv["variant"] = "nonsense";
  CHECK_THROWS_AS(parse_config(badv, dir), std::invalid_argument);

  Json missing = base_config();
  missing["cluster"] = Json{{"file", "does_not_exist.json"}};
  CHECK_THROWS_AS(parse_config(missing, dir), std::invalid_argument);
}

TEST_CASE("micro convergence study exercises the pipeline") {
  Json j;
  j["cluster"] = Json{{"centers", Json::array({Json::array({0.0, 0.0, 0.0}),
                                               Json::array({0.44, 0.0, 0.0})})},
                      {"radius_a", 0.08},
                      {"shapes", Json::array({Json{{"type", "ball"}, {"radius", 0.04}},
                                              Json{{"type", "ball"}, {"radius", 0.04}}})}};
  j["material"] = Json{{"kind", "penetrable"}, {"eps", 3.0}, {"mu", 1.0}};
  j["variant"] = "aniso_symmetric";
  j["wave"] = Json{{"k", 1.0},
                   {"theta", Json::array({0.0, 0.0, 1.0})},
                   {"polarization", Json::array({1.0, 0.0, 0.0})}};
  j["grid"] = Json{{"n_theta", 6}, {"n_phi", 12}};
  j["oracle"] = Json{{"divisor", 8.0}};
  j["tensors"] = Json{{"mode", "numeric"}};
  j["study"] = Json{{"parameter", "a"}, {"values", Json::array({0.08, 0.056, 0.04})}};

  const std::string dir = fresh_dir("study");
  const Json report = run_convergence_study(parse_config(j, dir), dir);
  REQUIRE(report.at("points").size() == 3);
  for (const auto& p : report.at("points")) CHECK(p.at("rel_l2").get<double>() > 0.0);
  CHECK(fs::exists(dir + "/study.json"));
  CHECK(fs::exists(dir + "/summary.txt"));
}

TEST_CASE("check verb reports invariant verdicts") {
  const std::string dir = fresh_dir("check");
  Json j = base_config();
  j["cluster"] = Json{{"grid", Json{{"spacing", 0.5},
                                    {"counts", Json::array({2, 2, 1})},
                                    {"radius_a", 0.05}}}};
  j["material"] = Json{{"kind", "pec"}};
  const Json report = run_check(parse_config(j, dir), dir);
  CHECK(report.at("pass").get<bool>());
  CHECK(report.at("checks").contains("counting_bound_1_over_d2"));
  CHECK(report.at("checks").contains("solve_residual"));
  CHECK(report.contains("invertibility"));
}

TEST_CASE("fields dump writes header and payload") {
  const std::string dir = fresh_dir("dump");
  const Cluster c = [] {
    Cluster cc;
    cc.radius_a = 0.1;
    cc.centers = {Vec3::Zero()};
    cc.shapes = {BallShape{0.05}};
    return cc;
  }();
  const PlaneWave wave(Vec3(0, 0, 1), CVec3(1, 0, 0), WaveNumber(1.0, 0.0));
  const VolumeFields f = ls_solve(c, {Material::isotropic(1.5)}, wave, 0.0125);
  write_fields_dump(f, dir + "/fields");
  const Json header = read_json(dir + "/fields.json");
  const std::size_t total = header.at("dims").at(0).get<std::size_t>() *
                            header.at("dims").at(1).get<std::size_t>() *
                            header.at("dims").at(2).get<std::size_t>();
  CHECK(fs::file_size(dir + "/fields.bin") == total * 12 * sizeof(double));
  CHECK(header.at("ordering") == "x-fastest");
}

TEST_CASE("command-line interface round trip") {
  const std::string dir = fresh_dir("cli");
  {
    std::ofstream out(dir + "/config.json");
    out << base_config().dump(2);
  }
  const std::string cli = FOLDYLAX_CLI_PATH;
  const std::string cmd =
      cli + " --config " + dir + "/config.json --out " + dir + "/out --verb scatter";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir + "/out/report.json"));
  CHECK(fs::exists(dir + "/out/pattern.csv"));
  CHECK(fs::exists(dir + "/out/solution.json"));

  const std::string check_cmd =
      cli + " --config " + dir + "/config.json --out " + dir + "/chk --verb check";
  CHECK(std::system(check_cmd.c_str()) == 0);

  const std::string bad_cmd = cli + " --config /nonexistent.json --out " + dir + " --verb scatter";
  CHECK(std::system(bad_cmd.c_str()) != 0);

  const std::string tensors_cmd =
      cli + " --config " + dir + "/config.json --out " + dir + "/t --verb tensors";
  CHECK(std::system(tensors_cmd.c_str()) == 0);
  CHECK(fs::exists(dir + "/t/tensors.json"));
}
